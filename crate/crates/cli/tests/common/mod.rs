//! The demo script shared by the golden and acceptance suites.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

/// Name and arguments of every demo command; run from the fixtures directory.
pub const DEMO: &[(&str, &[&str])] = &[
    ("solve_tt1_constant0", &["solve", "TT1_2", "tt1_constant0.txt"]),
    ("solve_tcn", &["solve", "TC_N", "tcn_stabilized.txt"]),
    ("solve_stcn", &["solve", "sTC_N", "stcn_exhaustive.txt"]),
    ("solve_trace", &["--trace", "solve", "TT1_2", "tt1_split.txt"]),
    ("verify_ok", &["verify", "TT1_2", "tt1_constant0.txt", "tt1_constant0.cert"]),
    ("verify_wrong_color", &["verify", "TT1_2", "tt1_constant0.txt", "tt1_color1.cert"]),
    ("verify_program", &["verify", "TT1_2", "tt1_program.txt", "program.cert"]),
    ("verify_machine", &["--format", "machine", "verify", "TT1_2", "tt1_constant0.txt", "tt1_constant0.cert"]),
    ("reduce_d2", &["--trace", "reduce", "--from", "TT1_2", "--to", "D2_2", "--instance", "tt1_constant0.txt"]),
    ("reduce_rt1", &["reduce", "--from", "RT1_3", "--to", "TT1_3", "--instance", "rt1_wheel.txt"]),
    ("reduce_fo", &["--trace", "reduce", "--from", "FO(TT1_N)", "--to", "RT1_N", "--instance", "fo_split_root.txt"]),
    (
        "backtranslate_d2",
        &["backtranslate", "--from", "TT1_2", "--to", "D2_2", "--instance", "tt1_constant0.txt", "--certificate", "d2_constant0.cert"],
    ),
    ("verify_reduction_tcn", &["verify-reduction", "--from", "TC_N", "--to", "V0"]),
    ("verify_reduction_fo", &["--format", "machine", "verify-reduction", "--from", "FO(TT1_N)", "--to", "RT1_N"]),
    ("rake_build", &["--trace", "rake", "build", "--instance", "tt1_split.txt"]),
    ("rake_build_machine", &["--format", "machine", "rake", "build", "--instance", "tt1_split.txt"]),
    ("rake_validate", &["rake", "validate", "--instance", "tt1_split.txt", "--rake", "split.rake"]),
    ("rake_truncate", &["rake", "truncate", "--instance", "tt1_split.txt", "--functional", "Antichain(2)"]),
    ("rake_extract", &["rake", "extract", "--instance", "tt1_split.txt", "--rake", "split.rake"]),
    ("diag_parity", &["diag", "--candidate", "parity.cand", "--k", "2", "--j", "1"]),
    ("diag_echo", &["diag", "--candidate", "echo.cand", "--k", "3", "--j", "2"]),
    ("diag_correct", &["diag", "--candidate", "rt1_to_tt1.cand", "--k", "3", "--j", "2"]),
    ("diag_parity_machine", &["--format", "machine", "diag", "--candidate", "parity.cand", "--k", "2", "--j", "1"]),
    ("parse_error", &["solve", "TT1_2", "garbage.txt"]),
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Exit code, stdout and stderr of one run, as one byte string.
pub fn run(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_rakelab"))
        .args(args)
        .current_dir(fixtures())
        .env_remove("RAKELAB_BUDGET")
        .output()
        .expect("the binary runs");
    let mut bytes = format!("exit: {}\n--- stdout\n", out.status.code().unwrap_or(-1)).into_bytes();
    bytes.extend_from_slice(&out.stdout);
    bytes.extend_from_slice(b"--- stderr\n");
    bytes.extend_from_slice(&out.stderr);
    bytes
}
