//! Golden-file suite: every demo command is run twice and compared byte for
//! byte with itself and with the checked-in transcript. Set
//! `UPDATE_GOLDEN=1` to rewrite the transcripts.

mod common;

use common::{golden_dir, run, DEMO};

#[test]
fn demo_script_matches_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatches = Vec::new();
    for (name, args) in DEMO {
        let first = run(args);
        assert_eq!(first, run(args), "{name} is not byte-deterministic");
        let path = golden_dir().join(format!("{name}.out"));
        if update {
            std::fs::write(&path, &first).expect("golden file written");
        } else if std::fs::read(&path).ok().as_deref() != Some(first.as_slice()) {
            mismatches.push(*name);
        }
    }
    assert!(mismatches.is_empty(), "golden mismatches: {mismatches:?}");
}

#[test]
fn documented_exit_codes() {
    let code = |args: &[&str]| String::from_utf8(run(args)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(code(&["verify", "TT1_2", "tt1_constant0.txt", "tt1_constant0.cert"]), "exit: 0");
    assert_eq!(code(&["verify", "TT1_2", "tt1_constant0.txt", "tt1_color1.cert"]), "exit: 2");
    assert_eq!(code(&["verify", "TT1_2", "tt1_program.txt", "program.cert"]), "exit: 3");
    assert_eq!(code(&["solve", "TT1_2", "garbage.txt"]), "exit: 4");
    assert_eq!(code(&["no-such-command"]), "exit: 4");
    let out = String::from_utf8(run(&["solve", "TC_N", "tcn_stabilized.txt"])).unwrap();
    assert!(out.contains("\"value\": 1"));
    let out = String::from_utf8(run(&["solve", "sTC_N", "stcn_exhaustive.txt"])).unwrap();
    assert!(out.contains("\"value\": -1"));
    let out = String::from_utf8(run(&["rake", "build", "--instance", "tt1_split.txt"])).unwrap();
    assert!(out.contains("C = [1]") && out.contains("root = 1\n"));
    let out = String::from_utf8(run(&["diag", "--candidate", "parity.cand", "--k", "2", "--j", "1"])).unwrap();
    assert!(out.contains("verdict: FALSIFIED"));
}

#[test]
fn budget_comes_from_the_environment_unless_given() {
    let bin = env!("CARGO_BIN_EXE_rakelab");
    let go = |env: Option<&str>, extra: &[&str]| {
        let mut c = std::process::Command::new(bin);
        c.current_dir(common::fixtures()).args(extra).args(["verify", "TT1_2", "tt1_program.txt", "program.cert"]);
        match env {
            Some(v) => c.env("RAKELAB_BUDGET", v),
            None => c.env_remove("RAKELAB_BUDGET"),
        };
        c.output().unwrap()
    };
    let tiny = go(Some("1"), &[]);
    assert!(String::from_utf8_lossy(&tiny.stdout).contains("budget of 1 steps exceeded"));
    let overridden = go(Some("1"), &["--budget", "1000"]);
    assert!(String::from_utf8_lossy(&overridden.stdout).contains("partial check"));
}
