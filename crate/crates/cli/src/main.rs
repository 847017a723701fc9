//! `rakelab` command-line front end.

mod commands;
mod text;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Default step budget when neither `--budget` nor `RAKELAB_BUDGET` is set.
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Default number of rake blocks built by `rake build`.
pub const DEFAULT_MAX_BLOCKS: usize = 3;

#[derive(Parser, Debug)]
#[command(name = "rakelab", version, about = "Tree pigeonhole problems, rakes and executable reductions")]
pub struct Cli {
    /// Step budget for budgeted evaluation and searches.
    #[arg(long, global = true, env = "RAKELAB_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Number of rake blocks to build.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_BLOCKS)]
    pub max_blocks: usize,
    /// Write stage logs to standard error.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Output format of reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable text after the header line.
    Text,
    /// JSON after the header line; accepted back by other subcommands.
    Machine,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve an instance and print a certificate.
    Solve {
        /// Problem id, for example TT1_2 or TC_N.
        problem: String,
        instance: PathBuf,
    },
    /// Check a certificate: exit 0 verified, 2 refuted, 3 unverifiable.
    Verify { problem: String, instance: PathBuf, certificate: PathBuf },
    /// Apply the forward map of a reduction.
    Reduce {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Translate a target certificate back to the source problem.
    Backtranslate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Check a reduction on a corpus: the built-in one unless instances are given.
    VerifyReduction {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Source instance files.
        #[arg(long = "instance")]
        instances: Vec<PathBuf>,
    },
    /// Build, validate, truncate, or extract from rakes.
    Rake {
        #[command(subcommand)]
        action: RakeAction,
    },
    /// Run the adversary against a candidate reduction of RT1_k to TT1_j.
    Diag {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        j: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum RakeAction {
    /// Build the good rake of a TT1 instance.
    Build {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Check a rake against the coloring of a TT1 instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        rake: PathBuf,
    },
    /// Truncate the good rake at the least height where a functional halts.
    Truncate {
        #[arg(long)]
        instance: PathBuf,
        /// Root or Antichain(j).
        #[arg(long)]
        functional: String,
        /// Largest number of blocks tried.
        #[arg(long, default_value_t = rakelab::reductions::DEFAULT_TRUNCATION_CAP)]
        cap: usize,
    },
    /// Extract a monochromatic subrake, using the exact leaf colors.
    Extract {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        rake: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = commands::run(&cli);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.stdout.as_bytes());
    let _ = stdout.flush();
    let mut stderr = std::io::stderr().lock();
    let _ = stderr.write_all(out.stderr.as_bytes());
    ExitCode::from(out.code)
}
