//! Subcommand implementations. Every command assembles its whole output in
//! memory so that identical inputs give identical bytes.

use std::path::Path;

use rakelab::corpus::corpus_for;
use rakelab::diagonal::{check_transcript, run_adversary, Candidate, CandidateSpec, Verdict};
use rakelab::format::{self, parse_certificate, parse_instance, render_certificate, render_instance};
use rakelab::problems::{solve, verify, Functional, Instance, ProblemId};
use rakelab::rakes::{build_good_rake, exact_leaf_colors, extract_mono, is_good, truncate_rake, validate_rake, Rake};
use rakelab::reductions::{fo_pipeline, verify_reduction, Reduce, Reduction, RhoAnalysis};
use rakelab::{Budget, Error, PatternColoring};
use serde::Serialize;

use crate::text;
use crate::{Cli, Command, Format, RakeAction};

pub const EXIT_OK: u8 = 0;
pub const EXIT_REFUTED: u8 = 2;
pub const EXIT_UNVERIFIABLE: u8 = 3;
pub const EXIT_PARSE: u8 = 4;

/// Everything a run writes, with its exit code.
#[derive(Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

/// Maps library errors to exit codes.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Invalid(_) => EXIT_PARSE,
        Error::BudgetExceeded(_) | Error::Unverifiable(_) => EXIT_UNVERIFIABLE,
        Error::PreconditionViolated(_) | Error::MemberNotFound(_) => EXIT_REFUTED,
    }
}

pub fn run(cli: &Cli) -> Output {
    let mut out = Output::default();
    match dispatch(cli, &mut out) {
        Ok(code) => out.code = code,
        Err(e) => {
            out.stderr.push_str(&format!("error: {e}\n"));
            out.code = exit_code(&e);
        }
    }
    out
}

fn read(path: &Path) -> rakelab::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn problem(s: &str) -> rakelab::Result<ProblemId> {
    s.parse()
}

fn reduction(from: &str, to: &str) -> rakelab::Result<Reduction> {
    let (a, b) = (problem(from)?, problem(to)?);
    Reduction::between(&a, &b).ok_or_else(|| Error::Parse(format!("no shipped reduction from {a} to {b}")))
}

fn tree_instance(path: &Path) -> rakelab::Result<PatternColoring> {
    match parse_instance(&read(path)?)?.1 {
        Instance::Tree { coloring, .. } => Ok(coloring),
        _ => Err(Error::Parse("expected a pattern-coloring instance".into())),
    }
}

fn machine<T: Serialize>(kind: &str, pid: Option<&ProblemId>, body: &T) -> rakelab::Result<String> {
    format::render(kind, pid, body)
}

fn header(kind: &str) -> String {
    format!("rakelab {kind} v{}\n", format::FORMAT_VERSION)
}

fn dispatch(cli: &Cli, out: &mut Output) -> rakelab::Result<u8> {
    match &cli.command {
        Command::Solve { problem: p, instance } => {
            let pid = problem(p)?;
            let (_, inst) = parse_instance(&read(instance)?)?;
            let cert = solve(&pid, &inst, &mut Budget::new(cli.budget))?;
            out.stdout = render_certificate(&pid, &cert)?;
            if cli.trace {
                out.stderr.push_str(&text::solve_trace(&pid, &inst));
            }
            Ok(EXIT_OK)
        }
        Command::Verify { problem: p, instance, certificate } => {
            let pid = problem(p)?;
            let (_, inst) = parse_instance(&read(instance)?)?;
            let (_, cert) = parse_certificate(&read(certificate)?)?;
            let (verdict, note, code) = match verify(&pid, &inst, &cert, &mut Budget::new(cli.budget)) {
                Ok(true) => ("VERIFIED", String::new(), EXIT_OK),
                Ok(false) => ("REFUTED", String::new(), EXIT_REFUTED),
                Err(e @ (Error::Unverifiable(_) | Error::BudgetExceeded(_))) => ("UNVERIFIABLE", e.to_string(), EXIT_UNVERIFIABLE),
                Err(e) => return Err(e),
            };
            out.stdout = match cli.format {
                Format::Machine => {
                    #[derive(Serialize)]
                    struct V<'a> {
                        verdict: &'a str,
                        note: &'a str,
                    }
                    machine("verdict", Some(&pid), &V { verdict, note: &note })?
                }
                Format::Text if note.is_empty() => format!("{}{verdict}\n", header("verdict")),
                Format::Text => format!("{}{verdict}\n{note}\n", header("verdict")),
            };
            Ok(code)
        }
        Command::Reduce { from, to, instance } => {
            let r = reduction(from, to)?;
            let (_, x) = parse_instance(&read(instance)?)?;
            let fx = r.forward(&x)?;
            out.stdout = render_instance(&r.target(), &fx)?;
            if cli.trace {
                out.stderr.push_str(&reduce_trace(&r, &x, cli.budget)?);
            }
            Ok(EXIT_OK)
        }
        Command::Backtranslate { from, to, instance, certificate } => {
            let r = reduction(from, to)?;
            let (_, x) = parse_instance(&read(instance)?)?;
            let (_, y) = parse_certificate(&read(certificate)?)?;
            let fx = r.forward(&x)?;
            let z = r.backward(&x, &fx, &y)?;
            out.stdout = render_certificate(&r.source(), &z)?;
            match verify(&r.source(), &x, &z, &mut Budget::new(cli.budget)) {
                Ok(true) => Ok(EXIT_OK),
                Ok(false) => {
                    out.stderr.push_str("the translated certificate is refuted\n");
                    Ok(EXIT_REFUTED)
                }
                Err(e) => {
                    out.stderr.push_str(&format!("the translated certificate could not be checked: {e}\n"));
                    Ok(exit_code(&e))
                }
            }
        }
        Command::VerifyReduction { from, to, instances } => {
            let r = reduction(from, to)?;
            let corpus = if instances.is_empty() {
                corpus_for(&r)
            } else {
                instances.iter().map(|p| Ok(parse_instance(&read(p)?)?.1)).collect::<rakelab::Result<Vec<_>>>()?
            };
            let report = verify_reduction(&r, &corpus, cli.budget);
            out.stdout = match cli.format {
                Format::Machine => machine("report", None, &report)?,
                Format::Text => format!("{}{}", header("report"), text::report(&report)),
            };
            Ok(if report.passed() { EXIT_OK } else { EXIT_REFUTED })
        }
        Command::Rake { action } => rake(cli, action, out),
        Command::Diag { candidate, k, j } => {
            let (_, spec): (_, CandidateSpec) = format::parse("candidate", &read(candidate)?)?;
            let cand = Candidate::from(spec);
            let verdict = run_adversary(&cand, *k, *j, cli.budget)?;
            let checked = match &verdict {
                Verdict::Falsified { transcript } => Some(check_transcript(transcript, &cand)?),
                Verdict::Inconclusive { .. } => None,
            };
            out.stdout = match cli.format {
                Format::Machine => {
                    #[derive(Serialize)]
                    struct D<'a> {
                        verdict: &'a Verdict,
                        transcript_checked: Option<bool>,
                    }
                    machine("transcript", None, &D { verdict: &verdict, transcript_checked: checked })?
                }
                Format::Text => format!("{}{}", header("transcript"), text::verdict(cand.name(), *k, *j, &verdict, checked)),
            };
            Ok(match (&verdict, checked) {
                (Verdict::Falsified { .. }, Some(true)) => EXIT_OK,
                (Verdict::Falsified { .. }, _) => EXIT_REFUTED,
                (Verdict::Inconclusive { .. }, _) => EXIT_UNVERIFIABLE,
            })
        }
    }
}

fn rake(cli: &Cli, action: &RakeAction, out: &mut Output) -> rakelab::Result<u8> {
    match action {
        RakeAction::Build { instance } => {
            let f = tree_instance(instance)?;
            let good = build_good_rake(&f);
            let r = good
                .rake
                .prefix(cli.max_blocks)
                .ok_or_else(|| Error::PreconditionViolated(format!("could not build {} blocks", cli.max_blocks)))?;
            out.stdout = match cli.format {
                Format::Machine => machine("rake", None, &r)?,
                Format::Text => format!("{}{}", header("rake-diagram"), text::good_rake(&good, &r)),
            };
            if cli.trace {
                out.stderr.push_str(&text::w_trace(&good.w));
            }
            Ok(EXIT_OK)
        }
        RakeAction::Validate { instance, rake } => {
            let f = tree_instance(instance)?;
            let (_, r): (_, Rake) = format::parse("rake", &read(rake)?)?;
            let (line, code) = match validate_rake(&f, &r) {
                Ok(()) if is_good(&f, &r) => ("VALID (good)".to_string(), EXIT_OK),
                Ok(()) => ("VALID (not good)".to_string(), EXIT_OK),
                Err(Error::Invalid(m)) => (format!("INVALID: {m}"), EXIT_REFUTED),
                Err(e) => return Err(e),
            };
            out.stdout = format!("{}{line}\n", header("rake-check"));
            Ok(code)
        }
        RakeAction::Truncate { instance, functional, cap } => {
            let f = tree_instance(instance)?;
            let gamma: Functional = functional.parse()?;
            let good = build_good_rake(&f);
            let budget = cli.budget;
            let t = truncate_rake(&good.rake, |s| Ok(gamma.apply_tree(s, &mut Budget::new(budget))?.is_some()), *cap)?;
            out.stdout = match cli.format {
                Format::Machine => machine("truncation", None, &t)?,
                Format::Text => format!("{}functional: {gamma}\nm = {}\n{}", header("truncation"), t.m, text::rake_blocks(&t.rake)),
            };
            Ok(EXIT_OK)
        }
        RakeAction::Extract { instance, rake } => {
            let f = tree_instance(instance)?;
            let (_, r): (_, Rake) = format::parse("rake", &read(rake)?)?;
            validate_rake(&f, &r)?;
            let leaf_colors = exact_leaf_colors(&f, &r)?;
            let ex = extract_mono(&f, &r, &leaf_colors)?;
            out.stdout = match cli.format {
                Format::Machine => machine("extraction", None, &ex)?,
                Format::Text => format!("{}{}", header("extraction"), text::extraction(&ex, &leaf_colors)),
            };
            Ok(EXIT_OK)
        }
    }
}

fn reduce_trace(r: &Reduction, x: &Instance, budget: u64) -> rakelab::Result<String> {
    match (r, x) {
        (Reduction::Tt1kToD2k { k }, Instance::Tree { coloring, .. }) => {
            let mut a = RhoAnalysis::new(coloring, *k)?;
            text::rho_table(&mut a)
        }
        (Reduction::FoTt1nToRt1n { cap, .. }, Instance::FirstOrder { inner, gamma, .. }) => match &**inner {
            Instance::Tree { coloring, .. } => Ok(text::fo_trace(&fo_pipeline(coloring, gamma, *cap, budget)?)),
            _ => Ok(String::new()),
        },
        _ => Ok(String::new()),
    }
}
