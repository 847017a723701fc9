//! Human-readable renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use rakelab::diagonal::{Outcome, Verdict};
use rakelab::problems::{Instance, OmegaColoring, ProblemId};
use rakelab::rakes::{compute_w, Extraction, GoodRake, Rake, WResult};
use rakelab::reductions::{FoPipeline, ReductionReport, RhoAnalysis};
use rakelab::{BinStr, Color, TreeSet};

pub fn string(s: &BinStr) -> String {
    if s.is_empty() {
        "⟨⟩".into()
    } else {
        s.to_string()
    }
}

pub fn set(s: &TreeSet) -> String {
    let items: Vec<String> = s.iter().map(string).collect();
    format!("{{{}}}", items.join(", "))
}

fn list<T: ToString>(v: &[T]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn omega(g: &OmegaColoring) -> String {
    format!("{} ({})^ω", list(&g.prefix), list(&g.period))
}

pub fn w_trace(w: &WResult) -> String {
    let mut s = String::from("trace: W stages\n");
    for st in &w.trace {
        let ws: Vec<Color> = st.w.iter().copied().collect();
        let _ = writeln!(s, "  stage {}: tau = {}, W = {}", st.stage, string(&st.tau), list(&ws));
    }
    let ws: Vec<Color> = w.w.iter().copied().collect();
    let _ = writeln!(s, "  final: W = {}, tau = {}, settled at stage {}", list(&ws), string(&w.tau), w.final_stage);
    s
}

pub fn solve_trace(pid: &ProblemId, inst: &Instance) -> String {
    match inst {
        Instance::Tree { coloring, .. } if matches!(pid, ProblemId::Tt1(_)) => {
            w_trace(&compute_w(coloring, &coloring.range(), &BinStr::EMPTY))
        }
        Instance::Choice { set } => {
            let p = set.ell_profile();
            format!("trace: ℓ(s) for s = 0..{} = {} (settled: {})\n", p.levels.len() - 1, list(&p.levels), p.settled)
        }
        _ => String::new(),
    }
}

/// One line per block, one `node(color)` chain per entry.
pub fn rake_blocks(r: &Rake) -> String {
    let ranks = r.nodes().ranks();
    let k = r.k();
    let mut s = String::new();
    for b in 0..r.height().div_ceil(k) {
        let chains: Vec<String> = r
            .nodes()
            .iter()
            .filter(|x| ranks[x] == b * k)
            .map(|x| {
                let chain = r.chain_of(x).expect("member");
                chain
                    .iter()
                    .map(|y| format!("{}({})", string(y), r.color_at_rank(ranks[y])))
                    .collect::<Vec<_>>()
                    .join(" > ")
            })
            .collect();
        let _ = writeln!(s, "block {b}: {}", chains.join("  |  "));
    }
    s
}

pub fn good_rake(g: &GoodRake, r: &Rake) -> String {
    let w: Vec<Color> = g.w.w.iter().copied().collect();
    let mut s = String::new();
    let _ = writeln!(s, "W = {}, tau = {}", list(&w), string(&g.w.tau));
    let _ = writeln!(s, "C = {}", list(&g.colors));
    let _ = writeln!(s, "root = {}", string(&r.root()));
    let _ = writeln!(s, "height = {} ({} blocks of {})", r.height(), r.height() / r.k(), r.k());
    s.push_str(&rake_blocks(r));
    s
}

pub fn extraction(ex: &Extraction, leaf_colors: &BTreeMap<BinStr, Color>) -> String {
    let mut s = String::from("leaf colors:\n");
    for (l, c) in leaf_colors {
        let _ = writeln!(s, "  {} -> {c}", string(l));
    }
    let _ = writeln!(s, "color = {}", ex.color);
    let _ = writeln!(s, "set = {}", set(&ex.set));
    s
}

pub fn report(r: &ReductionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "reduction: {} ({} -> {})", r.reduction, r.source, r.target);
    let _ = writeln!(s, "instances: {}", r.instances);
    let _ = writeln!(s, "certificates: {}", r.certificates);
    let _ = writeln!(s, "failures: {}", r.failures.len());
    for f in &r.failures {
        let _ = writeln!(s, "  instance {}: {}", f.instance, f.reason);
    }
    let _ = writeln!(s, "result: {}", if r.passed() { "PASSED" } else { "FAILED" });
    s
}

pub fn rho_table(a: &mut RhoAnalysis) -> rakelab::Result<String> {
    let mut s = String::from("trace: stabilization table\n");
    for (d, (limit, from)) in a.limits.iter().zip(&a.stable_from).enumerate() {
        let limit = limit.as_ref().map_or("none".to_string(), string);
        let from = from.map_or("never".to_string(), |n| n.to_string());
        let _ = writeln!(s, "  ρ*_{d} = {limit}, settled from n = {from}");
    }
    for n in 0..a.constant_from() + 2 {
        let _ = writeln!(s, "  n = {n}: guesses {} -> g(n) = {}", list(&a.guesses(n)?), a.g(n));
    }
    let _ = writeln!(s, "  g is constant {} from n = {}", a.eventual, a.constant_from());
    Ok(s)
}

pub fn fo_trace(p: &FoPipeline) -> String {
    let mut s = String::from("trace: first-order pipeline\n");
    let _ = writeln!(s, "  exact: C = {}, m = {}, s = {}", list(&p.exact.colors), p.exact.m, p.exact.s);
    for st in &p.stages {
        let root = st.root.as_ref().map_or("none".to_string(), string);
        let m = st.m.map_or("none".to_string(), |m| m.to_string());
        let _ = writeln!(s, "  t = {}: C_t = {}, root = {root}, m = {m}, d(t) = {}", st.t, list(&st.colors), st.code);
    }
    let _ = writeln!(s, "  d stabilizes from t = {}", p.stable_from);
    s
}

pub fn verdict(name: &str, k: usize, j: usize, v: &Verdict, checked: Option<bool>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "candidate: {name} (k = {k}, j = {j})");
    let stages = match v {
        Verdict::Falsified { transcript } => &transcript.stages,
        Verdict::Inconclusive { stages, .. } => stages,
    };
    for st in stages {
        let _ = writeln!(s, "stage {}", st.c);
        let _ = writeln!(s, "  alpha = {}, sigma = {}", list(&st.alpha), string(&st.sigma));
        let _ = writeln!(s, "  found m = {}, n = {}, S = {} in color {}, x = {}", st.m, st.n, set(&st.set), st.color, st.x);
        let _ = writeln!(s, "  padded prefix = {}", list(&st.alpha_padded));
        match &st.exclusion {
            Some(e) => {
                let _ = writeln!(
                    s,
                    "  exclusion: above {} no good extension takes color {} (leaf {})",
                    string(&e.sigma),
                    e.value,
                    string(&e.leaf)
                );
            }
            None => s.push_str("  exclusion: none\n"),
        }
    }
    match v {
        Verdict::Falsified { transcript: t } => {
            match &t.outcome {
                Outcome::Counterexample { stage, witness, x } => {
                    let c = t.stages[*stage].c;
                    let _ = writeln!(s, "outcome: counterexample at stage {stage}");
                    let _ = writeln!(s, "  g = {}", omega(&t.g));
                    let _ = writeln!(s, "  solution prefix {} in color {}", set(&witness.prefix), witness.color);
                    let _ = writeln!(s, "  x = {x} is returned but has g-color {c}, which occurs only finitely often");
                }
                Outcome::ExclusionChain => {
                    let _ = writeln!(s, "outcome: every color is excluded above the last sigma");
                    let _ = writeln!(s, "  g = {}", omega(&t.g));
                }
            }
            let _ = writeln!(s, "transcript check: {}", if checked == Some(true) { "PASSED" } else { "FAILED" });
            s.push_str("verdict: FALSIFIED\n");
        }
        Verdict::Inconclusive { reason, .. } => {
            let _ = writeln!(s, "reason: {reason}");
            s.push_str("verdict: INCONCLUSIVE\n");
        }
    }
    s
}
