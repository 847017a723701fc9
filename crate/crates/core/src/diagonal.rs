//! The adversary against candidate reductions of `RT¹_k` to `TT¹_j` with
//! `k > j`: stage by stage it builds an `ω`-coloring on which the candidate
//! fails, and records a transcript that can be replayed and checked.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::colorings::{Color, PatternColoring};
use crate::error::{precondition, Budget, Error, Result};
use crate::problems::{extension_cert, verify_tree_cert, OmegaColoring, TreeCert};
use crate::reductions::rt1_to_tt1;
use crate::treecore::{BinStr, TreeSet};

/// A forward map whose output on an eventually periodic coloring is again a
/// pattern coloring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forward {
    /// `Φ(g)(σ) = color`.
    Constant { color: Color },
    /// `Φ(g)(σ) = map[g(|σ|)]`, defined once `g(|σ|)` has been read.
    LengthColor { map: Vec<Color> },
}

impl Forward {
    /// Does `Φ(α)(σ)` converge on the finite prefix `α`?
    pub fn converges(&self, alpha_len: usize, s: &BinStr) -> bool {
        match self {
            Forward::Constant { .. } => true,
            Forward::LengthColor { .. } => s.len() < alpha_len,
        }
    }

    /// `Φ(α)(σ)`, if it converges.
    pub fn eval(&self, alpha: &[Color], s: &BinStr) -> Option<Color> {
        match self {
            Forward::Constant { color } => Some(*color),
            Forward::LengthColor { map } => alpha.get(s.len()).map(|&a| map[a]),
        }
    }

    /// Colors `Φ` can output on a `k`-coloring.
    pub fn palette_used(&self, k: usize) -> Vec<Color> {
        match self {
            Forward::Constant { color } => vec![*color],
            Forward::LengthColor { map } => map[..k.min(map.len())].to_vec(),
        }
    }

    /// `Φ(g)` as a `j`-coloring.
    pub fn pattern(&self, g: &[Color], period: Color, j: usize) -> Result<PatternColoring> {
        match self {
            Forward::Constant { color } => Ok(PatternColoring::constant(j, *color)),
            Forward::LengthColor { map } => {
                let prefix: Vec<u64> = g.iter().map(|&a| map[a] as u64).collect();
                rt1_to_tt1(&OmegaColoring::small(&prefix, &[map[period] as u64]), j)
            }
        }
    }
}

/// A backward map `Ψ(α, S)(x)`, read as the characteristic function of the
/// returned homogeneous set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backward {
    /// `x` is the length of a string of `S`.
    Lengths,
    /// `x` has the parity of the root's length.
    Parity,
    /// `α(x)` equals the forward color of the root of `S`.
    Echo,
}

impl Backward {
    /// `Ψ(α, S)(x)`, if it converges.
    pub fn eval(&self, forward: &Forward, alpha: &[Color], s: &TreeSet, x: usize) -> Option<bool> {
        let root = s.root()?;
        match self {
            Backward::Lengths => Some(s.iter().any(|y| y.len() == x)),
            Backward::Parity => Some(x % 2 == root.len() % 2),
            Backward::Echo => Some(*alpha.get(x)? == forward.eval(alpha, &root)?),
        }
    }
}

type BlackForward = dyn Fn(&[Color], &BinStr, &mut Budget) -> Result<Option<Color>> + Send + Sync;
type BlackBackward = dyn Fn(&[Color], &TreeSet, usize, &mut Budget) -> Result<Option<bool>> + Send + Sync;

/// A candidate pair `(Φ, Ψ)`.
#[derive(Clone)]
pub enum Candidate {
    WhiteBox { name: String, forward: Forward, backward: Backward },
    BlackBox { name: String, forward: Arc<BlackForward>, backward: Arc<BlackBackward> },
}

impl std::fmt::Debug for Candidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Candidate::WhiteBox { name, forward, backward } => {
                f.debug_struct("WhiteBox").field("name", name).field("forward", forward).field("backward", backward).finish()
            }
            Candidate::BlackBox { name, .. } => f.debug_struct("BlackBox").field("name", name).finish(),
        }
    }
}

/// Serialized form of a white-box candidate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub name: String,
    pub forward: Forward,
    pub backward: Backward,
}

impl From<CandidateSpec> for Candidate {
    fn from(s: CandidateSpec) -> Self {
        Candidate::WhiteBox { name: s.name, forward: s.forward, backward: s.backward }
    }
}

impl Candidate {
    pub fn name(&self) -> &str {
        match self {
            Candidate::WhiteBox { name, .. } | Candidate::BlackBox { name, .. } => name,
        }
    }

    pub fn white_box(name: &str, forward: Forward, backward: Backward) -> Self {
        Candidate::WhiteBox { name: name.into(), forward, backward }
    }

    pub fn black_box(
        name: &str,
        forward: impl Fn(&[Color], &BinStr, &mut Budget) -> Result<Option<Color>> + Send + Sync + 'static,
        backward: impl Fn(&[Color], &TreeSet, usize, &mut Budget) -> Result<Option<bool>> + Send + Sync + 'static,
    ) -> Self {
        Candidate::BlackBox { name: name.into(), forward: Arc::new(forward), backward: Arc::new(backward) }
    }

    pub fn spec(&self) -> Option<CandidateSpec> {
        match self {
            Candidate::WhiteBox { name, forward, backward } => {
                Some(CandidateSpec { name: name.clone(), forward: forward.clone(), backward: *backward })
            }
            Candidate::BlackBox { .. } => None,
        }
    }
}

/// Constant forward coloring; backward returns the numbers with the parity
/// of the root's length.
pub fn parity_strawman() -> Candidate {
    Candidate::white_box("parity", Forward::Constant { color: 0 }, Backward::Parity)
}

/// Forward colors by `g(|σ|)` clamped into `j` colors; backward echoes the
/// positions whose `g`-color equals the tree color.
pub fn echo_strawman(k: usize, j: usize) -> Candidate {
    let map = (0..k).map(|d| d.min(j.saturating_sub(1))).collect();
    Candidate::white_box("echo", Forward::LengthColor { map }, Backward::Echo)
}

/// The correct reduction `RT¹_k ≤ TT¹_k` as a candidate: color by `g(|σ|)`
/// and read back the lengths of the solution.
pub fn correct_pair(k: usize) -> Candidate {
    Candidate::white_box("rt1_to_tt1", Forward::LengthColor { map: (0..k).collect() }, Backward::Lengths)
}

// ---------------------------------------------------------------------------
// Transcripts

/// The exclusion found at a stage: above `sigma`, no `c`-good extension of
/// `alpha` makes `Φ` output `value`, the color at `leaf`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub leaf: BinStr,
    pub value: Color,
    pub alpha: Vec<Color>,
    pub sigma: BinStr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryStage {
    pub c: usize,
    pub alpha: Vec<Color>,
    pub sigma: BinStr,
    /// `m` as found by the search, before padding.
    pub m: usize,
    pub n: usize,
    pub set: TreeSet,
    /// Forward color of `set`.
    pub color: Color,
    pub x: usize,
    /// `α_c c^m` after padding so that it covers `x`.
    pub alpha_padded: Vec<Color>,
    pub exclusion: Option<Exclusion>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// `g` is `c`-good at stage `c`; `witness` certifies a solution of
    /// `Φ(g)` extending that stage's set, and `Ψ` puts `x` into the returned
    /// set although `g(x) = c` and `c` occurs only finitely often in `g`.
    Counterexample { stage: usize, witness: TreeCert, x: usize },
    /// Every stage excluded a color, so `Φ(g)` has no color left above the
    /// last `σ`.
    ExclusionChain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryTranscript {
    pub candidate: String,
    pub k: usize,
    pub j: usize,
    pub stages: Vec<AdversaryStage>,
    pub outcome: Outcome,
    pub g: OmegaColoring,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Falsified { transcript: AdversaryTranscript },
    Inconclusive { reason: String, stages: Vec<AdversaryStage> },
}

impl Verdict {
    pub fn is_falsified(&self) -> bool {
        matches!(self, Verdict::Falsified { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Falsified { .. } => "FALSIFIED",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }
}

/// Default number of candidate checks in the stage searches.
pub const DEFAULT_ADVERSARY_BUDGET: u64 = 1_000_000;

/// Largest height of the sets `S` tried by the stage search.
const MAX_SEARCH_HEIGHT: usize = 3;

fn ext(alpha: &[Color], c: Color, m: usize) -> Vec<Color> {
    let mut a = alpha.to_vec();
    a.extend(std::iter::repeat_n(c, m));
    a
}

/// Finds the least `(N, n, m, e, S, x)` in the search order: size bound `N`,
/// then height `n ≤ min(N, 3)`, then `m ≤ N`, then the forward color `e`,
/// then `S` in its order, then `x`.
fn stage_search(
    forward: &Forward,
    backward: &Backward,
    j: usize,
    c: Color,
    alpha: &[Color],
    sigma: &BinStr,
    budget: &mut Budget,
) -> Result<(usize, usize, TreeSet, Color, usize)> {
    for big_n in 1.. {
        for n in 1..=big_n.min(MAX_SEARCH_HEIGHT) {
            for m in 0..=big_n {
                let a = ext(alpha, c, m);
                let f = forward.pattern(&a, c, j)?;
                let len_bound = sigma.len() + big_n;
                for e in 0..j {
                    for s in f.enumerate_mono(sigma, n, len_bound, e) {
                        budget.charge(1)?;
                        if !s.iter().all(|y| forward.converges(a.len(), y)) {
                            continue;
                        }
                        let top = a.len() + len_bound + 2;
                        if let Some(x) = (alpha.len()..top).find(|&x| backward.eval(forward, &a, &s, x) == Some(true)) {
                            return Ok((m, n, s, e, x));
                        }
                    }
                }
            }
        }
    }
    unreachable!("the search loop is unbounded")
}

/// Decides the exclusion step exactly for length-color transducers: above
/// `σ ⪰ λ`, every `c`-good `β ⪰ α'` keeps `Φ(β)` off the value at `λ`. Among
/// the leaves in length-lex order, the first with such a `σ` is used, and
/// `σ` is the least `λ0^i` that works; `α_{c+1} = α'`.
fn decide_exclusion(forward: &Forward, k: usize, c: Color, padded: &[Color], set: &TreeSet) -> Option<Exclusion> {
    let Forward::LengthColor { map } = forward else { return None };
    for leaf in set.leaves().iter() {
        let value = map[padded[leaf.len()]];
        if ((c + 1)..k).any(|d| map[d] == value) {
            continue;
        }
        let i = (1..=padded.len().saturating_sub(leaf.len()))
            .find(|&i| (leaf.len() + i..padded.len()).all(|p| map[padded[p]] != value))
            .unwrap_or(1);
        return Some(Exclusion { leaf: *leaf, value, alpha: padded.to_vec(), sigma: leaf.concat(&BinStr::zeros(i)) });
    }
    None
}

/// Runs the staged construction against a candidate for `RT¹_k ≤ TT¹_j`.
pub fn run_adversary(cand: &Candidate, k: usize, j: usize, budget: u64) -> Result<Verdict> {
    if j == 0 || k <= j {
        return precondition(format!("the adversary needs k > j ≥ 1, got k = {k}, j = {j}"));
    }
    let (forward, backward) = match cand {
        Candidate::WhiteBox { forward, backward, .. } => (forward, backward),
        Candidate::BlackBox { .. } => {
            return Ok(Verdict::Inconclusive {
                reason: "the exclusion step quantifies over infinitely many colorings and cannot be certified for a black-box candidate".into(),
                stages: Vec::new(),
            })
        }
    };
    if let Forward::LengthColor { map } = forward {
        if map.len() < k {
            return precondition(format!("forward map covers {} colors, need {k}", map.len()));
        }
    }
    if forward.palette_used(k).iter().any(|&e| e >= j) {
        return Ok(Verdict::Inconclusive {
            reason: format!("the forward map outputs colors outside {j}, so it is no candidate for a reduction to TT1_{j}"),
            stages: Vec::new(),
        });
    }
    let mut budget = Budget::new(budget);
    let mut alpha: Vec<Color> = Vec::new();
    let mut sigma = BinStr::EMPTY;
    let mut stages = Vec::new();
    for c in 0..j {
        let found = stage_search(forward, backward, j, c, &alpha, &sigma, &mut budget);
        let (m, n, set, color, x) = match found {
            Ok(w) => w,
            Err(Error::BudgetExceeded(b)) => {
                return Ok(Verdict::Inconclusive { reason: format!("stage {c} search exceeded the budget of {b}"), stages })
            }
            Err(e) => return Err(e),
        };
        // Pad so that the padded prefix covers x.
        let padded_m = if m + alpha.len() > x { m } else { x - alpha.len() + 1 };
        let padded = ext(&alpha, c, padded_m);
        let exclusion = decide_exclusion(forward, k, c, &padded, &set);
        stages.push(AdversaryStage {
            c,
            alpha: alpha.clone(),
            sigma,
            m,
            n,
            set: set.clone(),
            color,
            x,
            alpha_padded: padded.clone(),
            exclusion: exclusion.clone(),
        });
        match exclusion {
            Some(ex) => {
                alpha = ex.alpha;
                sigma = ex.sigma;
            }
            None => {
                for d in (c + 1)..k {
                    let f = forward.pattern(&padded, d, j)?;
                    if let Some(witness) = extension_cert(&f, &set, color)? {
                        let g = omega(&padded, d);
                        let transcript = AdversaryTranscript {
                            candidate: cand.name().to_string(),
                            k,
                            j,
                            stages,
                            outcome: Outcome::Counterexample { stage: c, witness, x },
                            g,
                        };
                        return Ok(Verdict::Falsified { transcript });
                    }
                }
                return Ok(Verdict::Inconclusive {
                    reason: format!("stage {c}: no exclusion and no extendable counterexample"),
                    stages,
                });
            }
        }
    }
    let g = omega(&alpha, j);
    Ok(Verdict::Falsified {
        transcript: AdversaryTranscript { candidate: cand.name().to_string(), k, j, stages, outcome: Outcome::ExclusionChain, g },
    })
}

fn omega(prefix: &[Color], tail: Color) -> OmegaColoring {
    OmegaColoring::small(&prefix.iter().map(|&c| c as u64).collect::<Vec<_>>(), &[tail as u64])
}

/// Replays the transcript and re-checks every claim in it exactly.
pub fn check_transcript(t: &AdversaryTranscript, cand: &Candidate) -> Result<bool> {
    let Candidate::WhiteBox { forward, backward, .. } = cand else {
        return Err(Error::Unverifiable("transcripts of black-box candidates".into()));
    };
    if t.j == 0 || t.k <= t.j || t.stages.is_empty() {
        return Ok(false);
    }
    // Deterministic replay.
    let replay = match run_adversary(cand, t.k, t.j, DEFAULT_ADVERSARY_BUDGET)? {
        Verdict::Falsified { transcript } => transcript,
        Verdict::Inconclusive { .. } => return Ok(false),
    };
    if &replay != t {
        return Ok(false);
    }
    // Independent checks of each stage.
    let (k, j) = (t.k, t.j);
    let (mut alpha, mut sigma) = (Vec::new(), BinStr::EMPTY);
    for (c, st) in t.stages.iter().enumerate() {
        if st.c != c || st.alpha != alpha || st.sigma != sigma {
            return Ok(false);
        }
        let Some(root) = st.set.root() else { return Ok(false) };
        if st.set.iso_to_full() != Some(st.n) || !sigma.is_prefix_of(&root) {
            return Ok(false);
        }
        let a = ext(&st.alpha, c, st.m);
        if !st.set.iter().all(|y| forward.eval(&a, y) == Some(st.color)) {
            return Ok(false);
        }
        if st.x < st.alpha.len() || backward.eval(forward, &a, &st.set, st.x) != Some(true) {
            return Ok(false);
        }
        let p = &st.alpha_padded;
        if !(p.starts_with(&a) || a.starts_with(p)) || p.len() <= st.x || p[st.x] != c || p[st.alpha.len()..].iter().any(|&v| v != c) {
            return Ok(false);
        }
        match &st.exclusion {
            Some(ex) => {
                if !exclusion_holds(forward, k, c, p, &st.set, ex) {
                    return Ok(false);
                }
                alpha = ex.alpha.clone();
                sigma = ex.sigma;
            }
            None => {
                if c + 1 != t.stages.len() {
                    return Ok(false);
                }
            }
        }
    }
    match &t.outcome {
        Outcome::Counterexample { stage, witness, x } => {
            let st = &t.stages[*stage];
            let g = &t.g;
            let c = st.c;
            // g extends the padded prefix and is c-good.
            let p = &st.alpha_padded;
            let prefix_ok = (0..p.len()).all(|i| g.at(i) == &crate::problems::nat(p[i] as u64));
            let good = (p.len()..p.len() + g.prefix.len() + g.period.len())
                .all(|i| crate::problems::nat_to_u64(g.at(i)).is_some_and(|v| (v as usize) > c && (v as usize) < k));
            if !prefix_ok || !good || g.recurrent().contains(&crate::problems::nat(c as u64)) {
                return Ok(false);
            }
            let tail = crate::problems::nat_to_u64(&g.period[0]).expect("small") as Color;
            let f = forward.pattern(p, tail, j)?;
            let extends = st.set.iter().all(|y| witness.prefix.contains(y)) && witness.prefix == st.set;
            Ok(extends
                && witness.color == st.color
                && verify_tree_cert(&f, witness)?
                && *x == st.x
                && backward.eval(forward, p, &st.set, *x) == Some(true)
                && p[*x] == c)
        }
        Outcome::ExclusionChain => {
            // Φ(g) at σ_j must take one of the excluded values.
            let tail = crate::problems::nat_to_u64(&t.g.period[0]).expect("small") as Color;
            let f = forward.pattern(&alpha, tail, j)?;
            let excluded: Vec<Color> = t.stages.iter().filter_map(|s| s.exclusion.as_ref().map(|e| e.value)).collect();
            Ok(excluded.len() == j && excluded.contains(&f.eval(&sigma)))
        }
    }
}

fn exclusion_holds(forward: &Forward, k: usize, c: Color, padded: &[Color], set: &TreeSet, ex: &Exclusion) -> bool {
    let Forward::LengthColor { map } = forward else { return false };
    if !set.leaves().contains(&ex.leaf) || !ex.leaf.is_prefix_of(&ex.sigma) || ex.alpha != padded {
        return false;
    }
    let value = map[padded[ex.leaf.len()]];
    value == ex.value
        && ((c + 1)..k).all(|d| map[d] != value)
        && (ex.sigma.len()..padded.len()).all(|p| map[padded[p]] != value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn falsified(v: Verdict) -> AdversaryTranscript {
        match v {
            Verdict::Falsified { transcript } => transcript,
            Verdict::Inconclusive { reason, .. } => panic!("inconclusive: {reason}"),
        }
    }

    #[test]
    fn parity_is_defeated_in_one_stage() {
        let cand = parity_strawman();
        let t = falsified(run_adversary(&cand, 2, 1, DEFAULT_ADVERSARY_BUDGET).unwrap());
        assert_eq!(t.stages.len(), 1);
        assert!(matches!(t.outcome, Outcome::Counterexample { stage: 0, .. }));
        assert!(check_transcript(&t, &cand).unwrap());
    }

    #[test]
    fn echo_is_defeated_in_two_stages() {
        let cand = echo_strawman(3, 2);
        let t = falsified(run_adversary(&cand, 3, 2, DEFAULT_ADVERSARY_BUDGET).unwrap());
        assert_eq!(t.stages.len(), 2);
        assert!(t.stages[0].exclusion.is_some());
        assert!(check_transcript(&t, &cand).unwrap());
    }

    #[test]
    fn tampering_is_detected() {
        let cand = echo_strawman(3, 2);
        let mut t = falsified(run_adversary(&cand, 3, 2, DEFAULT_ADVERSARY_BUDGET).unwrap());
        t.stages[1].sigma = BinStr::from_index(5);
        assert!(!check_transcript(&t, &cand).unwrap());
        let mut t = falsified(run_adversary(&cand, 3, 2, DEFAULT_ADVERSARY_BUDGET).unwrap());
        t.stages.clear();
        t.j = 0;
        assert!(!check_transcript(&t, &cand).unwrap());
    }

    #[test]
    fn the_correct_pair_is_never_falsified() {
        for (k, j) in [(2, 1), (3, 1), (3, 2), (4, 3)] {
            let v = run_adversary(&correct_pair(k), k, j, DEFAULT_ADVERSARY_BUDGET).unwrap();
            assert!(!v.is_falsified());
        }
        assert!(run_adversary(&correct_pair(2), 2, 2, DEFAULT_ADVERSARY_BUDGET).is_err());
    }
}
