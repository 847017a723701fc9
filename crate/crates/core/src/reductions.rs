//! Executable reductions between problems: forward instance maps, backward
//! solution maps, brute-force target certificates, and a harness that checks
//! the two maps against each other.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorings::{Color, ConeBehavior, Dfa, PatternColoring, ProgramColoring};
use crate::error::{precondition, Budget, Error, Result};
use crate::problems::{
    decide_extension, dense_prefix, extension_cert, nat, nat_to_u64, solve, solve_tt1, tuple_code, tuple_decode,
    verify, Bound, CoEnum, ConeCodes, FiniteOmegaTree, Functional, Growth, Instance, LimitColoring, MembershipWord,
    Nat, OmegaColoring, ProblemId, SolutionCert, Tail, TreeCert, DEFAULT_PREFIX_HEIGHT,
};
use crate::rakes::{
    build_good_rake, compute_w, natural_witness, staged_w, truncate_rake, w_convergence_stage, extract_mono, LazyRake,
    Rake, Schedule, StagedStep, WResult,
};
use crate::treecore::{BinStr, TreeSet};

// ---------------------------------------------------------------------------
// Branch codes

/// First components of the pairs coded by a branch-coding string
/// `0^{γ(0)}1 … 0^{γ(m−1)}1 0^s`, where each `γ(i)` is a Cantor pair.
pub fn decode_branch_code(s: &BinStr) -> Vec<u64> {
    let mut out = Vec::new();
    let mut zeros = 0u64;
    for b in s.bits() {
        if b {
            out.push(unpair(zeros).0);
            zeros = 0;
        } else {
            zeros += 1;
        }
    }
    out
}

/// The branch-coding string of the pairs `(α(i), β(i))` followed by `pad`
/// zeros.
pub fn encode_branch(alpha: &[u64], beta: &[u64], pad: usize) -> BinStr {
    let mut bits = Vec::new();
    for (a, b) in alpha.iter().zip(beta) {
        bits.extend(std::iter::repeat_n(false, pair(*a, *b) as usize));
        bits.push(true);
    }
    bits.extend(std::iter::repeat_n(false, pad));
    BinStr::from_bits(&bits)
}

pub fn pair(a: u64, b: u64) -> u64 {
    (a + b) * (a + b + 1) / 2 + b
}

pub fn unpair(z: u64) -> (u64, u64) {
    let mut w = (((8 * z + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    let b = z - w * (w + 1) / 2;
    (w - b, b)
}

// ---------------------------------------------------------------------------
// The reductions

/// A reduction: a forward map on instances and a backward map taking the
/// source instance and a target solution to a source solution.
pub trait Reduce: Send + Sync {
    fn name(&self) -> String;
    fn source(&self) -> ProblemId;
    fn target(&self) -> ProblemId;
    fn forward(&self, x: &Instance) -> Result<Instance>;
    /// `fx` must be `forward(x)`; it is passed along so that backward maps
    /// need not recompute it.
    fn backward(&self, x: &Instance, fx: &Instance, y: &SolutionCert) -> Result<SolutionCert>;
}

/// Default truncation cap for the first-order pipeline.
pub const DEFAULT_TRUNCATION_CAP: usize = 4;

/// Default step budget for one functional application.
pub const DEFAULT_FUNCTIONAL_BUDGET: u64 = 100_000;

/// Every shipped reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// `RT¹ ≤ TT¹` by coloring each string with the color of its length.
    Rt1ToTt1 { bound: Bound },
    /// `WF ≤ TT¹-Ext₂` through the branch-coding coloring of a tree.
    WfToTt1Ext,
    /// `TT¹-Ext_k ≤ WF`, at desk scale.
    Tt1ExtToWf { k: usize },
    V1ToTcn,
    TcnToV0,
    V4ToStcn,
    StcnToV2,
    IsFiniteToStcn,
    /// `TT¹_k ≤ D²_k` through the limits of the avoiding extensions `ρ`.
    Tt1kToD2k { k: usize },
    /// `¹TT¹_ℕ ≤ RT¹_ℕ` through good rakes.
    FoTt1nToRt1n { cap: usize, budget: u64 },
}

impl Reduction {
    /// The shipped reduction from `from` to `to`, if any.
    pub fn between(from: &ProblemId, to: &ProblemId) -> Option<Reduction> {
        use ProblemId as P;
        let r = match (from, to) {
            (P::Rt1(a), P::Tt1(b)) if a == b => Reduction::Rt1ToTt1 { bound: *a },
            (P::WellFounded, P::Tt1Ext(2)) => Reduction::WfToTt1Ext,
            (P::Tt1Ext(k), P::WellFounded) => Reduction::Tt1ExtToWf { k: *k },
            (P::V(1), P::TotalChoice) => Reduction::V1ToTcn,
            (P::TotalChoice, P::V(0)) => Reduction::TcnToV0,
            (P::V(4), P::StrongTotalChoice) => Reduction::V4ToStcn,
            (P::StrongTotalChoice, P::V(2)) => Reduction::StcnToV2,
            (P::IsFinite, P::StrongTotalChoice) => Reduction::IsFiniteToStcn,
            (P::Tt1(Bound::Fixed(k)), P::D2(j)) if k == j => Reduction::Tt1kToD2k { k: *k },
            (P::FirstOrder(inner), P::Rt1(Bound::Unbounded)) if **inner == P::Tt1(Bound::Unbounded) => {
                Reduction::FoTt1nToRt1n { cap: DEFAULT_TRUNCATION_CAP, budget: DEFAULT_FUNCTIONAL_BUDGET }
            }
            _ => return None,
        };
        Some(r)
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source(), self.target())
    }
}

impl FromStr for Reduction {
    type Err = Error;

    /// Parses `FROM->TO`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once("->").ok_or_else(|| Error::Parse(format!("expected FROM->TO, got {s:?}")))?;
        let (from, to): (ProblemId, ProblemId) = (a.trim().parse()?, b.trim().parse()?);
        Reduction::between(&from, &to).ok_or_else(|| Error::Parse(format!("no reduction from {from} to {to}")))
    }
}

impl Reduce for Reduction {
    fn name(&self) -> String {
        let base = match self {
            Reduction::Rt1ToTt1 { .. } => "rt1_to_tt1",
            Reduction::WfToTt1Ext => "wf_to_tt1ext",
            Reduction::Tt1ExtToWf { .. } => "tt1ext_to_wf",
            Reduction::V1ToTcn => "v1_to_tcn",
            Reduction::TcnToV0 => "tcn_to_v0",
            Reduction::V4ToStcn => "v4_to_stcn",
            Reduction::StcnToV2 => "stcn_to_v2",
            Reduction::IsFiniteToStcn => "isfinite_to_stcn",
            Reduction::Tt1kToD2k { .. } => "tt1k_to_d2k",
            Reduction::FoTt1nToRt1n { .. } => "fo_tt1n_to_rt1n",
        };
        base.to_string()
    }

    fn source(&self) -> ProblemId {
        match self {
            Reduction::Rt1ToTt1 { bound } => ProblemId::Rt1(*bound),
            Reduction::WfToTt1Ext => ProblemId::WellFounded,
            Reduction::Tt1ExtToWf { k } => ProblemId::Tt1Ext(*k),
            Reduction::V1ToTcn => ProblemId::V(1),
            Reduction::TcnToV0 => ProblemId::TotalChoice,
            Reduction::V4ToStcn => ProblemId::V(4),
            Reduction::StcnToV2 => ProblemId::StrongTotalChoice,
            Reduction::IsFiniteToStcn => ProblemId::IsFinite,
            Reduction::Tt1kToD2k { k } => ProblemId::Tt1(Bound::Fixed(*k)),
            Reduction::FoTt1nToRt1n { .. } => make_first_order(ProblemId::Tt1(Bound::Unbounded)),
        }
    }

    fn target(&self) -> ProblemId {
        match self {
            Reduction::Rt1ToTt1 { bound } => ProblemId::Tt1(*bound),
            Reduction::WfToTt1Ext => ProblemId::Tt1Ext(2),
            Reduction::Tt1ExtToWf { .. } => ProblemId::WellFounded,
            Reduction::V1ToTcn => ProblemId::TotalChoice,
            Reduction::TcnToV0 => ProblemId::V(0),
            Reduction::V4ToStcn | Reduction::IsFiniteToStcn => ProblemId::StrongTotalChoice,
            Reduction::StcnToV2 => ProblemId::V(2),
            Reduction::Tt1kToD2k { k } => ProblemId::D2(*k),
            Reduction::FoTt1nToRt1n { .. } => ProblemId::Rt1(Bound::Unbounded),
        }
    }

    fn forward(&self, x: &Instance) -> Result<Instance> {
        match (self, x) {
            (Reduction::Rt1ToTt1 { bound }, Instance::Omega { bound: declared, coloring }) => {
                let palette = match bound {
                    Bound::Fixed(k) => *k,
                    Bound::Declared => declared.ok_or_else(|| Error::PreconditionViolated("RT1_+ needs a declared bound".into()))? as usize,
                    Bound::Unbounded => max_color(coloring)? + 1,
                };
                let tree_bound = matches!(bound, Bound::Declared).then_some(palette);
                Ok(Instance::Tree { bound: tree_bound, coloring: rt1_to_tt1(coloring, palette)? })
            }
            (Reduction::WfToTt1Ext, Instance::OmegaTree { tree }) => {
                let (coloring, prefix) = wf_to_tt1ext(tree);
                Ok(Instance::Extension { coloring, prefix })
            }
            (Reduction::Tt1ExtToWf { k }, Instance::Extension { coloring, prefix }) => {
                if coloring.palette().is_some_and(|p| p > *k) {
                    if let ProgramColoring::Pattern(f) = coloring {
                        if f.range().iter().any(|&c| c >= *k) {
                            return precondition(format!("coloring uses a color outside {k}"));
                        }
                    }
                }
                Ok(Instance::OmegaTree { tree: tt1ext_to_wf(coloring, prefix)? })
            }
            (Reduction::V1ToTcn, Instance::Tree { coloring, .. }) => Ok(Instance::choice(v1_to_tcn(two_coloring(coloring)?))),
            (Reduction::V4ToStcn, Instance::Tree { coloring, .. }) => Ok(Instance::choice(v4_to_stcn(two_coloring(coloring)?))),
            (Reduction::TcnToV0, Instance::Choice { set }) => Ok(Instance::Tree { bound: None, coloring: tcn_to_v0(set)? }),
            (Reduction::StcnToV2, Instance::Choice { set }) => Ok(Instance::Tree { bound: None, coloring: stcn_to_v2(set)? }),
            (Reduction::IsFiniteToStcn, Instance::Word { set }) => Ok(Instance::choice(isfinite_to_stcn(set))),
            (Reduction::Tt1kToD2k { k }, Instance::Tree { coloring, .. }) => {
                Ok(Instance::Limit { coloring: RhoAnalysis::new(coloring, *k)?.limit_coloring()? })
            }
            (Reduction::FoTt1nToRt1n { cap, budget }, Instance::FirstOrder { .. }) => {
                let (f, gamma) = first_order_parts(x)?;
                let p = fo_pipeline(f, gamma, *cap, *budget)?;
                Ok(Instance::Omega { bound: None, coloring: p.d })
            }
            _ => precondition(format!("{} does not take this instance kind", self.name())),
        }
    }

    fn backward(&self, x: &Instance, fx: &Instance, y: &SolutionCert) -> Result<SolutionCert> {
        let number = |y: &SolutionCert| match y {
            SolutionCert::Number { value } => Ok(*value),
            _ => precondition("expected a number"),
        };
        let pair = |y: &SolutionCert| match y {
            SolutionCert::Pair { i, sigma } => Ok((*i, *sigma)),
            _ => precondition("expected a pair"),
        };
        match self {
            Reduction::Rt1ToTt1 { .. } => {
                let (Instance::Omega { coloring: g, .. }, SolutionCert::Tree(t)) = (x, y) else {
                    return precondition("expected an RT1 instance and a tree certificate");
                };
                Ok(SolutionCert::Word { set: g.positions(&nat(t.color as u64)) })
            }
            Reduction::WfToTt1Ext | Reduction::Tt1ExtToWf { .. } => Ok(SolutionCert::number(1 - number(y)?)),
            Reduction::V1ToTcn => {
                let v = number(y)?;
                if v < 0 {
                    return precondition("total choice answers are naturals");
                }
                let v = v as u64;
                Ok(SolutionCert::pair((v % 2) as u8, BinStr::from_index(v / 2)))
            }
            Reduction::V4ToStcn => match number(y)? {
                -1 => Ok(SolutionCert::pair(0, BinStr::EMPTY)),
                v if v >= 0 => Ok(SolutionCert::pair(1, BinStr::from_index(v as u64))),
                v => precondition(format!("{v} is not an answer")),
            },
            Reduction::TcnToV0 => {
                let Instance::Choice { set } = x else { return precondition("expected a choice instance") };
                let (_, sigma) = pair(y)?;
                Ok(SolutionCert::number(crate::problems::ell(set, sigma.len()) as i64))
            }
            Reduction::StcnToV2 => {
                let Instance::Choice { set } = x else { return precondition("expected a choice instance") };
                match pair(y)? {
                    (0, _) => Ok(SolutionCert::number(-1)),
                    (_, sigma) => Ok(SolutionCert::number(crate::problems::ell(set, sigma.len()) as i64)),
                }
            }
            Reduction::IsFiniteToStcn => Ok(SolutionCert::number(if number(y)? == -1 { 0 } else { 1 })),
            Reduction::Tt1kToD2k { k } => {
                let (Instance::Tree { coloring, .. }, SolutionCert::Word { set }) = (x, y) else {
                    return precondition("expected a TT1 instance and a subset of ω");
                };
                Ok(SolutionCert::Tree(RhoAnalysis::new(coloring, *k)?.backward(set)?))
            }
            Reduction::FoTt1nToRt1n { budget, .. } => {
                let (f, gamma) = first_order_parts(x)?;
                let (Instance::Omega { coloring: d, .. }, SolutionCert::Word { set }) = (fx, y) else {
                    return precondition("expected an RT1 instance and a subset of ω");
                };
                fo_backward(f, gamma, d, set, *budget)
            }
        }
    }
}

/// The first-order part `FO(P)` of a problem.
pub fn make_first_order(p: ProblemId) -> ProblemId {
    ProblemId::FirstOrder(Box::new(p))
}

fn max_color(g: &OmegaColoring) -> Result<usize> {
    let top = g.range().into_iter().next_back().expect("nonempty period");
    nat_to_u64(&top).map(|c| c as usize).ok_or_else(|| Error::PreconditionViolated(format!("color {top} is too large")))
}

fn two_coloring(f: &PatternColoring) -> Result<&PatternColoring> {
    if f.range().iter().any(|&c| c > 1) {
        return precondition("expected a 2-coloring");
    }
    Ok(f)
}

fn first_order_parts(x: &Instance) -> Result<(&PatternColoring, &Functional)> {
    let Instance::FirstOrder { inner, delta, gamma } = x else {
        return precondition("expected a first-order instance");
    };
    if *delta != Functional::Identity {
        return precondition(format!("instance functional {delta} does not yield a pattern coloring"));
    }
    match &**inner {
        Instance::Tree { coloring, .. } => Ok((coloring, gamma)),
        _ => precondition("the inner instance must be a pattern coloring"),
    }
}

/// Longest prefix of an `ω`-coloring that is spelled out level by level.
const MAX_SPINE: usize = 14;

/// `f(σ) = g(|σ|)`. The prefix of `g` is written into a decision set of
/// complete levels; below it every cone cycles through the period.
pub fn rt1_to_tt1(g: &OmegaColoring, palette: usize) -> Result<PatternColoring> {
    let small = |c: &Nat| {
        nat_to_u64(c)
            .map(|v| v as Color)
            .filter(|&v| v < palette)
            .ok_or_else(|| Error::PreconditionViolated(format!("color {c} outside palette {palette}")))
    };
    let prefix: Vec<Color> = g.prefix.iter().map(small).collect::<Result<_>>()?;
    let period: Vec<Color> = g.period.iter().map(small).collect::<Result<_>>()?;
    let (depth, p) = (prefix.len(), period.len());
    if depth > MAX_SPINE {
        return precondition(format!("prefix longer than {MAX_SPINE}"));
    }
    let wheel: Vec<Color> = (0..p).map(|j| period[(j + p - depth % p) % p]).collect();
    if depth == 0 {
        return PatternColoring::uniform(palette, ConeBehavior::length_mod(&wheel));
    }
    let color_at = |l: usize| if l < depth { prefix[l] } else { period[(l - depth) % p] };
    PatternColoring::complete(palette, depth, |s| color_at(s.len()), |_| ConeBehavior::length_mod(&wheel))
}

/// The branch-coding coloring of `T` with the one-node prefix `{⟨⟩}`.
pub fn wf_to_tt1ext(t: &FiniteOmegaTree) -> (ProgramColoring, TreeSet) {
    (ProgramColoring::TreeCode(t.clone()), TreeSet::singleton(BinStr::EMPTY))
}

/// A tree that is ill-founded exactly when the prefix extends. The
/// extendability question is answered by the exact analysis, so only
/// colorings with decidable extendability are accepted.
pub fn tt1ext_to_wf(f: &ProgramColoring, prefix: &TreeSet) -> Result<FiniteOmegaTree> {
    let growth = if decide_extension(f, prefix)? {
        Growth::InfinitePath { prefix: vec![], period: vec![0] }
    } else {
        Growth::None
    };
    FiniteOmegaTree::new([vec![]], growth)
}

/// The codes `2·index(σ) + i` of the cones of constant color `i`.
pub fn v1_to_tcn(f: &PatternColoring) -> CoEnum {
    CoEnum::new(&[], Tail::Sieve { keep: ConeCodes::Tagged { coloring: f.clone() } })
}

/// The indices of the cones of constant color 1.
pub fn v4_to_stcn(f: &PatternColoring) -> CoEnum {
    CoEnum::new(&[], Tail::Sieve { keep: ConeCodes::Colored { coloring: f.clone(), color: 1 } })
}

/// The set of upper bounds of `X`, enumerated by its complement.
pub fn isfinite_to_stcn(x: &MembershipWord) -> CoEnum {
    if x.is_infinite() {
        return CoEnum::new(&[], Tail::Exhaustive);
    }
    let top = x.members_below(x.prefix.len() + x.period.len()).last().copied();
    let stages: Vec<u64> = top.map_or(Vec::new(), |m| (1..=m as u64).collect());
    CoEnum::new(&stages, Tail::Stabilized)
}

/// `f(⟨⟩) = 0` and `f(σi) = i` when `ℓ(|σ|) ≠ ℓ(|σ| + 1)`, else `f(σ)`.
/// States are (level clamped at the profile horizon, current color).
pub fn tcn_to_v0(e: &CoEnum) -> Result<PatternColoring> {
    let profile = e.ell_profile();
    let h = profile.horizon();
    let id = |l: usize, c: usize| 2 * l + c;
    let mut colors = Vec::new();
    let mut next = Vec::new();
    for l in 0..=h {
        for c in 0..2 {
            colors.push(c);
            let up = (l + 1).min(h);
            let step = |b: usize| id(up, if profile.changes_at(l) { b } else { c });
            next.push([step(0), step(1)]);
        }
    }
    PatternColoring::uniform(2, ConeBehavior::Automaton { dfa: Dfa { start: id(0, 0), colors, next } })
}

/// `f(0^s) = 0`; off the spine a string starts with color 1 and turns to 0
/// for good once `ℓ` changes at or beyond the level where it left.
pub fn stcn_to_v2(e: &CoEnum) -> Result<PatternColoring> {
    let profile = e.ell_profile();
    let h = profile.horizon();
    let spine = |l: usize| l;
    let off = |l: usize, flag: bool| h + 1 + 2 * l + flag as usize;
    let mut colors = vec![0; 3 * (h + 1)];
    let mut next = vec![[0, 0]; 3 * (h + 1)];
    for l in 0..=h {
        let up = (l + 1).min(h);
        let change = profile.changes_at(l);
        next[spine(l)] = [spine(up), off(up, change)];
        for flag in [false, true] {
            colors[off(l, flag)] = if flag { 0 } else { 1 };
            let to = off(up, flag || change);
            next[off(l, flag)] = [to, to];
        }
    }
    PatternColoring::uniform(2, ConeBehavior::Automaton { dfa: Dfa { start: spine(0), colors, next } })
}

// ---------------------------------------------------------------------------
// TT¹_k into D²_k

/// Safety bound on searches that provably terminate.
const SEARCH_LIMIT: usize = 1 << 14;

/// The strings `ρ_{c,n}` and their limits for one coloring and color count.
///
/// `ρ_{−1,n} = ⟨⟩` and `ρ_{c,n}` is the length-lex least extension of
/// `ρ_{c−1,n}` with no extension of length below `n` colored `c`.
#[derive(Debug)]
pub struct RhoAnalysis {
    f: PatternColoring,
    k: usize,
    /// `ρ*_d = lim_n ρ_{d,n}` for `d < k − 1`, while it exists.
    pub limits: Vec<Option<BinStr>>,
    /// Least `n0` with `ρ_{d,m} = ρ*_d` for every `m ≥ n0`.
    pub stable_from: Vec<Option<usize>>,
    /// The eventual value of `g`.
    pub eventual: Color,
    memo: HashMap<usize, Vec<BinStr>>,
}

impl RhoAnalysis {
    pub fn new(f: &PatternColoring, k: usize) -> Result<Self> {
        if k == 0 {
            return precondition("TT1_k needs k ≥ 1");
        }
        if f.range().iter().any(|&c| c >= k) {
            return precondition(format!("coloring uses a color outside {k}"));
        }
        let mut a = RhoAnalysis { f: f.clone(), k, limits: Vec::new(), stable_from: Vec::new(), eventual: 0, memo: HashMap::new() };
        let mut base = Some(BinStr::EMPTY);
        for d in 0..k - 1 {
            let limit = base.and_then(|b| a.f.least_extension_lacking(&b, &BTreeSet::from([d]), None));
            a.limits.push(limit);
            base = limit;
        }
        for d in 0..k - 1 {
            let prev = if d == 0 { Some(0) } else { a.stable_from[d - 1] };
            let sf = match (prev, a.limits[d]) {
                (Some(lo), Some(limit)) => {
                    let n1 = (lo..lo + SEARCH_LIMIT)
                        .find(|&n| a.rho(d, n) == limit)
                        .ok_or_else(|| Error::Invalid("ρ did not reach its limit".into()))?;
                    let mut n0 = n1;
                    while n0 > 0 && a.rho(d, n0 - 1) == limit {
                        n0 -= 1;
                    }
                    Some(n0)
                }
                _ => None,
            };
            a.stable_from.push(sf);
        }
        a.eventual = (0..k - 1).find(|&d| a.stable_from[d].is_none()).unwrap_or(k - 1);
        Ok(a)
    }

    /// `ρ_{d,n}`.
    pub fn rho(&mut self, d: usize, n: usize) -> BinStr {
        if !self.memo.contains_key(&n) {
            let mut r = BinStr::EMPTY;
            let row = (0..self.k.saturating_sub(1))
                .map(|c| {
                    r = self.f.least_avoiding_extension(&r, c, n);
                    r
                })
                .collect();
            self.memo.insert(n, row);
        }
        self.memo[&n][d]
    }

    /// `g(n)`: the length of the run of colors `d` from 0 whose `ρ_{d,·}`
    /// has settled by `n`, capped at `k − 1`.
    pub fn g(&self, n: usize) -> Color {
        (0..self.k - 1).find(|&d| self.stable_from[d].is_none_or(|s| n < s)).unwrap_or(self.k - 1)
    }

    /// Position from which `g` is constant.
    pub fn constant_from(&self) -> usize {
        (0..self.eventual).filter_map(|d| self.stable_from[d]).max().unwrap_or(0)
    }

    /// Stage-`t` guesses for position `n`, from `t = n` until they reach
    /// `g(n)`. The guess is the largest `c < k` such that `ρ_{d,m} = ρ_{d,n}`
    /// for every `d < c` and `n ≤ m ≤ t`.
    pub fn guesses(&mut self, n: usize) -> Result<Vec<Color>> {
        let target = self.g(n);
        let mut cur = self.k - 1;
        let mut row = vec![cur];
        let mut t = n;
        while cur != target {
            t += 1;
            if t > n + SEARCH_LIMIT {
                return Err(Error::Invalid(format!("guesses for {n} did not settle")));
            }
            if let Some(d) = (0..cur).find(|&d| self.rho(d, t) != self.rho(d, n)) {
                cur = d;
            }
            row.push(cur);
        }
        Ok(row)
    }

    /// The `Δ⁰₂` coloring `g`, tabulated two positions past the point where
    /// it becomes constant.
    pub fn limit_coloring(&mut self) -> Result<LimitColoring> {
        let rows = (0..self.constant_from() + 2).map(|n| self.guesses(n)).collect::<Result<_>>()?;
        Ok(LimitColoring { rows, tail: OmegaColoring::small(&[], &[self.eventual as u64]) })
    }

    /// From a homogeneous `M`: `c = g(min M)` is dense above `ρ*_{c−1}`.
    pub fn backward(&self, m: &MembershipWord) -> Result<TreeCert> {
        if self.k == 1 {
            return Ok(solve_tt1(&self.f));
        }
        let n = m.min().ok_or_else(|| Error::PreconditionViolated("empty homogeneous set".into()))?;
        let c = self.g(n);
        let rho = if c == 0 { BinStr::EMPTY } else { self.limits[c - 1].expect("settled colors have limits") };
        dense_prefix(&self.f, c, &rho, DEFAULT_PREFIX_HEIGHT)
    }
}

// ---------------------------------------------------------------------------
// First-order TT¹_ℕ into RT¹_ℕ

/// The exact triple `(C, R, s)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoExact {
    pub colors: Vec<Color>,
    pub w: WResult,
    pub m: usize,
    pub rake: Rake,
    /// Extraction halts for every choice of leaf colors once the rake is
    /// complete, so no stage of the `W` approximations is needed.
    pub s: usize,
}

/// One stage `t` of the approximation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoStage {
    pub t: usize,
    pub colors: Vec<Color>,
    pub root: Option<BinStr>,
    pub m: Option<usize>,
    pub rake: Option<Rake>,
    /// `c_i` for the leaves of the rake in lexicographic order.
    pub leaf_colors: Vec<Color>,
    pub s: usize,
    #[serde(with = "nat_string")]
    pub code: Nat,
}

mod nat_string {
    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(n: &Nat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nat, D::Error> {
        let s = String::deserialize(d)?;
        Nat::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// The whole forward computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoPipeline {
    pub exact: FoExact,
    pub stages: Vec<FoStage>,
    /// `d(t) = d(stable_from)` for every later `t`.
    pub stable_from: usize,
    pub d: OmegaColoring,
}

/// Leaves in lexicographic order.
pub fn lex_leaves(r: &Rake) -> Vec<BinStr> {
    let mut leaves: Vec<BinStr> = r.nodes().leaves().iter().copied().collect();
    leaves.sort_by(|a, b| a.lex_cmp(b));
    leaves
}

/// `d(t) = ⟨|C|, C…, |R|, index(r)…, c_0 … c_{n−1}⟩` with the nodes of `R`
/// in length-lex order, as a tuple code.
pub fn encode_stage(colors: &[Color], rake: Option<&Rake>, leaf_colors: &[Color]) -> Nat {
    let mut items = vec![nat(colors.len() as u64)];
    items.extend(colors.iter().map(|&c| nat(c as u64)));
    match rake {
        None => items.push(nat(0)),
        Some(r) => {
            items.push(nat(r.nodes().len() as u64));
            items.extend(r.nodes().iter().map(|x| nat(x.index())));
            items.extend(leaf_colors.iter().map(|&c| nat(c as u64)));
        }
    }
    tuple_code(&items)
}

/// Inverse of [`encode_stage`] for stages that carry a rake.
pub fn decode_stage(code: &Nat) -> Result<(Rake, BTreeMap<BinStr, Color>)> {
    let bad = || Error::Invalid(format!("{code} does not code a rake stage"));
    let items: Vec<u64> = tuple_decode(code).ok_or_else(bad)?.iter().map(nat_to_u64).collect::<Option<_>>().ok_or_else(bad)?;
    let k = *items.first().ok_or_else(bad)? as usize;
    let colors: Vec<Color> = items.get(1..1 + k).ok_or_else(bad)?.iter().map(|&c| c as Color).collect();
    let n = *items.get(1 + k).ok_or_else(bad)? as usize;
    if n == 0 {
        return Err(bad());
    }
    let nodes: TreeSet = items.get(2 + k..2 + k + n).ok_or_else(bad)?.iter().map(|&i| BinStr::from_index(i)).collect();
    let rake = Rake::new(colors, nodes)?;
    let leaf_colors = &items[2 + k + n..];
    let leaves = lex_leaves(&rake);
    if leaves.len() != leaf_colors.len() {
        return Err(bad());
    }
    Ok((rake, leaves.into_iter().zip(leaf_colors.iter().map(|&c| c as Color)).collect()))
}

fn halts(gamma: &Functional, budget: u64) -> impl FnMut(&TreeSet) -> Result<bool> + '_ {
    move |s| Ok(gamma.apply_tree(s, &mut Budget::new(budget))?.is_some())
}

/// Least `m ≤ limit` whose rake prefix exists and satisfies `phi` on every
/// `S ⊴ R` of height `m`; `None` if some prefix is missing first.
fn staged_truncation(r: &LazyRake, phi: &mut impl FnMut(&TreeSet) -> Result<bool>, limit: usize) -> Result<Option<(usize, Rake)>> {
    for m in 1..=limit {
        let Some(rake) = r.prefix(m) else { return Ok(None) };
        let mut all = true;
        for s in rake.subrakes(m)? {
            if !phi(&s)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some((m, rake)));
        }
    }
    Ok(None)
}

/// Runs the exact search for `(C, R, s)`, bounds the stage from which every
/// approximation has converged, and tabulates `d` up to that stage.
pub fn fo_pipeline(f: &PatternColoring, gamma: &Functional, cap: usize, budget: u64) -> Result<FoPipeline> {
    let good = build_good_rake(f);
    let trunc = truncate_rake(&good.rake, halts(gamma, budget), cap)?;
    let colors = good.colors.clone();
    let cset: BTreeSet<Color> = colors.iter().copied().collect();
    let exact = FoExact { colors: colors.clone(), w: good.w.clone(), m: trunc.m, rake: trunc.rake.clone(), s: 0 };

    let range = f.range();
    let mut bound = w_convergence_stage(f, &good.w).max(trunc.m);
    bound = bound.max(exact.rake.nodes().iter().map(|x| x.len()).max().unwrap_or(0));
    for leaf in exact.rake.nodes().leaves().iter() {
        bound = bound.max(w_convergence_stage(f, &compute_w(f, &cset, leaf)));
    }

    let top = staged_w(f, &range, &BinStr::EMPTY, &Schedule::Natural, bound);
    let mut leaf_streams: HashMap<(Vec<Color>, BinStr), Vec<StagedStep>> = HashMap::new();
    let mut phi = halts(gamma, budget);
    let mut stages = Vec::with_capacity(bound + 1);
    for t in 0..=bound {
        let c_t: Vec<Color> = range.difference(&top[t].value).copied().collect();
        let tau = natural_witness(f, &range, &BinStr::EMPTY, t, &good.w);
        let root = f.least_extension_with_color(&tau, c_t[0], false).filter(|r| r.len() <= t);
        let truncated = match root {
            Some(r) => {
                let lazy = LazyRake::new(f, c_t.clone(), r)?.with_length_bound(t);
                staged_truncation(&lazy, &mut phi, t.min(cap))?
            }
            None => None,
        };
        let (m, rake) = truncated.map_or((None, None), |(m, r)| (Some(m), Some(r)));
        let mut leaf_colors = Vec::new();
        if let Some(r) = &rake {
            let ct_set: BTreeSet<Color> = c_t.iter().copied().collect();
            for leaf in lex_leaves(r) {
                let stream = leaf_streams
                    .entry((c_t.clone(), leaf))
                    .or_insert_with(|| staged_w(f, &ct_set, &leaf, &Schedule::Natural, bound));
                let v = &stream[t].value;
                leaf_colors.push(*ct_set.difference(v).next().expect("repair keeps a color"));
            }
        }
        let code = encode_stage(&c_t, rake.as_ref(), &leaf_colors);
        stages.push(FoStage { t, colors: c_t, root, m, rake, leaf_colors, s: 0, code });
    }
    let codes: Vec<Nat> = stages.iter().map(|s| s.code.clone()).collect();
    let d = OmegaColoring::new(codes[..bound].to_vec(), vec![codes[bound].clone()])?;
    Ok(FoPipeline { exact, stages, stable_from: bound, d })
}

/// Decodes `d(min M)`, extracts a monochromatic `S` from the coded rake and
/// returns `Γ(S)` with a certificate that `S` extends to a solution.
pub fn fo_backward(f: &PatternColoring, gamma: &Functional, d: &OmegaColoring, m: &MembershipWord, budget: u64) -> Result<SolutionCert> {
    let n = m.min().ok_or_else(|| Error::PreconditionViolated("empty homogeneous set".into()))?;
    let (rake, leaf_colors) = decode_stage(d.at(n))?;
    let ex = extract_mono(f, &rake, &leaf_colors)?;
    let value = gamma
        .apply_tree(&ex.set, &mut Budget::new(budget))?
        .ok_or_else(|| Error::Unverifiable(format!("{gamma} does not halt on the extracted set")))?;
    let cert = extension_cert(f, &ex.set, ex.color)?
        .ok_or_else(|| Error::Invalid("extracted set does not extend to a solution".into()))?;
    Ok(SolutionCert::Value { value, witness: Some(Box::new(SolutionCert::Tree(cert))) })
}

// ---------------------------------------------------------------------------
// Brute-force target certificates

/// Longest `σ` tried for `⟨i, σ⟩` certificates.
pub const PAIR_SIGMA_BOUND: usize = 6;

/// Every infinite membership word with prefix length at most `max_prefix`
/// and period length at most `max_period`.
pub fn small_words(max_prefix: usize, max_period: usize) -> Vec<MembershipWord> {
    let mut out = Vec::new();
    for plen in 0..=max_prefix {
        for pbits in 0u32..(1 << plen) {
            let prefix: Vec<bool> = (0..plen).map(|i| (pbits >> i) & 1 == 1).collect();
            for qlen in 1..=max_period {
                for qbits in 1u32..(1 << qlen) {
                    let period: Vec<bool> = (0..qlen).map(|i| (qbits >> i) & 1 == 1).collect();
                    out.push(MembershipWord { prefix: prefix.clone(), period });
                }
            }
        }
    }
    out
}

/// For each recurrent color and each position `n0` of it before the period
/// repeats: `{n0}` together with every later position of that color.
fn tail_words(g: &OmegaColoring) -> Vec<MembershipWord> {
    let h = g.prefix.len() + g.period.len();
    let mut out = Vec::new();
    for c in g.recurrent() {
        let period: Vec<bool> = (h..h + g.period.len()).map(|n| g.at(n) == &c).collect();
        for n0 in (0..h).filter(|&n| g.at(n) == &c) {
            let prefix = (0..h).map(|n| n == n0 || (n > n0 && g.at(n) == &c)).collect();
            out.push(MembershipWord { prefix, period: period.clone() });
        }
    }
    out
}

fn omega_candidates(g: &OmegaColoring) -> Vec<SolutionCert> {
    let mut words = small_words((g.prefix.len() + 2).min(6), 2);
    words.extend(tail_words(g));
    words.into_iter().map(|set| SolutionCert::Word { set }).collect()
}

fn numbers(lo: i64, hi: i64) -> Vec<SolutionCert> {
    (lo..=hi).map(SolutionCert::number).collect()
}

/// A bounded superset of the certificates for `inst`, built without
/// reference to any solver.
pub fn candidate_certs(pid: &ProblemId, inst: &Instance) -> Result<Vec<SolutionCert>> {
    let out = match (pid, inst) {
        (ProblemId::Rt1(_), Instance::Omega { coloring, .. }) => omega_candidates(coloring),
        (ProblemId::D2(_), Instance::Limit { coloring }) => omega_candidates(&coloring.limit()),
        (ProblemId::Tt1(_), Instance::Tree { coloring: f, .. }) => {
            let mut out = Vec::new();
            for c in 0..f.palette() {
                for h in 1..=2 {
                    for s in f.enumerate_mono(&BinStr::EMPTY, h, f.depth() + 3, c) {
                        if let Some(cert) = extension_cert(f, &s, c)? {
                            out.push(SolutionCert::Tree(cert));
                        }
                    }
                }
            }
            out
        }
        (ProblemId::V(_), Instance::Tree { .. }) => (0..2u8)
            .flat_map(|i| BinStr::all_up_to(PAIR_SIGMA_BOUND).map(move |s| SolutionCert::pair(i, s)))
            .collect(),
        (ProblemId::ClosedChoice | ProblemId::TotalChoice | ProblemId::StrongTotalChoice, Instance::Choice { set }) => {
            let top = set.stages.len() as i64 + set.stages.iter().copied().max().unwrap_or(0) as i64 + 2;
            numbers(-1, top)
        }
        (ProblemId::IsFinite | ProblemId::WellFounded | ProblemId::Tt1Ext(_), _) => numbers(-1, 2),
        _ => return Err(Error::Unverifiable(format!("no certificate enumeration for {pid}"))),
    };
    Ok(out)
}

/// The candidates that verify.
pub fn target_certs(pid: &ProblemId, inst: &Instance, budget: u64) -> Result<Vec<SolutionCert>> {
    let mut out = Vec::new();
    for y in candidate_certs(pid, inst)? {
        if verify(pid, inst, &y, &mut Budget::new(budget))? {
            out.push(y);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification harness

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub instance: usize,
    /// The target certificate, as JSON, when the failure concerns one.
    pub certificate: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub reduction: String,
    pub source: String,
    pub target: String,
    pub instances: usize,
    /// Target certificates that verified and were translated back.
    pub certificates: usize,
    pub failures: Vec<Failure>,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct InstanceOutcome {
    certificates: usize,
    failures: Vec<Failure>,
}

fn check_instance(r: &dyn Reduce, index: usize, x: &Instance, budget: u64) -> InstanceOutcome {
    let fail = |certificate: Option<String>, reason: String| Failure { instance: index, certificate, reason };
    let (source, target) = (r.source(), r.target());
    let fx = match r.forward(x) {
        Ok(fx) => fx,
        Err(e) => return InstanceOutcome { certificates: 0, failures: vec![fail(None, format!("forward: {e}"))] },
    };
    let solved = solve(&target, &fx, &mut Budget::new(budget))
        .and_then(|y| verify(&target, &fx, &y, &mut Budget::new(budget)));
    if !matches!(solved, Ok(true)) {
        let why = solved.err().map_or("solver output refuted".to_string(), |e| e.to_string());
        return InstanceOutcome { certificates: 0, failures: vec![fail(None, format!("target instance rejected: {why}"))] };
    }
    let ys = match target_certs(&target, &fx, budget) {
        Ok(ys) => ys,
        Err(e) => return InstanceOutcome { certificates: 0, failures: vec![fail(None, format!("enumeration: {e}"))] },
    };
    let mut failures = Vec::new();
    for y in &ys {
        let json = || Some(serde_json::to_string(y).expect("certificates serialize"));
        match r.backward(x, &fx, y).and_then(|z| verify(&source, x, &z, &mut Budget::new(budget))) {
            Ok(true) => {}
            Ok(false) => failures.push(fail(json(), "backward output refuted".into())),
            Err(e) => failures.push(fail(json(), format!("backward: {e}"))),
        }
    }
    InstanceOutcome { certificates: ys.len(), failures }
}

/// Checks, for every instance, that the forward image is a valid target
/// instance and that every brute-force target certificate translates back
/// to a verified source certificate.
pub fn verify_reduction(r: &dyn Reduce, corpus: &[Instance], budget: u64) -> ReductionReport {
    let outcomes: Vec<InstanceOutcome> =
        corpus.par_iter().enumerate().map(|(i, x)| check_instance(r, i, x, budget)).collect();
    ReductionReport {
        reduction: r.name(),
        source: r.source().to_string(),
        target: r.target().to_string(),
        instances: corpus.len(),
        certificates: outcomes.iter().map(|o| o.certificates).sum(),
        failures: outcomes.into_iter().flat_map(|o| o.failures).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorings::tests::split_example;
    use crate::problems::{decide_a, ell, verify_v};
    use crate::treecore::bs;

    const B: u64 = 100_000;

    #[test]
    fn pairing_roundtrip() {
        for a in 0..40 {
            for b in 0..40 {
                assert_eq!(unpair(pair(a, b)), (a, b));
            }
        }
        assert_eq!(decode_branch_code(&encode_branch(&[3, 0, 2], &[1, 5, 0], 4)), vec![3, 0, 2]);
    }

    #[test]
    fn rt1_examples() {
        let f = rt1_to_tt1(&OmegaColoring::small(&[], &[0]), 1).unwrap();
        assert_eq!(f.range(), BTreeSet::from([0]));
        let g = OmegaColoring::small(&[2], &[1]);
        let f = rt1_to_tt1(&g, 3).unwrap();
        for s in BinStr::all_up_to(6) {
            assert_eq!(nat(f.eval(&s) as u64), *g.at(s.len()));
        }
        let r = Reduction::Rt1ToTt1 { bound: Bound::Fixed(3) };
        let x = Instance::Omega { bound: None, coloring: g };
        let fx = r.forward(&x).unwrap();
        let Instance::Tree { coloring, .. } = &fx else { panic!() };
        let y = SolutionCert::Tree(crate::problems::solve_tt1(coloring));
        let SolutionCert::Word { set } = r.backward(&x, &fx, &y).unwrap() else { panic!() };
        assert!(!set.contains(0));
    }

    #[test]
    fn wheel_alignment_after_prefix() {
        let g = OmegaColoring::small(&[0, 0, 1], &[1, 0]);
        let f = rt1_to_tt1(&g, 2).unwrap();
        for s in BinStr::all_up_to(8) {
            assert_eq!(nat(f.eval(&s) as u64), *g.at(s.len()), "{s}");
        }
    }

    #[test]
    fn branch_coding_coloring() {
        let t = FiniteOmegaTree::root_only();
        let (f, _) = wf_to_tt1ext(&t);
        let mut b = Budget::unlimited();
        for s in BinStr::all_up_to(6) {
            let expect = if s.bits().any(|x| x) { 1 } else { 0 };
            assert_eq!(f.eval(&s, &mut b).unwrap(), expect, "{s}");
        }
        let t = FiniteOmegaTree::new([vec![]], Growth::InfinitePath { prefix: vec![], period: vec![2] }).unwrap();
        let (f, _) = wf_to_tt1ext(&t);
        for n in 0..=4 {
            let s = encode_branch(&vec![2; n], &vec![0; n], 1);
            assert_eq!(f.eval(&s, &mut b).unwrap(), 0);
        }
        assert_eq!(f.eval(&BinStr::EMPTY, &mut b).unwrap(), 0);
    }

    #[test]
    fn tcn_to_v0_hand_example() {
        let e = CoEnum::new(&[1], Tail::Stabilized);
        let f = tcn_to_v0(&e).unwrap();
        assert_eq!(f.eval(&BinStr::EMPTY), 0);
        assert_eq!(f.eval(&bs("0")), 0);
        assert_eq!(f.eval(&bs("1")), 1);
        assert_eq!(f.eval(&bs("1011")), 1);
        assert_eq!(f.eval(&bs("0110")), 0);
        assert!(verify_v(0, &f, 1, &bs("1")));
        assert_eq!(ell(&e, 1), 1);
        assert!(e.contains(1));
        assert_eq!(decide_a(&e).witness, Some(1));
    }

    #[test]
    fn stcn_to_v2_empty_set() {
        let e = CoEnum::new(&[], Tail::Exhaustive);
        let f = stcn_to_v2(&e).unwrap();
        assert!(f.dense_above(0, &BinStr::EMPTY));
        let r = Reduction::StcnToV2;
        let x = Instance::choice(e);
        let fx = r.forward(&x).unwrap();
        let z = r.backward(&x, &fx, &SolutionCert::pair(0, BinStr::EMPTY)).unwrap();
        assert_eq!(z, SolutionCert::number(-1));
    }

    #[test]
    fn v4_example() {
        let f = split_example();
        let r = Reduction::V4ToStcn;
        let x = Instance::tree(f);
        let fx = r.forward(&x).unwrap();
        let one = bs("1").index() as i64;
        let z = r.backward(&x, &fx, &SolutionCert::number(one)).unwrap();
        assert_eq!(z, SolutionCert::pair(1, bs("1")));
        assert!(verify(&ProblemId::V(4), &x, &z, &mut Budget::new(B)).unwrap());
    }

    #[test]
    fn rho_examples() {
        let zero = PatternColoring::constant(2, 0);
        let mut a = RhoAnalysis::new(&zero, 2).unwrap();
        for n in 0..6 {
            assert_eq!(a.rho(0, n), BinStr::zeros(n));
        }
        assert_eq!(a.eventual, 0);
        let one = PatternColoring::constant(2, 1);
        let mut a = RhoAnalysis::new(&one, 2).unwrap();
        assert_eq!(a.rho(0, 5), BinStr::EMPTY);
        assert_eq!(a.stable_from[0], Some(0));
        assert_eq!(a.eventual, 1);
        assert_eq!(a.limit_coloring().unwrap().limit().at(0), &nat(1));
    }

    #[test]
    fn fo_constant_zero() {
        let f = PatternColoring::constant(1, 0);
        let p = fo_pipeline(&f, &Functional::Root, 4, B).unwrap();
        assert_eq!(p.exact.colors, vec![0]);
        assert_eq!(p.exact.m, 1);
        let last = p.stages.last().unwrap();
        assert_eq!(last.rake.as_ref(), Some(&p.exact.rake));
    }

    #[test]
    fn fo_split_example_outputs_a_color_one_string() {
        let f = split_example();
        let p = fo_pipeline(&f, &Functional::Root, 4, B).unwrap();
        assert_eq!(p.exact.colors, vec![1]);
        let m = p.d.positions(&p.d.period[0].clone());
        let SolutionCert::Value { value, .. } = fo_backward(&f, &Functional::Root, &p.d, &m, B).unwrap() else { panic!() };
        let s = BinStr::from_index(nat_to_u64(&value).unwrap());
        assert!(bs("1").is_prefix_of(&s));
        assert_eq!(f.eval(&s), 1);
    }

    #[test]
    fn stage_code_roundtrip() {
        let f = PatternColoring::uniform(2, ConeBehavior::length_mod(&[0, 1])).unwrap();
        let p = fo_pipeline(&f, &Functional::Antichain(2), 4, B).unwrap();
        assert_eq!(p.exact.m, 2);
        let last = p.stages.last().unwrap();
        let (rake, colors) = decode_stage(&last.code).unwrap();
        assert_eq!(rake, p.exact.rake);
        assert_eq!(colors.values().copied().collect::<Vec<_>>(), last.leaf_colors);
    }

    #[test]
    fn lookup_by_problem_ids() {
        let r: Reduction = "TT1_2->D2_2".parse().unwrap();
        assert_eq!(r, Reduction::Tt1kToD2k { k: 2 });
        assert!("TT1_2->D2_3".parse::<Reduction>().is_err());
        let r: Reduction = "FO(TT1_N)->RT1_N".parse().unwrap();
        assert_eq!(r.name(), "fo_tt1n_to_rt1n");
    }
}
