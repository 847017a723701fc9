//! Instance–solution problems: instance encodings, finite certificates for
//! infinite solutions, verifiers, and direct solvers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::colorings::{Color, PatternColoring, ProgramColoring};
use crate::error::{precondition, Budget, Error, Result};
use crate::treecore::{BinStr, TreeSet};

/// Natural numbers of unbounded size (colors of `ω`, functional outputs).
pub type Nat = BigUint;

pub fn nat(n: u64) -> Nat {
    Nat::from(n)
}

pub fn nat_to_u64(n: &Nat) -> Option<u64> {
    u64::try_from(n).ok()
}

// ---------------------------------------------------------------------------
// Tuple codes

/// Injective code of a finite sequence of naturals: each entry `n` is written
/// as the Elias-gamma word of `n + 1`, the words are concatenated, and the
/// resulting binary word is mapped to its length-lexicographic index.
pub fn tuple_code(items: &[Nat]) -> Nat {
    let mut bits: Vec<bool> = Vec::new();
    for n in items {
        let v = n + 1u32;
        let width = v.bits() as usize;
        bits.extend(std::iter::repeat_n(false, width - 1));
        bits.extend((0..width).rev().map(|i| v.bit(i as u64)));
    }
    word_index(&bits)
}

/// Inverse of [`tuple_code`]; `None` when the word is not a gamma sequence.
pub fn tuple_decode(code: &Nat) -> Option<Vec<Nat>> {
    let bits = index_word(code);
    let mut out = Vec::new();
    let mut i = 0;
    while i < bits.len() {
        let mut zeros = 0;
        while i < bits.len() && !bits[i] {
            zeros += 1;
            i += 1;
        }
        if i + zeros + 1 > bits.len() {
            return None;
        }
        let mut v = Nat::from(0u32);
        for &b in &bits[i..i + zeros + 1] {
            v = (v << 1u32) + u32::from(b);
        }
        i += zeros + 1;
        out.push(v - 1u32);
    }
    Some(out)
}

/// Length-lexicographic index of an arbitrary-length binary word.
pub fn word_index(bits: &[bool]) -> Nat {
    let mut v = Nat::from(0u32);
    for &b in bits {
        v = (v << 1u32) + u32::from(b);
    }
    (Nat::from(1u32) << bits.len()) - 1u32 + v
}

/// Inverse of [`word_index`].
pub fn index_word(code: &Nat) -> Vec<bool> {
    let shifted = code + 1u32;
    let len = shifted.bits() as usize - 1;
    (0..len).rev().map(|i| shifted.bit(i as u64)).collect()
}

// ---------------------------------------------------------------------------
// Co-enumerations

/// A decidable set of naturals read off the monochromatic cones of a pattern
/// coloring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeCodes {
    /// Codes `2·index(σ) + i` such that every `τ ⪰ σ` has color `i`.
    Tagged { coloring: PatternColoring },
    /// Codes `index(σ)` such that every `τ ⪰ σ` has color `color`.
    Colored { coloring: PatternColoring, color: Color },
}

impl ConeCodes {
    pub fn contains(&self, x: u64) -> bool {
        match self {
            ConeCodes::Tagged { coloring } => {
                coloring.constant_above(&BinStr::from_index(x / 2)) == Some((x % 2) as Color)
            }
            ConeCodes::Colored { coloring, color } => coloring.constant_above(&BinStr::from_index(x)) == Some(*color),
        }
    }

    /// Every member has infinitely many members above it, so the set is
    /// either empty or infinite.
    pub fn is_empty(&self) -> bool {
        match self {
            ConeCodes::Tagged { coloring } => {
                (0..coloring.palette()).all(|c| coloring.least_constant_cone(&BinStr::EMPTY, c).is_none())
            }
            ConeCodes::Colored { coloring, color } => coloring.least_constant_cone(&BinStr::EMPTY, *color).is_none(),
        }
    }
}

/// How a co-enumeration continues after its explicit stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// Emits 0 forever.
    Stabilized,
    /// Emits 1, 2, 3, ... in order.
    Exhaustive,
    /// At tail position `j` emits `j + 1` unless `j` is in the set, else 0.
    Sieve { keep: ConeCodes },
}

/// A total enumeration `e` of the complement of a `Π⁰₁` set
/// `A = {x : x + 1 ∉ ran(e)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoEnum {
    pub stages: Vec<u64>,
    pub tail: Tail,
}

/// Outcome of deciding a co-enumerated set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceAnswer {
    pub empty: bool,
    pub witness: Option<u64>,
}

/// The eventual behaviour of `ℓ`: explicit values up to `levels.len() − 1`,
/// after which `ℓ` is constant (`settled`) or changes at every step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllProfile {
    pub levels: Vec<u64>,
    pub settled: bool,
}

impl EllProfile {
    /// Does `ℓ(s) ≠ ℓ(s + 1)`?
    pub fn changes_at(&self, s: usize) -> bool {
        if s + 1 < self.levels.len() {
            self.levels[s] != self.levels[s + 1]
        } else {
            !self.settled
        }
    }

    /// Past this level the change pattern is uniform.
    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }
}

impl CoEnum {
    pub fn new(stages: &[u64], tail: Tail) -> Self {
        CoEnum { stages: stages.to_vec(), tail }
    }

    pub fn value_at(&self, n: usize) -> u64 {
        if let Some(&v) = self.stages.get(n) {
            return v;
        }
        let j = (n - self.stages.len()) as u64;
        match &self.tail {
            Tail::Stabilized => 0,
            Tail::Exhaustive => j + 1,
            Tail::Sieve { keep } => {
                if keep.contains(j) {
                    0
                } else {
                    j + 1
                }
            }
        }
    }

    /// First position at which `x + 1` is emitted.
    pub fn removal_stage(&self, x: u64) -> Option<usize> {
        if let Some(p) = self.stages.iter().position(|&v| v == x + 1) {
            return Some(p);
        }
        let p = self.stages.len() + x as usize;
        match &self.tail {
            Tail::Stabilized => None,
            Tail::Exhaustive => Some(p),
            Tail::Sieve { keep } => (!keep.contains(x)).then_some(p),
        }
    }

    /// `x ∈ A`.
    pub fn contains(&self, x: u64) -> bool {
        self.removal_stage(x).is_none()
    }

    fn tail_is_exhaustive(&self) -> bool {
        match &self.tail {
            Tail::Stabilized => false,
            Tail::Exhaustive => true,
            Tail::Sieve { keep } => keep.is_empty(),
        }
    }

    /// Least `s` with `ℓ(t) = ℓ(s)` for all `t ≥ s`, when `A ≠ ∅`.
    pub fn stabilization_stage(&self) -> Option<usize> {
        let a = decide_a(self).witness?;
        Some((0..a).map(|x| self.removal_stage(x).expect("below the least member") + 1).max().unwrap_or(0))
    }

    /// Values of `ℓ` up to the point where its behaviour becomes uniform.
    pub fn ell_profile(&self) -> EllProfile {
        let (end, settled) = match self.stabilization_stage() {
            Some(s) => (s, true),
            None => (self.stages.len() + self.stages.iter().copied().max().unwrap_or(0) as usize, false),
        };
        EllProfile { levels: (0..=end).map(|s| ell(self, s)).collect(), settled }
    }
}

/// `ℓ(s)`: the least `x` such that `x + 1` is not among the first `s` values.
pub fn ell(e: &CoEnum, s: usize) -> u64 {
    (0u64..).find(|&x| e.removal_stage(x).is_none_or(|p| p >= s)).expect("some x survives")
}

/// Exact emptiness of `A` and its least member.
pub fn decide_a(e: &CoEnum) -> ChoiceAnswer {
    if e.tail_is_exhaustive() {
        return ChoiceAnswer { empty: true, witness: None };
    }
    let w = (0u64..).find(|&x| e.contains(x)).expect("a nonempty co-enumerated set has a least member");
    ChoiceAnswer { empty: false, witness: Some(w) }
}

// ---------------------------------------------------------------------------
// Objects on ω

/// An eventually periodic subset of `ω`, given by its characteristic word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MembershipWord {
    pub prefix: Vec<bool>,
    pub period: Vec<bool>,
}

impl MembershipWord {
    pub fn new(prefix: &[bool], period: &[bool]) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Invalid("membership word needs a nonempty period".into()));
        }
        Ok(MembershipWord { prefix: prefix.to_vec(), period: period.to_vec() })
    }

    fn check(&self) -> Result<()> {
        if self.period.is_empty() {
            return Err(Error::Invalid("membership word needs a nonempty period".into()));
        }
        Ok(())
    }

    pub fn contains(&self, n: usize) -> bool {
        match self.prefix.get(n) {
            Some(&b) => b,
            None => self.period[(n - self.prefix.len()) % self.period.len()],
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.period.iter().any(|&b| b)
    }

    pub fn min(&self) -> Option<usize> {
        (0..self.prefix.len() + self.period.len()).find(|&n| self.contains(n))
    }

    /// Members below `bound`.
    pub fn members_below(&self, bound: usize) -> Vec<usize> {
        (0..bound).filter(|&n| self.contains(n)).collect()
    }
}

/// An eventually periodic coloring `g : ω → ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "OmegaRepr", into = "OmegaRepr")]
pub struct OmegaColoring {
    pub prefix: Vec<Nat>,
    pub period: Vec<Nat>,
}

#[derive(Serialize, Deserialize)]
struct OmegaRepr {
    prefix: Vec<String>,
    period: Vec<String>,
}

impl TryFrom<OmegaRepr> for OmegaColoring {
    type Error = Error;

    fn try_from(r: OmegaRepr) -> Result<Self> {
        let parse = |v: &[String]| -> Result<Vec<Nat>> {
            v.iter().map(|s| Nat::from_str(s).map_err(|e| Error::Parse(format!("color {s:?}: {e}")))).collect()
        };
        OmegaColoring::new(parse(&r.prefix)?, parse(&r.period)?)
    }
}

impl From<OmegaColoring> for OmegaRepr {
    fn from(g: OmegaColoring) -> Self {
        OmegaRepr {
            prefix: g.prefix.iter().map(|n| n.to_string()).collect(),
            period: g.period.iter().map(|n| n.to_string()).collect(),
        }
    }
}

impl OmegaColoring {
    pub fn new(prefix: Vec<Nat>, period: Vec<Nat>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Invalid("coloring of ω needs a nonempty period".into()));
        }
        Ok(OmegaColoring { prefix, period })
    }

    pub fn small(prefix: &[u64], period: &[u64]) -> Self {
        OmegaColoring::new(prefix.iter().map(|&c| nat(c)).collect(), period.iter().map(|&c| nat(c)).collect())
            .expect("nonempty period")
    }

    pub fn at(&self, n: usize) -> &Nat {
        match self.prefix.get(n) {
            Some(c) => c,
            None => &self.period[(n - self.prefix.len()) % self.period.len()],
        }
    }

    pub fn range(&self) -> BTreeSet<Nat> {
        self.prefix.iter().chain(&self.period).cloned().collect()
    }

    /// Colors with an infinite homogeneous set.
    pub fn recurrent(&self) -> BTreeSet<Nat> {
        self.period.iter().cloned().collect()
    }

    /// Positions of color `c`, as a membership word.
    pub fn positions(&self, c: &Nat) -> MembershipWord {
        MembershipWord {
            prefix: self.prefix.iter().map(|x| x == c).collect(),
            period: self.period.iter().map(|x| x == c).collect(),
        }
    }
}

/// A `Δ⁰₂` coloring of `ω` given by its stage guesses.
///
/// `rows[n]` lists the guesses for position `n` from stage `n` on until they
/// settle; its last entry is the limit. Positions past `rows` are not
/// tabulated and take the limit values of `tail`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitColoring {
    pub rows: Vec<Vec<Color>>,
    pub tail: OmegaColoring,
}

impl LimitColoring {
    fn check(&self) -> Result<()> {
        if self.rows.iter().any(|r| r.is_empty()) {
            return Err(Error::Invalid("every tabulated position needs at least one guess".into()));
        }
        Ok(())
    }

    /// The guess for `n` at stage `t`.
    pub fn stage_value(&self, n: usize, t: usize) -> Nat {
        match self.rows.get(n) {
            Some(row) => nat(row[t.saturating_sub(n).min(row.len() - 1)] as u64),
            None => self.tail.at(n).clone(),
        }
    }

    /// Stage after which the guess for `n` is final.
    pub fn settling_stage(&self, n: usize) -> usize {
        self.rows.get(n).map_or(n, |row| n + row.len() - 1)
    }

    pub fn limit(&self) -> OmegaColoring {
        let mut prefix: Vec<Nat> = self.rows.iter().map(|r| nat(*r.last().expect("nonempty row") as u64)).collect();
        let offset = prefix.len();
        let p = self.tail.period.len();
        let extra = self.tail.prefix.len().saturating_sub(offset);
        prefix.extend((offset..offset + extra).map(|n| self.tail.at(n).clone()));
        let start = offset + extra;
        let period = (start..start + p).map(|n| self.tail.at(n).clone()).collect();
        OmegaColoring { prefix, period }
    }
}

/// A subtree of `ω^{<ω}`: finitely many nodes plus at most one infinite path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteOmegaTree {
    pub nodes: BTreeSet<Vec<u64>>,
    pub growth: Growth,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    None,
    /// Every initial segment of `prefix · period^ω` is in the tree.
    InfinitePath { prefix: Vec<u64>, period: Vec<u64> },
}

impl FiniteOmegaTree {
    pub fn new(nodes: impl IntoIterator<Item = Vec<u64>>, growth: Growth) -> Result<Self> {
        let t = FiniteOmegaTree { nodes: nodes.into_iter().collect(), growth };
        t.check()?;
        Ok(t)
    }

    pub fn root_only() -> Self {
        FiniteOmegaTree { nodes: [vec![]].into(), growth: Growth::None }
    }

    fn check(&self) -> Result<()> {
        if !self.nodes.contains(&Vec::new()) {
            return Err(Error::Invalid("tree must contain the empty sequence".into()));
        }
        for n in &self.nodes {
            if !n.is_empty() && !self.nodes.contains(&n[..n.len() - 1]) {
                return Err(Error::Invalid(format!("tree not prefix closed at {n:?}")));
            }
        }
        if let Growth::InfinitePath { period, .. } = &self.growth {
            if period.is_empty() {
                return Err(Error::Invalid("infinite path needs a nonempty period".into()));
            }
        }
        Ok(())
    }

    /// The `i`-th entry of the infinite path.
    pub fn path_at(&self, i: usize) -> Option<u64> {
        match &self.growth {
            Growth::None => None,
            Growth::InfinitePath { prefix, period } => {
                Some(prefix.get(i).copied().unwrap_or_else(|| period[(i - prefix.len()) % period.len()]))
            }
        }
    }

    pub fn on_path(&self, alpha: &[u64]) -> bool {
        !matches!(self.growth, Growth::None) && alpha.iter().enumerate().all(|(i, &a)| self.path_at(i) == Some(a))
    }

    pub fn contains(&self, alpha: &[u64]) -> bool {
        self.nodes.contains(alpha) || self.on_path(alpha)
    }

    pub fn is_well_founded(&self) -> bool {
        matches!(self.growth, Growth::None)
    }
}

// ---------------------------------------------------------------------------
// Problem identifiers

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    /// A fixed number of colors.
    Fixed(usize),
    /// An explicit bound supplied with the instance.
    Declared,
    /// Bounded range, no bound supplied.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    Rt1(Bound),
    Tt1(Bound),
    D2(usize),
    ClosedChoice,
    TotalChoice,
    StrongTotalChoice,
    IsFinite,
    WellFounded,
    V(u8),
    Tt1Ext(usize),
    FirstOrder(Box<ProblemId>),
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |b: &Bound| match b {
            Bound::Fixed(k) => k.to_string(),
            Bound::Declared => "+".into(),
            Bound::Unbounded => "N".into(),
        };
        match self {
            ProblemId::Rt1(b) => write!(f, "RT1_{}", bound(b)),
            ProblemId::Tt1(b) => write!(f, "TT1_{}", bound(b)),
            ProblemId::D2(k) => write!(f, "D2_{k}"),
            ProblemId::ClosedChoice => f.write_str("C_N"),
            ProblemId::TotalChoice => f.write_str("TC_N"),
            ProblemId::StrongTotalChoice => f.write_str("sTC_N"),
            ProblemId::IsFinite => f.write_str("isFinite"),
            ProblemId::WellFounded => f.write_str("WF"),
            ProblemId::V(i) => write!(f, "V{i}"),
            ProblemId::Tt1Ext(k) => write!(f, "TT1Ext_{k}"),
            ProblemId::FirstOrder(p) => write!(f, "FO({p})"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown problem id {s:?}"));
        let bound = |b: &str| -> Result<Bound> {
            match b {
                "+" => Ok(Bound::Declared),
                "N" => Ok(Bound::Unbounded),
                n => n.parse::<usize>().ok().filter(|&k| k >= 1).map(Bound::Fixed).ok_or_else(bad),
            }
        };
        let fixed = |b: &str| b.parse::<usize>().ok().filter(|&k| k >= 1).ok_or_else(bad);
        if let Some(inner) = s.strip_prefix("FO(").and_then(|r| r.strip_suffix(')')) {
            return Ok(ProblemId::FirstOrder(Box::new(inner.parse()?)));
        }
        if let Some(b) = s.strip_prefix("RT1_") {
            return Ok(ProblemId::Rt1(bound(b)?));
        }
        if let Some(k) = s.strip_prefix("TT1Ext_") {
            return Ok(ProblemId::Tt1Ext(fixed(k)?));
        }
        if let Some(b) = s.strip_prefix("TT1_") {
            return Ok(ProblemId::Tt1(bound(b)?));
        }
        if let Some(k) = s.strip_prefix("D2_") {
            return Ok(ProblemId::D2(fixed(k)?));
        }
        match s {
            "C_N" => Ok(ProblemId::ClosedChoice),
            "TC_N" => Ok(ProblemId::TotalChoice),
            "sTC_N" => Ok(ProblemId::StrongTotalChoice),
            "isFinite" => Ok(ProblemId::IsFinite),
            "WF" => Ok(ProblemId::WellFounded),
            "V0" | "V1" | "V2" | "V3" | "V4" => Ok(ProblemId::V(s.as_bytes()[1] - b'0')),
            _ => Err(bad()),
        }
    }
}

impl Serialize for ProblemId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProblemId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Functionals

type TreeProgram = dyn Fn(&TreeSet, &mut Budget) -> Result<Option<Nat>> + Send + Sync;

/// Budgeted oracle programs. On a finite tree set `S` a functional reads only
/// the strings of `S` no longer than the shortest leaf of `S`, so its output
/// is unchanged by end-extensions of `S`.
#[derive(Clone)]
pub enum Functional {
    /// Passes the instance through unchanged (for the instance slot).
    Identity,
    /// Index of the least string.
    Root,
    /// Tuple code of the indices of the least `j` pairwise incomparable
    /// strings, least meaning least largest element, then next largest, ...
    Antichain(usize),
    /// A constant.
    Const(u64),
    /// Least element of a subset of `ω`.
    Min,
    /// A user program; must respect the reading restriction itself.
    Custom { name: String, run: Arc<TreeProgram> },
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string())
    }
}

impl PartialEq for Functional {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Identity => f.write_str("Identity"),
            Functional::Root => f.write_str("Root"),
            Functional::Antichain(j) => write!(f, "Antichain({j})"),
            Functional::Const(v) => write!(f, "Const({v})"),
            Functional::Min => f.write_str("Min"),
            Functional::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let arg = |p: &str| s.strip_prefix(p).and_then(|r| r.strip_suffix(')')).and_then(|r| r.parse::<u64>().ok());
        match s {
            "Identity" => Ok(Functional::Identity),
            "Root" => Ok(Functional::Root),
            "Min" => Ok(Functional::Min),
            _ => {
                if let Some(j) = arg("Antichain(") {
                    Ok(Functional::Antichain(j as usize))
                } else if let Some(v) = arg("Const(") {
                    Ok(Functional::Const(v))
                } else {
                    Err(Error::Parse(format!("unknown functional {s:?}")))
                }
            }
        }
    }
}

impl Serialize for Functional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if let Functional::Custom { name, .. } = self {
            return Err(serde::ser::Error::custom(format!("custom functional {name} cannot be serialized")));
        }
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Functional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The strings of `S` a functional may read: those no longer than the
/// shortest leaf.
pub fn readable_view(s: &TreeSet) -> TreeSet {
    let Some(cut) = s.leaves().iter().map(|l| l.len()).min() else { return TreeSet::new() };
    s.iter().filter(|x| x.len() <= cut).copied().collect()
}

/// Least `j`-antichain of `view` under the order comparing largest elements
/// first.
fn least_antichain(view: &TreeSet, j: usize, budget: &mut Budget) -> Result<Option<Vec<BinStr>>> {
    if j == 0 {
        return Ok(Some(Vec::new()));
    }
    // Scanning strings in length-lex order, the first time the scanned part
    // contains a j-antichain, the one using the newest string with the
    // least remaining part is the answer.
    let items: Vec<BinStr> = view.iter().copied().collect();
    for (top, &x) in items.iter().enumerate() {
        budget.charge(1)?;
        let below: Vec<BinStr> = items[..top].iter().filter(|y| !y.comparable(&x)).copied().collect();
        if let Some(mut rest) = least_antichain_in(&below, j - 1, budget)? {
            rest.push(x);
            return Ok(Some(rest));
        }
    }
    Ok(None)
}

fn least_antichain_in(items: &[BinStr], j: usize, budget: &mut Budget) -> Result<Option<Vec<BinStr>>> {
    if j == 0 {
        return Ok(Some(Vec::new()));
    }
    for (top, &x) in items.iter().enumerate() {
        budget.charge(1)?;
        let below: Vec<BinStr> = items[..top].iter().filter(|y| !y.comparable(&x)).copied().collect();
        if let Some(mut rest) = least_antichain_in(&below, j - 1, budget)? {
            rest.push(x);
            return Ok(Some(rest));
        }
    }
    Ok(None)
}

impl Functional {
    /// Output on a finite tree set; `Ok(None)` when the program does not halt
    /// on this oracle.
    pub fn apply_tree(&self, s: &TreeSet, budget: &mut Budget) -> Result<Option<Nat>> {
        match self {
            Functional::Identity | Functional::Min => {
                precondition(format!("{self} does not read tree sets"))
            }
            Functional::Const(v) => Ok(Some(nat(*v))),
            Functional::Root => {
                let view = readable_view(s);
                budget.charge(view.len() as u64)?;
                Ok(view.first().map(|r| nat(r.index())))
            }
            Functional::Antichain(j) => {
                let view = readable_view(s);
                budget.charge(view.len() as u64)?;
                Ok(least_antichain(&view, *j, budget)?
                    .map(|a| tuple_code(&a.iter().map(|x| nat(x.index())).collect::<Vec<_>>())))
            }
            Functional::Custom { run, .. } => run(s, budget),
        }
    }

    /// Output on a subset of `ω`.
    pub fn apply_word(&self, m: &MembershipWord, budget: &mut Budget) -> Result<Option<Nat>> {
        budget.charge(1)?;
        match self {
            Functional::Const(v) => Ok(Some(nat(*v))),
            Functional::Min => Ok(m.min().map(|n| nat(n as u64))),
            _ => precondition(format!("{self} does not read subsets of ω")),
        }
    }

    /// Decodes an `Antichain` output back into strings.
    pub fn decode_antichain(value: &Nat) -> Option<Vec<BinStr>> {
        tuple_decode(value)?.iter().map(|n| nat_to_u64(n).map(BinStr::from_index)).collect()
    }
}

// ---------------------------------------------------------------------------
// Instances and certificates

/// A problem instance. Which problems accept which kinds is checked by
/// [`verify`] and [`solve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    /// A coloring of `ω`, with an explicit color bound for the `+` variant.
    Omega { bound: Option<u64>, coloring: OmegaColoring },
    /// A pattern coloring of the full binary tree.
    Tree { bound: Option<usize>, coloring: PatternColoring },
    /// A limit coloring of `ω`.
    Limit { coloring: LimitColoring },
    /// A co-enumerated subset of `ω`.
    Choice { set: CoEnum },
    /// A subset of `ω` by its characteristic word.
    Word { set: MembershipWord },
    /// A tree on `ω`.
    OmegaTree { tree: FiniteOmegaTree },
    /// An extendability question: a coloring and a prefix to extend.
    Extension { coloring: ProgramColoring, prefix: TreeSet },
    /// A tree coloring known only through budgeted evaluation.
    Program { coloring: ProgramColoring },
    /// A first-order triple.
    FirstOrder { inner: Box<Instance>, delta: Functional, gamma: Functional },
}

impl Instance {
    pub fn tree(coloring: PatternColoring) -> Self {
        Instance::Tree { bound: None, coloring }
    }

    pub fn omega(coloring: OmegaColoring) -> Self {
        Instance::Omega { bound: None, coloring }
    }

    pub fn choice(set: CoEnum) -> Self {
        Instance::Choice { set }
    }

    pub fn pattern(&self) -> Option<&PatternColoring> {
        match self {
            Instance::Tree { coloring, .. } => Some(coloring),
            _ => None,
        }
    }
}

/// A finite description of a `TT¹` solution: a prefix shaped like `2^{<n}`,
/// its color, and for each leaf a proper extension that roots an infinite
/// monochromatic full tree of that color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCert {
    pub prefix: TreeSet,
    pub color: Color,
    pub evidence: BTreeMap<BinStr, BinStr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionCert {
    /// An infinite subset of `ω`.
    Word { set: MembershipWord },
    /// A monochromatic full tree.
    Tree(TreeCert),
    /// A number; `-1` flags an empty set.
    Number { value: i64 },
    /// A pair `⟨i, σ⟩`.
    Pair { i: u8, sigma: BinStr },
    /// A first-order value with an optional solution it was read from.
    Value {
        #[serde(with = "nat_string")]
        value: Nat,
        witness: Option<Box<SolutionCert>>,
    },
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

impl SolutionCert {
    pub fn number(value: i64) -> Self {
        SolutionCert::Number { value }
    }

    pub fn pair(i: u8, sigma: BinStr) -> Self {
        SolutionCert::Pair { i, sigma }
    }
}

fn wrong_kind<T>(pid: &ProblemId, what: &str) -> Result<T> {
    precondition(format!("{pid} does not take {what}"))
}

fn check_omega_bound(pid: &ProblemId, bound: Option<u64>, g: &OmegaColoring) -> Result<()> {
    let limit = match pid {
        ProblemId::Rt1(Bound::Fixed(k)) | ProblemId::D2(k) => Some(*k as u64),
        ProblemId::Rt1(Bound::Declared) => {
            Some(bound.ok_or_else(|| Error::PreconditionViolated(format!("{pid} needs a declared bound")))?)
        }
        _ => None,
    };
    if let Some(k) = limit {
        if g.range().iter().any(|c| *c >= nat(k)) {
            return precondition(format!("coloring uses a color outside {k}"));
        }
    }
    Ok(())
}

fn check_tree_bound(pid: &ProblemId, bound: Option<usize>, f: &PatternColoring) -> Result<()> {
    let limit = match pid {
        ProblemId::Tt1(Bound::Fixed(k)) | ProblemId::Tt1Ext(k) => Some(*k),
        ProblemId::Tt1(Bound::Declared) => {
            Some(bound.ok_or_else(|| Error::PreconditionViolated(format!("{pid} needs a declared bound")))?)
        }
        ProblemId::V(_) => Some(2),
        _ => None,
    };
    if let Some(k) = limit {
        if f.range().iter().any(|&c| c >= k) {
            return precondition(format!("coloring uses a color outside {k}"));
        }
    }
    Ok(())
}

/// Is `m` an infinite set on which `g` is constant?
pub fn is_homogeneous(g: &OmegaColoring, m: &MembershipWord) -> Result<bool> {
    m.check()?;
    if !m.is_infinite() {
        return Ok(false);
    }
    let lcm = lcm(g.period.len(), m.period.len());
    let horizon = g.prefix.len().max(m.prefix.len()) + lcm;
    let mut colors = (0..horizon).filter(|&n| m.contains(n)).map(|n| g.at(n));
    let first = colors.next().expect("infinite set has a member");
    Ok(colors.all(|c| c == first))
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// Is `cert` a correct certificate for `S` being the first levels of an
/// infinite monochromatic full tree of `f`?
pub fn verify_tree_cert(f: &PatternColoring, cert: &TreeCert) -> Result<bool> {
    if cert.prefix.is_empty() || cert.prefix.iso_to_full().is_none() {
        return Ok(false);
    }
    if cert.color >= f.palette() || cert.prefix.iter().any(|x| f.eval(x) != cert.color) {
        return Ok(false);
    }
    let leaves = cert.prefix.leaves();
    if cert.evidence.keys().copied().collect::<TreeSet>() != leaves {
        return Ok(false);
    }
    let evidence_ok = cert
        .evidence
        .iter()
        .all(|(leaf, tau)| leaf.is_proper_prefix_of(tau) && f.roots_mono_tree(cert.color, tau));
    Ok(evidence_ok && f.mono_extendable(&cert.prefix, cert.color)?)
}

/// Decides a `V0`–`V4` solution `⟨i, σ⟩` exactly.
pub fn verify_v(which: u8, f: &PatternColoring, i: u8, sigma: &BinStr) -> bool {
    let root = BinStr::EMPTY;
    let i_color = i as Color;
    match (which, i) {
        (_, i) if i > 1 => false,
        (0, _) => f.dense_above(i_color, sigma),
        (1, _) => (f.dense_above(0, &root) && f.dense_above(1, &root)) || f.constant_above(sigma) == Some(i_color),
        (_, 0) => f.dense_above(0, &root),
        (2, 1) => f.dense_above(1, sigma),
        (3, 1) => f.color_forms_chain_above(0, sigma),
        (4, 1) => f.constant_above(sigma) == Some(1),
        _ => false,
    }
}

/// Exact answer to an extendability question, where decidable.
pub fn decide_extension(f: &ProgramColoring, prefix: &TreeSet) -> Result<bool> {
    if prefix.iso_to_full().is_none() {
        return precondition("prefix is not shaped like a full binary tree");
    }
    match f {
        ProgramColoring::Pattern(p) => {
            for c in 0..p.palette() {
                if p.mono_extendable(prefix, c)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        ProgramColoring::TreeCode(t) => {
            let mut budget = Budget::unlimited();
            let colors: BTreeSet<Color> = prefix.iter().map(|x| f.eval(x, &mut budget)).collect::<Result<_>>()?;
            if colors.len() > 1 {
                return Ok(false);
            }
            if colors.first() == Some(&1) {
                // Strings outside the coded tree form an upward closed set.
                return Ok(true);
            }
            if prefix.is_empty() {
                return Ok(true);
            }
            Ok(prefix.leaves().iter().all(|l| t.on_path(&crate::reductions::decode_branch_code(l))))
        }
        ProgramColoring::Builtin { name } | ProgramColoring::Custom { name, .. } => {
            Err(Error::Unverifiable(format!("extendability for program coloring {name}")))
        }
    }
}

fn number_of(cert: &SolutionCert, pid: &ProblemId) -> Result<i64> {
    match cert {
        SolutionCert::Number { value } => Ok(*value),
        _ => wrong_kind(pid, "this certificate kind"),
    }
}

/// Checks `cert` against `instance` for problem `pid`.
///
/// `Ok(false)` means refuted. Questions that cannot be settled exactly
/// return `Unverifiable` or `BudgetExceeded`.
pub fn verify(pid: &ProblemId, instance: &Instance, cert: &SolutionCert, budget: &mut Budget) -> Result<bool> {
    match (pid, instance) {
        (ProblemId::Rt1(_), Instance::Omega { bound, coloring }) => {
            check_omega_bound(pid, *bound, coloring)?;
            match cert {
                SolutionCert::Word { set } => is_homogeneous(coloring, set),
                _ => wrong_kind(pid, "this certificate kind"),
            }
        }
        (ProblemId::D2(_), Instance::Limit { coloring }) => {
            coloring.check()?;
            let g = coloring.limit();
            check_omega_bound(pid, None, &g)?;
            match cert {
                SolutionCert::Word { set } => is_homogeneous(&g, set),
                _ => wrong_kind(pid, "this certificate kind"),
            }
        }
        (ProblemId::Tt1(_), Instance::Tree { bound, coloring }) => {
            check_tree_bound(pid, *bound, coloring)?;
            match cert {
                SolutionCert::Tree(t) => verify_tree_cert(coloring, t),
                _ => wrong_kind(pid, "this certificate kind"),
            }
        }
        (ProblemId::Tt1(_), Instance::Program { coloring }) => {
            let SolutionCert::Tree(t) = cert else { return wrong_kind(pid, "this certificate kind") };
            // Only the finite prefix can be checked.
            if t.prefix.iso_to_full().is_none() {
                return Ok(false);
            }
            for x in t.prefix.iter() {
                if coloring.eval(x, budget)? != t.color {
                    return Ok(false);
                }
            }
            Err(Error::Unverifiable(format!(
                "partial check: the prefix is monochromatic in color {}, but extendability of a program coloring is not decidable",
                t.color
            )))
        }
        (ProblemId::ClosedChoice | ProblemId::TotalChoice | ProblemId::StrongTotalChoice, Instance::Choice { set }) => {
            let x = number_of(cert, pid)?;
            let answer = decide_a(set);
            match pid {
                ProblemId::ClosedChoice if answer.empty => precondition("closed choice needs a nonempty set"),
                ProblemId::TotalChoice if answer.empty => Ok(x >= 0),
                ProblemId::StrongTotalChoice if answer.empty => Ok(x == -1),
                _ => Ok(x >= 0 && set.contains(x as u64)),
            }
        }
        (ProblemId::IsFinite, Instance::Word { set }) => {
            set.check()?;
            Ok(number_of(cert, pid)? == i64::from(!set.is_infinite()))
        }
        (ProblemId::WellFounded, Instance::OmegaTree { tree }) => {
            tree.check()?;
            Ok(number_of(cert, pid)? == solve_wf(tree))
        }
        (ProblemId::V(w), Instance::Tree { coloring, .. }) if *w <= 4 => {
            check_tree_bound(pid, None, coloring)?;
            match cert {
                SolutionCert::Pair { i, sigma } => Ok(verify_v(*w, coloring, *i, sigma)),
                _ => wrong_kind(pid, "this certificate kind"),
            }
        }
        (ProblemId::Tt1Ext(k), Instance::Extension { coloring, prefix }) => {
            if let Some(p) = coloring.palette() {
                if p > *k {
                    if let ProgramColoring::Pattern(f) = coloring {
                        check_tree_bound(pid, None, f)?;
                    }
                }
            }
            let answer = number_of(cert, pid)?;
            Ok(answer == i64::from(decide_extension(coloring, prefix)?))
        }
        (ProblemId::FirstOrder(inner_pid), Instance::FirstOrder { inner, delta, gamma }) => {
            verify_first_order(inner_pid, inner, delta, gamma, cert, budget)
        }
        _ => precondition(format!("instance kind does not match problem {pid}")),
    }
}

fn verify_first_order(
    pid: &ProblemId,
    inner: &Instance,
    delta: &Functional,
    gamma: &Functional,
    cert: &SolutionCert,
    budget: &mut Budget,
) -> Result<bool> {
    if *delta != Functional::Identity {
        return Err(Error::Unverifiable(format!("instance functional {delta}")));
    }
    let SolutionCert::Value { value, witness } = cert else {
        return wrong_kind(pid, "this certificate kind");
    };
    if let Some(w) = witness {
        if !verify(pid, inner, w, budget)? {
            return Ok(false);
        }
        let out = match (&**w, inner) {
            (SolutionCert::Tree(t), Instance::Tree { .. }) => gamma.apply_tree(&t.prefix, budget)?,
            (SolutionCert::Word { set }, _) => gamma.apply_word(set, budget)?,
            _ => return wrong_kind(pid, "this witness kind"),
        };
        return match out {
            Some(v) => Ok(&v == value),
            None => Err(Error::Unverifiable(format!("{gamma} does not halt on the witness"))),
        };
    }
    match (pid, inner, gamma) {
        (_, _, Functional::Const(v)) => Ok(*value == nat(*v)),
        (ProblemId::Tt1(_), Instance::Tree { bound, coloring }, Functional::Root) => {
            check_tree_bound(pid, *bound, coloring)?;
            let Some(x) = nat_to_u64(value) else { return Ok(false) };
            let root = TreeSet::singleton(BinStr::from_index(x));
            for c in 0..coloring.palette() {
                if coloring.mono_extendable(&root, c)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        (ProblemId::Rt1(_), Instance::Omega { bound, coloring }, Functional::Min) => {
            check_omega_bound(pid, *bound, coloring)?;
            let Some(n) = nat_to_u64(value) else { return Ok(false) };
            Ok(coloring.recurrent().contains(coloring.at(n as usize)))
        }
        (ProblemId::Tt1(_), Instance::Tree { bound, coloring }, _) => {
            check_tree_bound(pid, *bound, coloring)?;
            search_first_order_witness(coloring, gamma, value, budget)
        }
        _ => Err(Error::Unverifiable(format!("no decision procedure for {gamma} over {pid}"))),
    }
}

/// Looks for a monochromatic extendable prefix on which `gamma` outputs
/// `value`; a failed search is inconclusive.
fn search_first_order_witness(f: &PatternColoring, gamma: &Functional, value: &Nat, budget: &mut Budget) -> Result<bool> {
    let len_bound = f.depth() + 4;
    for height in 1..=3 {
        for c in 0..f.palette() {
            for s in f.enumerate_mono(&BinStr::EMPTY, height, len_bound, c) {
                budget.charge(s.len() as u64)?;
                if gamma.apply_tree(&s, budget)?.as_ref() == Some(value) && f.mono_extendable(&s, c)? {
                    return Ok(true);
                }
            }
        }
    }
    Err(Error::Unverifiable(format!("no witness for value {value} within the search bound")))
}

// ---------------------------------------------------------------------------
// Solvers

pub fn solve_rt1(g: &OmegaColoring) -> SolutionCert {
    let c = g.period.iter().min().expect("nonempty period").clone();
    SolutionCert::Word { set: g.positions(&c) }
}

pub fn solve_wf(t: &FiniteOmegaTree) -> i64 {
    i64::from(t.is_well_founded())
}

/// Dense-or-cone: the length-lex least `σ`, and least color `i` with `i`
/// dense above `σ`.
pub fn dense_or_cone(f: &PatternColoring) -> (Color, BinStr) {
    (0u64..)
        .map(BinStr::from_index)
        .find_map(|s| f.recurrent_colors(&s).first().map(|&c| (c, s)))
        .expect("some color is dense somewhere")
}

/// A certified solution of color `c` with root above `rho`, built greedily
/// from least extensions; requires `c` dense above `rho`.
pub fn dense_prefix(f: &PatternColoring, c: Color, rho: &BinStr, height: usize) -> Result<TreeCert> {
    if !f.dense_above(c, rho) {
        return precondition(format!("color {c} is not dense above {rho}"));
    }
    let root = f.least_extension_with_color(rho, c, false).expect("dense color occurs");
    let mut prefix = TreeSet::singleton(root);
    let mut frontier = vec![root];
    for _ in 1..height {
        let mut next = Vec::new();
        for x in &frontier {
            for b in [false, true] {
                let y = f.least_extension_with_color(&x.child(b), c, false).expect("dense color occurs");
                prefix.insert(y);
                next.push(y);
            }
        }
        frontier = next;
    }
    let evidence = frontier
        .iter()
        .map(|l| (*l, f.least_mono_root(l, c, true).expect("dense color roots a monochromatic tree")))
        .collect();
    Ok(TreeCert { prefix, color: c, evidence })
}

/// A certified solution extending the prefix `s` in color `c`.
pub fn extension_cert(f: &PatternColoring, s: &TreeSet, c: Color) -> Result<Option<TreeCert>> {
    if s.is_empty() || !f.mono_extendable(s, c)? {
        return Ok(None);
    }
    let evidence = s
        .leaves()
        .iter()
        .map(|l| (*l, f.least_mono_root(l, c, true).expect("extendable leaf")))
        .collect();
    Ok(Some(TreeCert { prefix: s.clone(), color: c, evidence }))
}

pub const DEFAULT_PREFIX_HEIGHT: usize = 2;

pub fn solve_tt1(f: &PatternColoring) -> TreeCert {
    solve_tt1_with_height(f, DEFAULT_PREFIX_HEIGHT)
}

pub fn solve_tt1_with_height(f: &PatternColoring, height: usize) -> TreeCert {
    let (c, sigma) = dense_or_cone(f);
    dense_prefix(f, c, &sigma, height.max(1)).expect("chosen color is dense")
}

fn least_code_v(f: &PatternColoring, color: Color) -> Option<BinStr> {
    f.least_constant_cone(&BinStr::EMPTY, color)
}

/// Direct solver for every supported problem.
pub fn solve(pid: &ProblemId, instance: &Instance, budget: &mut Budget) -> Result<SolutionCert> {
    match (pid, instance) {
        (ProblemId::Rt1(_), Instance::Omega { bound, coloring }) => {
            check_omega_bound(pid, *bound, coloring)?;
            Ok(solve_rt1(coloring))
        }
        (ProblemId::D2(_), Instance::Limit { coloring }) => {
            coloring.check()?;
            let g = coloring.limit();
            check_omega_bound(pid, None, &g)?;
            Ok(solve_rt1(&g))
        }
        (ProblemId::Tt1(_), Instance::Tree { bound, coloring }) => {
            check_tree_bound(pid, *bound, coloring)?;
            Ok(SolutionCert::Tree(solve_tt1(coloring)))
        }
        (ProblemId::Tt1(_), Instance::Program { coloring }) => {
            Err(Error::Unverifiable(format!("no exact solver for program coloring {coloring:?}")))
        }
        (ProblemId::ClosedChoice | ProblemId::TotalChoice | ProblemId::StrongTotalChoice, Instance::Choice { set }) => {
            let a = decide_a(set);
            match (pid, a.witness) {
                (_, Some(x)) => Ok(SolutionCert::number(x as i64)),
                (ProblemId::ClosedChoice, None) => precondition("closed choice needs a nonempty set"),
                (ProblemId::TotalChoice, None) => Ok(SolutionCert::number(0)),
                _ => Ok(SolutionCert::number(-1)),
            }
        }
        (ProblemId::IsFinite, Instance::Word { set }) => {
            set.check()?;
            Ok(SolutionCert::number(i64::from(!set.is_infinite())))
        }
        (ProblemId::WellFounded, Instance::OmegaTree { tree }) => Ok(SolutionCert::number(solve_wf(tree))),
        (ProblemId::V(w), Instance::Tree { coloring: f, .. }) if *w <= 4 => {
            check_tree_bound(pid, None, f)?;
            let root = BinStr::EMPTY;
            let cert = match w {
                0 => {
                    let (i, s) = dense_or_cone(f);
                    SolutionCert::pair(i as u8, s)
                }
                1 => {
                    if f.dense_above(0, &root) && f.dense_above(1, &root) {
                        SolutionCert::pair(0, root)
                    } else {
                        let cones: Vec<(u64, u8, BinStr)> = (0..2)
                            .filter_map(|i| least_code_v(f, i).map(|s| (2 * s.index() + i as u64, i as u8, s)))
                            .collect();
                        let (_, i, s) = cones.into_iter().min().expect("a monochromatic cone exists");
                        SolutionCert::pair(i, s)
                    }
                }
                _ => {
                    if f.dense_above(0, &root) {
                        SolutionCert::pair(0, root)
                    } else {
                        SolutionCert::pair(1, least_code_v(f, 1).expect("color 1 fills a cone"))
                    }
                }
            };
            Ok(cert)
        }
        (ProblemId::Tt1Ext(_), Instance::Extension { coloring, prefix }) => {
            Ok(SolutionCert::number(i64::from(decide_extension(coloring, prefix)?)))
        }
        (ProblemId::FirstOrder(inner_pid), Instance::FirstOrder { inner, delta, gamma }) => {
            if *delta != Functional::Identity {
                return Err(Error::Unverifiable(format!("instance functional {delta}")));
            }
            let witness = match (&**inner_pid, &**inner) {
                (ProblemId::Tt1(_), Instance::Tree { bound, coloring }) => {
                    check_tree_bound(inner_pid, *bound, coloring)?;
                    let mut found = None;
                    for height in 1..=6 {
                        let cert = solve_tt1_with_height(coloring, height);
                        if let Some(v) = gamma.apply_tree(&cert.prefix, budget)? {
                            found = Some((v, SolutionCert::Tree(cert)));
                            break;
                        }
                    }
                    found.ok_or(Error::BudgetExceeded(budget.limit()))?
                }
                _ => {
                    let cert = solve(inner_pid, inner, budget)?;
                    let SolutionCert::Word { set } = &cert else {
                        return Err(Error::Unverifiable(format!("{gamma} over {inner_pid}")));
                    };
                    let v = gamma.apply_word(set, budget)?.ok_or(Error::BudgetExceeded(budget.limit()))?;
                    (v, cert)
                }
            };
            Ok(SolutionCert::Value { value: witness.0, witness: Some(Box::new(witness.1)) })
        }
        _ => precondition(format!("instance kind does not match problem {pid}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorings::tests::split_example;
    use crate::colorings::ConeBehavior;
    use crate::treecore::{bs, ts};

    fn unlimited() -> Budget {
        Budget::unlimited()
    }

    #[test]
    fn ell_examples() {
        let e = CoEnum::new(&[3, 1], Tail::Stabilized);
        assert_eq!(ell(&e, 0), 0);
        assert_eq!(ell(&e, 2), 1);
        let one = CoEnum::new(&[1], Tail::Stabilized);
        assert!((1..20).all(|s| ell(&one, s) == 1));
        assert_eq!(one.stabilization_stage(), Some(1));
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide_a(&CoEnum::new(&[], Tail::Exhaustive)), ChoiceAnswer { empty: true, witness: None });
        assert_eq!(decide_a(&CoEnum::new(&[1], Tail::Stabilized)), ChoiceAnswer { empty: false, witness: Some(1) });
        assert_eq!(decide_a(&CoEnum::new(&[], Tail::Stabilized)), ChoiceAnswer { empty: false, witness: Some(0) });
    }

    /// `ℓ` from its definition, by scanning the enumerated prefix.
    fn ell_by_scan(e: &CoEnum, s: usize) -> u64 {
        let seen: BTreeSet<u64> = (0..s).map(|n| e.value_at(n)).collect();
        (0..).find(|x| !seen.contains(&(x + 1))).unwrap()
    }

    #[test]
    fn witness_is_the_limit_of_ell() {
        for stages in [vec![], vec![1], vec![2, 1], vec![3, 1, 2], vec![0, 4, 1]] {
            for tail in [Tail::Stabilized, Tail::Exhaustive] {
                let e = CoEnum::new(&stages, tail);
                for s in 0..30 {
                    assert_eq!(ell(&e, s), ell_by_scan(&e, s));
                }
                if let Some(w) = decide_a(&e).witness {
                    let from = e.stabilization_stage().unwrap();
                    assert!((from..from + 30).all(|s| ell(&e, s) == w));
                    assert!(from == 0 || ell(&e, from - 1) != w);
                }
                let profile = e.ell_profile();
                for s in 0..40 {
                    assert_eq!(profile.changes_at(s), ell(&e, s) != ell(&e, s + 1), "{e:?} at {s}");
                }
            }
        }
    }

    #[test]
    fn sieve_tail_keeps_cone_codes() {
        let keep = ConeCodes::Colored { coloring: split_example(), color: 1 };
        let e = CoEnum::new(&[], Tail::Sieve { keep });
        assert!(e.contains(bs("1").index()));
        assert!(!e.contains(bs("0").index()));
        assert_eq!(decide_a(&e).witness, Some(bs("1").index()));
    }

    #[test]
    fn tuple_code_roundtrip() {
        let items: Vec<Nat> = [0u64, 5, 1, 1000, 3].iter().map(|&x| nat(x)).collect();
        assert_eq!(tuple_decode(&tuple_code(&items)).unwrap(), items);
        assert_eq!(tuple_decode(&tuple_code(&[])).unwrap(), Vec::<Nat>::new());
        let mut seen = BTreeSet::new();
        for a in 0..6u64 {
            for b in 0..6u64 {
                assert!(seen.insert(tuple_code(&[nat(a), nat(b)])));
                assert!(seen.insert(tuple_code(&[nat(a), nat(b), nat(a)])));
            }
        }
    }

    #[test]
    fn rt1_solver_examples() {
        let g = OmegaColoring::small(&[], &[0]);
        assert_eq!(solve_rt1(&g), SolutionCert::Word { set: MembershipWord::new(&[], &[true]).unwrap() });
        let g = OmegaColoring::small(&[2], &[1, 0]);
        let SolutionCert::Word { set } = solve_rt1(&g) else { panic!() };
        assert_eq!(set.members_below(8), vec![2, 4, 6]);
        let g = OmegaColoring::small(&[0, 0, 0], &[1]);
        let SolutionCert::Word { set } = solve_rt1(&g) else { panic!() };
        assert_eq!(set.min(), Some(3));
    }

    #[test]
    fn bound_variants_verify_alike() {
        let g = OmegaColoring::small(&[2], &[1, 0]);
        let cert = solve_rt1(&g);
        let mut b = unlimited();
        for (pid, bound) in [("RT1_3", None), ("RT1_+", Some(3)), ("RT1_N", None)] {
            let inst = Instance::Omega { bound, coloring: g.clone() };
            assert!(verify(&pid.parse().unwrap(), &inst, &cert, &mut b).unwrap(), "{pid}");
        }
        let inst = Instance::omega(g);
        assert!(verify(&"RT1_2".parse().unwrap(), &inst, &cert, &mut b).is_err());
    }

    #[test]
    fn wf_examples() {
        assert_eq!(solve_wf(&FiniteOmegaTree::root_only()), 1);
        let path = FiniteOmegaTree::new([vec![]], Growth::InfinitePath { prefix: vec![], period: vec![3] }).unwrap();
        assert_eq!(solve_wf(&path), 0);
        let deep = FiniteOmegaTree::new([vec![], vec![0], vec![0, 1], vec![0, 1, 2], vec![0, 1, 2, 3]], Growth::None);
        assert_eq!(solve_wf(&deep.unwrap()), 1);
    }

    #[test]
    fn tt1_examples() {
        let zero = PatternColoring::constant(2, 0);
        let cert = TreeCert {
            prefix: ts(&["", "0", "1"]),
            color: 0,
            evidence: [(bs("0"), bs("00")), (bs("1"), bs("10"))].into(),
        };
        assert!(verify_tree_cert(&zero, &cert).unwrap());
        let wrong = TreeCert { color: 1, ..cert };
        assert!(!verify_tree_cert(&zero, &wrong).unwrap());
        assert_eq!(solve_tt1(&zero).color, 0);
        assert_eq!(dense_or_cone(&split_example()), (1, bs("")));
        let wheel = PatternColoring::uniform(2, ConeBehavior::length_mod(&[0, 1])).unwrap();
        assert_eq!(dense_or_cone(&wheel), (0, bs("")));
    }

    #[test]
    fn v_examples() {
        let f = split_example();
        assert!(verify_v(4, &f, 1, &bs("1")));
        assert!(!verify_v(4, &f, 1, &bs("0")));
        assert!(!verify_v(4, &f, 0, &bs("")));
        for w in 0..=4u8 {
            let pid = ProblemId::V(w);
            let inst = Instance::tree(f.clone());
            let cert = solve(&pid, &inst, &mut unlimited()).unwrap();
            assert!(verify(&pid, &inst, &cert, &mut unlimited()).unwrap(), "V{w}");
        }
    }

    #[test]
    fn choice_examples() {
        let mut b = unlimited();
        let cases = [("TC_N", vec![1], Tail::Stabilized, 1), ("sTC_N", vec![], Tail::Exhaustive, -1)];
        for (pid, stages, tail, expect) in cases {
            let pid: ProblemId = pid.parse().unwrap();
            let inst = Instance::choice(CoEnum::new(&stages, tail));
            assert_eq!(solve(&pid, &inst, &mut b).unwrap(), SolutionCert::number(expect));
        }
        let finite = Instance::Word { set: MembershipWord::new(&[true, false, true], &[false]).unwrap() };
        assert!(verify(&ProblemId::IsFinite, &finite, &SolutionCert::number(1), &mut b).unwrap());
    }

    #[test]
    fn problem_ids_roundtrip() {
        for s in ["RT1_2", "RT1_+", "RT1_N", "TT1_3", "TT1_N", "D2_2", "C_N", "TC_N", "sTC_N", "isFinite", "WF", "V3", "TT1Ext_2", "FO(TT1_N)", "FO(RT1_2)"] {
            assert_eq!(s.parse::<ProblemId>().unwrap().to_string(), s);
        }
        assert!("RT1_0".parse::<ProblemId>().is_err());
        assert!("V5".parse::<ProblemId>().is_err());
    }

    #[test]
    fn first_order_examples() {
        let mut b = unlimited();
        let pid: ProblemId = "FO(TT1_2)".parse().unwrap();
        let inst = |gamma| Instance::FirstOrder {
            inner: Box::new(Instance::tree(PatternColoring::constant(2, 0))),
            delta: Functional::Identity,
            gamma,
        };
        let root = SolutionCert::Value { value: nat(0), witness: None };
        assert!(verify(&pid, &inst(Functional::Root), &root, &mut b).unwrap());
        let cert = solve(&pid, &inst(Functional::Antichain(2)), &mut b).unwrap();
        assert!(verify(&pid, &inst(Functional::Antichain(2)), &cert, &mut b).unwrap());
        let SolutionCert::Value { value, .. } = &cert else { panic!() };
        let strings = Functional::decode_antichain(value).unwrap();
        assert_eq!(strings.len(), 2);
        assert!(!strings[0].comparable(&strings[1]));

        let rt: ProblemId = "FO(RT1_2)".parse().unwrap();
        let g = Instance::FirstOrder {
            inner: Box::new(Instance::omega(OmegaColoring::small(&[1, 1], &[0, 1]))),
            delta: Functional::Identity,
            gamma: Functional::Min,
        };
        let min = solve(&rt, &g, &mut b).unwrap();
        assert!(verify(&rt, &g, &min, &mut b).unwrap());
        assert!(verify(&rt, &g, &SolutionCert::Value { value: nat(0), witness: None }, &mut b).unwrap());
    }

    #[test]
    fn program_colorings_are_only_partially_checked() {
        let pid = ProblemId::Tt1(Bound::Fixed(2));
        let inst = Instance::Program { coloring: ProgramColoring::Builtin { name: "length_parity".into() } };
        let cert = |c| SolutionCert::Tree(TreeCert { prefix: ts(&["0"]), color: c, evidence: Default::default() });
        assert!(matches!(verify(&pid, &inst, &cert(1), &mut unlimited()), Err(Error::Unverifiable(_))));
        assert!(!verify(&pid, &inst, &cert(0), &mut unlimited()).unwrap());
        assert!(matches!(solve(&pid, &inst, &mut unlimited()), Err(Error::Unverifiable(_))));
    }

    #[test]
    fn readable_view_stops_at_shortest_leaf() {
        let s = ts(&["", "0", "11", "110"]);
        assert_eq!(readable_view(&s), ts(&["", "0"]));
        assert_eq!(Functional::Root.apply_tree(&s, &mut unlimited()).unwrap(), Some(nat(0)));
        assert_eq!(Functional::Antichain(2).apply_tree(&s, &mut unlimited()).unwrap(), None);
        assert_eq!(Functional::Root.apply_tree(&TreeSet::new(), &mut unlimited()).unwrap(), None);
    }

    #[test]
    fn limit_coloring_limit() {
        let g = LimitColoring { rows: vec![vec![1, 0], vec![1]], tail: OmegaColoring::small(&[], &[0]) };
        assert_eq!(g.limit(), OmegaColoring::small(&[0, 1], &[0]));
        assert_eq!(g.stage_value(0, 0), nat(1));
        assert_eq!(g.stage_value(0, 5), nat(0));
        assert_eq!(g.settling_stage(0), 1);
    }
}
