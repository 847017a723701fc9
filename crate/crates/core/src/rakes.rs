//! Rakes: the dense-color sets `W`, infinite good rakes, their finite
//! truncations, and extraction of monochromatic trees from them.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::colorings::{Color, PatternColoring};
use crate::error::{precondition, Error, Result};
use crate::treecore::{BinStr, TreeSet};

// ---------------------------------------------------------------------------
// The sets W

/// One change in the construction of `W`: at `stage` the marker moved to
/// `tau` and `w` is the set enumerated so far.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WStage {
    pub stage: usize,
    pub tau: BinStr,
    pub w: BTreeSet<Color>,
}

/// The set `W_{f,C,σ}` with its witness `τ ⪰ σ`: every color of `C ∖ W` is
/// dense above `τ` and no color of `W` occurs above `τ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WResult {
    pub w: BTreeSet<Color>,
    pub tau: BinStr,
    pub trace: Vec<WStage>,
    /// Last stage at which anything changed.
    pub final_stage: usize,
}

impl WResult {
    /// `W[s]`: the colors enumerated by stage `s`.
    pub fn at_stage(&self, s: usize) -> BTreeSet<Color> {
        self.trace.iter().rev().find(|st| st.stage <= s).map(|st| st.w.clone()).unwrap_or_default()
    }
}

/// The staged construction. At stage `s > 0` look for the least `τ'` with
/// index below `s` extending the current marker above which some remaining
/// color does not occur; move the marker there and enumerate every such
/// color. With `within`, "does not occur" only looks that many bits ahead;
/// with `stage_limit`, stages past the limit are not run.
fn run_w(f: &PatternColoring, c: &BTreeSet<Color>, sigma: &BinStr, within: Option<usize>, stage_limit: Option<usize>) -> WResult {
    let mut w = BTreeSet::new();
    let mut tau = *sigma;
    let mut trace = Vec::new();
    let mut stage = 0usize;
    loop {
        let remaining: BTreeSet<Color> = c.difference(&w).copied().collect();
        if remaining.is_empty() {
            break;
        }
        // Once every remaining color is dense above the marker, nothing
        // above it lacks one, and the construction is finished.
        let Some(next) = f.least_extension_lacking(&tau, &remaining, within) else { break };
        let at = (stage + 1).max(next.index() as usize + 1);
        if stage_limit.is_some_and(|l| at > l) {
            break;
        }
        let lacking: Vec<Color> = remaining
            .iter()
            .copied()
            .filter(|&col| match within {
                None => !f.occurs_above(col, &next),
                Some(u) => !f.occurs_within(col, &next, u),
            })
            .collect();
        w.extend(lacking);
        tau = next;
        stage = at;
        trace.push(WStage { stage, tau, w: w.clone() });
    }
    WResult { w, tau, trace, final_stage: stage }
}

/// Exact `W_{f,C,σ}`, deciding the avoidance questions with the coloring's
/// state graph in place of an oracle for the halting problem.
pub fn compute_w(f: &PatternColoring, c: &BTreeSet<Color>, sigma: &BinStr) -> WResult {
    run_w(f, c, sigma, None, None)
}

/// Source of raw approximations for [`staged_w`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Run the construction for `u` stages, looking `u` bits ahead.
    Natural,
    /// Use the given sets for the first stages, then continue naturally.
    Scripted(Vec<BTreeSet<Color>>),
}

/// One stage of the computable approximation to `W`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedStep {
    pub u: usize,
    pub raw: BTreeSet<Color>,
    /// `raw` after repair; never all of `C`.
    pub value: BTreeSet<Color>,
    pub removed: Option<Color>,
}

/// The natural raw approximation at stage `u`.
pub fn natural_approximation(f: &PatternColoring, c: &BTreeSet<Color>, sigma: &BinStr, u: usize, exact: &WResult) -> BTreeSet<Color> {
    if u >= f.horizon() {
        // Looking `horizon` bits ahead already decides every avoidance question.
        exact.at_stage(u)
    } else {
        run_w(f, c, sigma, Some(u), Some(u)).w
    }
}

/// The marker `τ` of the construction behind [`natural_approximation`] at
/// stage `u`.
pub fn natural_witness(f: &PatternColoring, c: &BTreeSet<Color>, sigma: &BinStr, u: usize, exact: &WResult) -> BinStr {
    if u >= f.horizon() {
        exact.trace.iter().rev().find(|st| st.stage <= u).map_or(*sigma, |st| st.tau)
    } else {
        run_w(f, c, sigma, Some(u), Some(u)).tau
    }
}

/// Stage from which the natural approximation equals `W` exactly.
pub fn w_convergence_stage(f: &PatternColoring, exact: &WResult) -> usize {
    f.horizon().max(exact.final_stage)
}

/// Approximations `V_u`, `u ≤ upto`, to `W_{f,C,σ}`. Whenever the raw
/// approximation is all of `C`, the least element whose membership changed
/// most recently (or the least element, if none changed) is removed.
pub fn staged_w(f: &PatternColoring, c: &BTreeSet<Color>, sigma: &BinStr, schedule: &Schedule, upto: usize) -> Vec<StagedStep> {
    let exact = compute_w(f, c, sigma);
    let mut last_change: BTreeMap<Color, usize> = BTreeMap::new();
    let mut prev: BTreeSet<Color> = BTreeSet::new();
    let mut out = Vec::with_capacity(upto + 1);
    for u in 0..=upto {
        let raw: BTreeSet<Color> = match schedule {
            Schedule::Scripted(script) if u < script.len() => script[u].intersection(c).copied().collect(),
            _ => natural_approximation(f, c, sigma, u, &exact),
        };
        for col in prev.symmetric_difference(&raw) {
            last_change.insert(*col, u);
        }
        let mut value = raw.clone();
        let mut removed = None;
        if !c.is_empty() && c.is_subset(&raw) {
            let latest = c.iter().filter_map(|col| last_change.get(col).map(|&t| (t, *col))).max_by_key(|&(t, col)| (t, std::cmp::Reverse(col)));
            let pick = latest.map(|(_, col)| col).unwrap_or(*c.first().expect("nonempty"));
            value.remove(&pick);
            removed = Some(pick);
        }
        prev = raw.clone();
        out.push(StagedStep { u, raw, value, removed });
    }
    out
}

// ---------------------------------------------------------------------------
// Finite rakes

/// A finite `C`-rake: its colors `c_0 < … < c_{k−1}` and its nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RakeRepr", into = "RakeRepr")]
pub struct Rake {
    colors: Vec<Color>,
    nodes: TreeSet,
}

#[derive(Serialize, Deserialize)]
struct RakeRepr {
    colors: Vec<Color>,
    nodes: Vec<RakeNode>,
}

#[derive(Serialize, Deserialize)]
struct RakeNode {
    node: BinStr,
    color: Color,
}

impl TryFrom<RakeRepr> for Rake {
    type Error = Error;

    fn try_from(r: RakeRepr) -> Result<Self> {
        let rake = Rake::new(r.colors, r.nodes.iter().map(|n| n.node).collect())?;
        let ranks = rake.nodes.ranks();
        for n in &r.nodes {
            if n.color != rake.color_at_rank(ranks[&n.node]) {
                return Err(Error::Invalid(format!("node {} is annotated with the wrong color", n.node)));
            }
        }
        Ok(rake)
    }
}

impl From<Rake> for RakeRepr {
    fn from(r: Rake) -> Self {
        let ranks = r.nodes.ranks();
        let nodes = r.nodes.iter().map(|x| RakeNode { node: *x, color: r.color_at_rank(ranks[x]) }).collect();
        RakeRepr { colors: r.colors, nodes }
    }
}

/// First violated shape clause of a rake, if any.
fn shape_violation(k: usize, nodes: &TreeSet) -> Option<String> {
    if nodes.is_empty() || nodes.root().is_none() {
        return Some("not rooted".into());
    }
    if !nodes.is_symmetric() {
        return Some("not symmetric".into());
    }
    for (x, r) in nodes.ranks() {
        let succ = nodes.successors(&x).expect("member").len();
        if r % k != k - 1 && succ != 1 {
            return Some(format!("{x} has rank {r} and {succ} successors instead of one"));
        }
        if r % k == k - 1 && succ != 0 && succ != k + 1 {
            return Some(format!("{x} has rank {r} and {succ} successors instead of 0 or {}", k + 1));
        }
    }
    None
}

impl Rake {
    /// Checks the color list and every clause not involving the coloring.
    pub fn new(colors: Vec<Color>, nodes: TreeSet) -> Result<Self> {
        if colors.is_empty() || colors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("rake colors must be nonempty and strictly increasing".into()));
        }
        if let Some(v) = shape_violation(colors.len(), &nodes) {
            return Err(Error::Invalid(format!("not a rake: {v}")));
        }
        Ok(Rake { colors, nodes })
    }

    pub fn k(&self) -> usize {
        self.colors.len()
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn nodes(&self) -> &TreeSet {
        &self.nodes
    }

    pub fn height(&self) -> usize {
        self.nodes.height()
    }

    pub fn root(&self) -> BinStr {
        self.nodes.root().expect("rakes are rooted")
    }

    pub fn color_at_rank(&self, r: usize) -> Color {
        self.colors[r % self.k()]
    }

    pub fn block(&self, x: &BinStr) -> Result<usize> {
        Ok(self.nodes.rank(x)? / self.k())
    }

    /// Are all leaves at the top of the last block?
    pub fn is_complete(&self) -> bool {
        let h = self.height();
        h % self.k() == 0 && self.nodes.leaves().iter().all(|l| self.nodes.rank(l).ok() == Some(h - 1))
    }

    /// The first `m` blocks.
    pub fn restrict_blocks(&self, m: usize) -> Rake {
        Rake { colors: self.colors.clone(), nodes: self.nodes.restrict_rank(m * self.k()) }
    }

    fn only_successor(&self, x: &BinStr) -> BinStr {
        self.nodes.successors(x).expect("member").first().expect("one successor")
    }

    /// The chain (block segment of length `k`) containing `x`.
    pub fn chain_of(&self, x: &BinStr) -> Result<Vec<BinStr>> {
        let r = self.nodes.rank(x)?;
        let mut start = *x;
        for _ in 0..r % self.k() {
            start = self.nodes.predecessor(&start).expect("ranked member has a predecessor");
        }
        let mut chain = vec![start];
        for _ in 1..self.k() {
            let last = *chain.last().expect("nonempty");
            if self.nodes.successors(&last)?.is_empty() {
                break;
            }
            chain.push(self.only_successor(&last));
        }
        Ok(chain)
    }

    /// Starts of the chains of the next block below the chain of `x`.
    pub fn child_chains(&self, x: &BinStr) -> Result<Vec<BinStr>> {
        let chain = self.chain_of(x)?;
        let end = chain.last().expect("nonempty");
        Ok(self.nodes.successors(end)?.iter().copied().collect())
    }

    /// Every `S ⊴ R` of height `m`; needs at least `m` full blocks.
    pub fn subrakes(&self, m: usize) -> Result<Vec<TreeSet>> {
        if m == 0 {
            return Ok(vec![TreeSet::new()]);
        }
        if self.height() < m * self.k() {
            return precondition(format!("rake of height {} has fewer than {m} blocks", self.height()));
        }
        let mut out = Vec::new();
        let root = self.root();
        for i in 0..self.k() {
            let chain = self.chain_of(&root)?;
            out.extend(self.subrakes_from(chain[i], i, m - 1)?);
        }
        out.sort();
        Ok(out)
    }

    fn subrakes_from(&self, x: BinStr, residue: usize, levels: usize) -> Result<Vec<TreeSet>> {
        if levels == 0 {
            return Ok(vec![TreeSet::singleton(x)]);
        }
        let below: Vec<BinStr> =
            self.child_chains(&x)?.iter().map(|s| Ok(self.chain_of(s)?[residue])).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for (a, left_root) in below.iter().enumerate() {
            for right_root in &below[a + 1..] {
                let lefts = self.subrakes_from(*left_root, residue, levels - 1)?;
                let rights = self.subrakes_from(*right_root, residue, levels - 1)?;
                for l in &lefts {
                    for r in &rights {
                        let mut s = l.union(r);
                        s.insert(x);
                        out.push(s);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Checks every rake clause, including colors, against `f`.
pub fn validate_rake(f: &PatternColoring, r: &Rake) -> Result<()> {
    if let Some(v) = shape_violation(r.k(), r.nodes()) {
        return Err(Error::Invalid(format!("not a rake: {v}")));
    }
    for (x, rank) in r.nodes().ranks() {
        let want = r.color_at_rank(rank);
        if f.eval(&x) != want {
            return Err(Error::Invalid(format!("{x} has rank {rank} but color {} instead of {want}", f.eval(&x))));
        }
    }
    Ok(())
}

/// Does every extension of the root take a color in `C`?
pub fn is_good(f: &PatternColoring, r: &Rake) -> bool {
    f.colors_above(&r.root()).iter().all(|c| r.colors().contains(c))
}

// ---------------------------------------------------------------------------
// Infinite rakes

type Chain = Vec<BinStr>;

/// A computable rake of height `ω`, materialized block by block on demand.
///
/// The block-0 chain starts at the root; each chain node `x_i` is the least
/// proper extension of `x_{i−1}` colored `c_i`. The end of every chain fans
/// out to `k + 1` chains started at the least `c_0`-colored extensions of
/// `x·β` for the `k + 1` lexicographically least strings `β` of length
/// `⌈log₂(k + 1)⌉`.
pub struct LazyRake {
    f: PatternColoring,
    colors: Vec<Color>,
    root: BinStr,
    length_bound: Option<usize>,
    blocks: Mutex<Vec<Vec<Chain>>>,
}

impl std::fmt::Debug for LazyRake {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("LazyRake").field("colors", &self.colors).field("root", &self.root).finish()
    }
}

impl LazyRake {
    pub fn new(f: &PatternColoring, colors: Vec<Color>, root: BinStr) -> Result<Self> {
        if colors.is_empty() || colors.windows(2).any(|w| w[0] >= w[1]) {
            return precondition("rake colors must be nonempty and strictly increasing");
        }
        if f.eval(&root) != colors[0] {
            return precondition(format!("root {root} does not have color {}", colors[0]));
        }
        Ok(LazyRake { f: f.clone(), colors, root, length_bound: None, blocks: Mutex::new(Vec::new()) })
    }

    /// Searches give up (and blocks are missing) past this string length.
    pub fn with_length_bound(mut self, bound: usize) -> Self {
        self.length_bound = Some(bound);
        self
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn root(&self) -> BinStr {
        self.root
    }

    fn least(&self, s: &BinStr, c: Color, proper: bool) -> Option<BinStr> {
        let x = self.f.least_extension_with_color(s, c, proper)?;
        self.length_bound.is_none_or(|b| x.len() <= b).then_some(x)
    }

    fn chain_from(&self, start: BinStr) -> Option<Chain> {
        let mut chain = vec![start];
        for &c in &self.colors[1..] {
            let next = self.least(chain.last().expect("nonempty"), c, true)?;
            chain.push(next);
        }
        Some(chain)
    }

    fn fan_out(&self, end: &BinStr) -> Option<Vec<Chain>> {
        let k = self.colors.len();
        // k+1 lexicographically least stubs of one common length, so that
        // sibling chains start level with each other.
        let width = (usize::BITS - k.leading_zeros()) as usize;
        (0..=k)
            .map(|j| {
                let bits: Vec<bool> = (0..width).rev().map(|i| (j >> i) & 1 == 1).collect();
                let stub = end.concat(&BinStr::from_bits(&bits));
                let start = self.least(&stub, self.colors[0], false)?;
                self.chain_from(start)
            })
            .collect()
    }

    /// Chains of block `b`, ordered by parent chain then stub; `None` when a
    /// search exceeds the length bound or a color is missing.
    pub fn block(&self, b: usize) -> Option<Vec<Chain>> {
        let mut blocks = self.blocks.lock().expect("rake cache");
        while blocks.len() <= b {
            let next = match blocks.last() {
                None => vec![self.chain_from(self.root)?],
                Some(prev) => {
                    let mut out = Vec::new();
                    for chain in prev {
                        out.extend(self.fan_out(chain.last().expect("nonempty"))?);
                    }
                    out
                }
            };
            blocks.push(next);
        }
        Some(blocks[b].clone())
    }

    /// The finite rake `R^{rk < mk}`.
    pub fn prefix(&self, m: usize) -> Option<Rake> {
        let mut nodes = TreeSet::new();
        for b in 0..m {
            for chain in self.block(b)? {
                for x in chain {
                    nodes.insert(x);
                }
            }
        }
        Some(Rake { colors: self.colors.clone(), nodes })
    }
}

/// The rake built from `W_{f, ran f, ⟨⟩}`.
#[derive(Debug)]
pub struct GoodRake {
    pub colors: Vec<Color>,
    pub w: WResult,
    pub rake: LazyRake,
}

/// `C = ran(f) ∖ W_{f,ran(f),⟨⟩}` and a good `C`-rake of height `ω` rooted
/// at the least `c_0`-colored extension of the witness `τ`.
pub fn build_good_rake(f: &PatternColoring) -> GoodRake {
    let range = f.range();
    let w = compute_w(f, &range, &BinStr::EMPTY);
    let colors: Vec<Color> = range.difference(&w.w).copied().collect();
    let root = f.least_extension_with_color(&w.tau, colors[0], false).expect("remaining colors are dense above the witness");
    let rake = LazyRake::new(f, colors.clone(), root).expect("root has color c_0");
    GoodRake { colors, w, rake }
}

/// Outcome of [`truncate_rake`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub m: usize,
    pub rake: Rake,
}

/// Least `m ≤ cap` such that `phi` holds on every `S ⊴ R^{rk<mk}` of height
/// `m`, with that finite rake.
pub fn truncate_rake(r: &LazyRake, mut phi: impl FnMut(&TreeSet) -> Result<bool>, cap: usize) -> Result<Truncation> {
    for m in 1..=cap {
        let Some(rake) = r.prefix(m) else {
            return precondition(format!("block {} of the rake could not be built", m - 1));
        };
        let mut all = true;
        for s in rake.subrakes(m)? {
            if !phi(&s)? {
                all = false;
                break;
            }
        }
        if all {
            check_monotone(r, &mut phi, m)?;
            return Ok(Truncation { m, rake });
        }
    }
    Err(Error::BudgetExceeded(cap as u64))
}

/// Largest height at which the end-extensions of a truncation are
/// re-checked; above it the number of candidate sets explodes.
const MONOTONE_CHECK_HEIGHT: usize = 3;

/// Every `S ⊴ R` of height `m + 1` end-extends one of height `m`, so a
/// predicate monotone under end-extension must hold on all of them too.
fn check_monotone(r: &LazyRake, phi: &mut impl FnMut(&TreeSet) -> Result<bool>, m: usize) -> Result<()> {
    if m + 1 > MONOTONE_CHECK_HEIGHT {
        return Ok(());
    }
    let Some(next) = r.prefix(m + 1) else { return Ok(()) };
    for s in next.subrakes(m + 1)? {
        if !phi(&s)? {
            return precondition(format!("predicate fails on the end-extension {s:?}; it is not monotone"));
        }
    }
    Ok(())
}

/// The labeling `g` by reverse induction on rank: leaves take their given
/// colors, single successors pass their label down, and a fan-out takes the
/// least label shared by two of its successors.
pub fn g_labeling(r: &Rake, leaf_colors: &BTreeMap<BinStr, Color>) -> Result<BTreeMap<BinStr, Color>> {
    if !r.is_complete() {
        return precondition("rake has a leaf below its last block");
    }
    let leaves = r.nodes().leaves();
    for l in &leaves {
        match leaf_colors.get(l) {
            Some(c) if r.colors().contains(c) => {}
            Some(c) => return precondition(format!("leaf color {c} of {l} is not a rake color")),
            None => return precondition(format!("no color for leaf {l}")),
        }
    }
    let ranks = r.nodes().ranks();
    let mut order: Vec<(usize, BinStr)> = ranks.iter().map(|(x, rk)| (*rk, *x)).collect();
    order.sort_by(|a, b| b.cmp(a));
    let mut g: BTreeMap<BinStr, Color> = BTreeMap::new();
    for (_, x) in order {
        let succ = r.nodes().successors(&x)?;
        let label = match succ.len() {
            0 => leaf_colors[&x],
            1 => g[&succ.first().expect("one")],
            _ => {
                let mut counts: BTreeMap<Color, usize> = BTreeMap::new();
                for y in &succ {
                    *counts.entry(g[y]).or_default() += 1;
                }
                *counts.iter().find(|(_, &n)| n >= 2).expect("pigeonhole on k+1 successors").0
            }
        };
        g.insert(x, label);
    }
    Ok(g)
}

/// Outcome of [`extract_mono`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub color: Color,
    pub set: TreeSet,
}

/// A monochromatic `S ⊴ R` of height `ht(R)/k`, whose leaves lie below
/// leaves of `R` that were assigned its color.
pub fn extract_mono(f: &PatternColoring, r: &Rake, leaf_colors: &BTreeMap<BinStr, Color>) -> Result<Extraction> {
    let g = g_labeling(r, leaf_colors)?;
    let c = g[&r.root()];
    let m = r.height() / r.k();
    let start = *r.nodes().iter().find(|x| f.eval(x) == c).expect("block 0 has every color");
    let mut set = TreeSet::singleton(start);
    let mut frontier = vec![start];
    for _ in 1..m {
        let mut next = Vec::new();
        for x in &frontier {
            let mut starts: Vec<BinStr> = r.child_chains(x)?.into_iter().filter(|s| g[s] == c).collect();
            starts.sort();
            if starts.len() < 2 {
                return Err(Error::Invalid(format!("fan-out below {x} lacks two chains labeled {c}")));
            }
            for s in &starts[..2] {
                let y = *r.chain_of(s)?.iter().find(|y| f.eval(y) == c).expect("chains carry every color");
                set.insert(y);
                next.push(y);
            }
        }
        frontier = next;
    }
    Ok(Extraction { color: c, set })
}

/// `c_λ`: the least color of `C ∖ W_{f,C,λ}` for each leaf `λ`.
pub fn exact_leaf_colors(f: &PatternColoring, r: &Rake) -> Result<BTreeMap<BinStr, Color>> {
    let c: BTreeSet<Color> = r.colors().iter().copied().collect();
    r.nodes()
        .leaves()
        .iter()
        .map(|l| {
            let w = compute_w(f, &c, l);
            c.difference(&w.w)
                .next()
                .map(|&col| (*l, col))
                .ok_or_else(|| Error::PreconditionViolated(format!("every rake color is avoidable above {l}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorings::tests::split_example;
    use crate::colorings::ConeBehavior;
    use crate::treecore::{bs, is_subrake, ts};

    fn set(v: &[Color]) -> BTreeSet<Color> {
        v.iter().copied().collect()
    }

    #[test]
    fn w_on_the_split_example() {
        let f = split_example();
        let r = compute_w(&f, &set(&[0, 1]), &BinStr::EMPTY);
        assert_eq!(r.w, set(&[0]));
        assert_eq!(r.tau, bs("1"));
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].stage, 3);
    }

    #[test]
    fn w_is_empty_for_wheels() {
        let f = PatternColoring::uniform(3, ConeBehavior::length_mod(&[0, 1, 2])).unwrap();
        let r = compute_w(&f, &set(&[0, 1, 2]), &BinStr::EMPTY);
        assert!(r.w.is_empty());
        assert_eq!(r.tau, BinStr::EMPTY);
    }

    #[test]
    fn good_rake_on_the_split_example() {
        let f = split_example();
        let g = build_good_rake(&f);
        assert_eq!(g.colors, vec![1]);
        assert_eq!(g.rake.root(), bs("1"));
        let r = g.rake.prefix(3).unwrap();
        validate_rake(&f, &r).unwrap();
        assert!(is_good(&f, &r));
        assert_eq!(r.height(), 3);
    }

    #[test]
    fn three_color_rake_is_valid() {
        let f = PatternColoring::uniform(3, ConeBehavior::length_mod(&[0, 1, 2])).unwrap();
        let g = build_good_rake(&f);
        assert_eq!(g.colors, vec![0, 1, 2]);
        let r = g.rake.prefix(2).unwrap();
        validate_rake(&f, &r).unwrap();
        assert_eq!(r.nodes().len(), 3 + 4 * 3);
        assert!(r.is_complete());
        let serial = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Rake>(&serial).unwrap(), r);
        for s in r.subrakes(2).unwrap() {
            assert!(is_subrake(&s, &r));
            let c = f.eval(&s.first().unwrap());
            assert!(s.iter().all(|x| f.eval(x) == c));
        }
        assert_eq!(r.subrakes(2).unwrap().len(), 3 * 6);
    }

    #[test]
    fn validation_rejects_bad_rakes() {
        let f = PatternColoring::constant(1, 0);
        assert!(Rake::new(vec![0], ts(&["", "0"])).is_err());
        assert!(Rake::new(vec![0], ts(&["0", "1"])).is_err());
        let r = Rake::new(vec![0], ts(&["", "0", "1"])).unwrap();
        validate_rake(&f, &r).unwrap();
        let wrong = Rake::new(vec![1], ts(&["", "0", "1"])).unwrap();
        assert!(validate_rake(&f, &wrong).is_err());
    }

    #[test]
    fn labeling_examples() {
        // k = 2: chain ⟨⟩, 0; fan-out to 000, 001 (…) with three chains.
        let f = PatternColoring::uniform(2, ConeBehavior::length_mod(&[0, 1])).unwrap();
        let g = build_good_rake(&f);
        let r = g.rake.prefix(2).unwrap();
        let leaves: Vec<BinStr> = r.nodes().leaves().iter().copied().collect();
        assert_eq!(leaves.len(), 3);
        let mut by_chain: Vec<BinStr> = r.child_chains(&r.root()).unwrap();
        by_chain.sort();
        let leaf_of = |s: &BinStr| *r.chain_of(s).unwrap().last().unwrap();
        let labels: BTreeMap<BinStr, Color> =
            by_chain.iter().zip([0, 1, 1]).map(|(s, c)| (leaf_of(s), c)).collect();
        assert_eq!(g_labeling(&r, &labels).unwrap()[&r.root()], 1);
        let labels: BTreeMap<BinStr, Color> =
            by_chain.iter().zip([0, 0, 1]).map(|(s, c)| (leaf_of(s), c)).collect();
        assert_eq!(g_labeling(&r, &labels).unwrap()[&r.root()], 0);
        let e = extract_mono(&f, &r, &labels).unwrap();
        assert_eq!(e.color, 0);
        assert_eq!(e.set.iso_to_full(), Some(2));
        assert!(is_subrake(&e.set, &r));
    }

    #[test]
    fn truncation_examples() {
        let f = PatternColoring::uniform(2, ConeBehavior::length_mod(&[0, 1])).unwrap();
        let g = build_good_rake(&f);
        let mut b = crate::error::Budget::unlimited();
        let root = crate::problems::Functional::Root;
        let t = truncate_rake(&g.rake, |s| Ok(root.apply_tree(s, &mut b)?.is_some()), 4).unwrap();
        assert_eq!(t.m, 1);
        let anti = crate::problems::Functional::Antichain(2);
        let t = truncate_rake(&g.rake, |s| Ok(anti.apply_tree(s, &mut b)?.is_some()), 4).unwrap();
        assert_eq!(t.m, 2);
        assert!(truncate_rake(&g.rake, |_| Ok(false), 2).is_err());
    }

    #[test]
    fn staged_repair() {
        let f = split_example();
        let c = set(&[0, 1]);
        let script = vec![set(&[0]), set(&[0, 1]), set(&[0]), set(&[0, 1]), set(&[0])];
        let steps = staged_w(&f, &c, &BinStr::EMPTY, &Schedule::Scripted(script), 8);
        assert_eq!(steps[1].removed, Some(1));
        assert_eq!(steps[1].value, set(&[0]));
        assert_eq!(steps[3].removed, Some(1));
        assert!(steps.iter().all(|s| !c.is_subset(&s.value)));
        let exact = compute_w(&f, &c, &BinStr::EMPTY);
        let from = w_convergence_stage(&f, &exact);
        let natural = staged_w(&f, &c, &BinStr::EMPTY, &Schedule::Natural, from + 5);
        assert!(natural[from..].iter().all(|s| s.value == exact.w));
    }
}
