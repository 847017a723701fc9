//! Colorings of the full binary tree.
//!
//! A [`PatternColoring`] is a finite decision tree followed by a periodic or
//! finite-state behavior in each leaf cone. Every such coloring is a finite
//! automaton over `{0,1}` in disguise, so density, avoidance and
//! extendability questions reduce to reachability in a small state graph and
//! are decided exactly. [`ProgramColoring`] only supports budgeted pointwise
//! evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Budget, Error, Result};
use crate::problems::FiniteOmegaTree;
use crate::treecore::{BinStr, TreeSet, MAX_LEN};

pub type Color = usize;

/// A deterministic finite automaton whose states carry colors. Inside a cone
/// it is started at the cone's leaf and fed the bits that follow the leaf.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dfa {
    pub start: usize,
    pub colors: Vec<Color>,
    pub next: Vec<[usize; 2]>,
}

impl Dfa {
    pub fn run(&self, bits: impl Iterator<Item = bool>) -> usize {
        bits.fold(self.start, |q, b| self.next[q][b as usize])
    }

    fn validate(&self, palette: usize) -> Result<()> {
        let n = self.colors.len();
        if n == 0 || self.next.len() != n || self.start >= n {
            return Err(Error::Invalid("automaton shape mismatch".into()));
        }
        if self.next.iter().flatten().any(|&q| q >= n) {
            return Err(Error::Invalid("automaton transition out of range".into()));
        }
        if self.colors.iter().any(|&c| c >= palette) {
            return Err(Error::Invalid("automaton color outside palette".into()));
        }
        Ok(())
    }
}

/// How a leaf cone of the decision set is colored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeBehavior {
    /// Every proper extension of the leaf gets `color`.
    Constant { color: Color },
    /// A proper extension `σ` gets `wheel[|σ| mod wheel.len()]`.
    LengthMod { wheel: Vec<Color> },
    /// A proper extension gets the color of the state reached after reading
    /// the bits past the leaf.
    Automaton { dfa: Dfa },
}

impl ConeBehavior {
    pub fn constant(color: Color) -> Self {
        ConeBehavior::Constant { color }
    }

    pub fn length_mod(wheel: &[Color]) -> Self {
        ConeBehavior::LengthMod { wheel: wheel.to_vec() }
    }

    /// Color of the last bit, through `map`.
    pub fn last_bit(map: [Color; 2]) -> Self {
        ConeBehavior::Automaton {
            dfa: Dfa { start: 0, colors: vec![map[0], map[0], map[1]], next: vec![[1, 2], [1, 2], [1, 2]] },
        }
    }

    pub fn period(&self) -> usize {
        match self {
            ConeBehavior::LengthMod { wheel } => wheel.len(),
            _ => 1,
        }
    }

    fn validate(&self, palette: usize) -> Result<()> {
        match self {
            ConeBehavior::Constant { color } if *color >= palette => {
                Err(Error::Invalid(format!("cone color {color} outside palette {palette}")))
            }
            ConeBehavior::LengthMod { wheel } if wheel.is_empty() => Err(Error::Invalid("empty wheel".into())),
            ConeBehavior::LengthMod { wheel } if wheel.iter().any(|&c| c >= palette) => {
                Err(Error::Invalid("wheel color outside palette".into()))
            }
            ConeBehavior::Automaton { dfa } => dfa.validate(palette),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Table(BinStr),
    Cone { leaf: usize, local: usize },
}

/// The finite state graph behind a pattern coloring, with per-state answers
/// to the questions the rest of the crate asks.
#[derive(Debug)]
struct Analysis {
    nodes: Vec<Node>,
    ids: HashMap<Node, usize>,
    succ: Vec<[usize; 2]>,
    color: Vec<Color>,
    /// `reach[q]`: states reachable from `q` in zero or more steps.
    reach: Vec<Vec<usize>>,
    /// `reaches_color[q][c]`.
    reaches_color: Vec<Vec<bool>>,
    /// `dense[q][c]`: every state reachable from `q` can still reach color `c`.
    dense: Vec<Vec<bool>>,
    /// `branching[c][q]`: `q` can root an infinite monochromatic copy of the full tree in color `c`.
    branching: Vec<Vec<bool>>,
    /// `dist[q][c]`: fewest bits from `q` to a `c`-colored state.
    dist: Vec<Vec<Option<usize>>>,
}

/// A coloring given by a finite decision set `D` with a color per node and a
/// [`ConeBehavior`] per leaf of `D`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "PatternRepr", into = "PatternRepr")]
pub struct PatternColoring {
    palette: usize,
    table: BTreeMap<BinStr, Color>,
    cones: BTreeMap<BinStr, ConeBehavior>,
    leaf_order: Vec<BinStr>,
    analysis: OnceLock<Arc<Analysis>>,
}

#[derive(Serialize, Deserialize)]
struct PatternRepr {
    palette: usize,
    nodes: BTreeMap<BinStr, Color>,
    cones: BTreeMap<BinStr, ConeBehavior>,
}

impl TryFrom<PatternRepr> for PatternColoring {
    type Error = Error;

    fn try_from(r: PatternRepr) -> Result<Self> {
        PatternColoring::new(r.palette, r.nodes, r.cones)
    }
}

impl From<PatternColoring> for PatternRepr {
    fn from(p: PatternColoring) -> Self {
        PatternRepr { palette: p.palette, nodes: p.table, cones: p.cones }
    }
}

impl PartialEq for PatternColoring {
    fn eq(&self, other: &Self) -> bool {
        self.palette == other.palette && self.table == other.table && self.cones == other.cones
    }
}

impl Eq for PatternColoring {}

impl fmt::Debug for PatternColoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PatternColoring")
            .field("palette", &self.palette)
            .field("table", &self.table)
            .field("cones", &self.cones)
            .finish()
    }
}

impl PatternColoring {
    /// Validates that `D` (the keys of `table`) is prefix closed, contains
    /// `⟨⟩`, gives every node 0 or 2 children, and that `cones` is keyed by
    /// exactly the leaves of `D`.
    pub fn new(
        palette: usize,
        table: BTreeMap<BinStr, Color>,
        cones: BTreeMap<BinStr, ConeBehavior>,
    ) -> Result<Self> {
        if palette == 0 {
            return Err(Error::Invalid("palette must be at least 1".into()));
        }
        if !table.contains_key(&BinStr::EMPTY) {
            return Err(Error::Invalid("decision set must contain the empty string".into()));
        }
        let mut leaves = Vec::new();
        for (s, &c) in &table {
            if c >= palette {
                return Err(Error::Invalid(format!("table color {c} at {s} outside palette")));
            }
            if let Some(p) = s.parent() {
                if !table.contains_key(&p) {
                    return Err(Error::Invalid(format!("decision set not prefix closed at {s}")));
                }
            }
            let kids = [false, true].iter().filter(|&&b| s.len() < MAX_LEN && table.contains_key(&s.child(b))).count();
            match kids {
                0 => leaves.push(*s),
                2 => {}
                _ => return Err(Error::Invalid(format!("decision node {s} has exactly one child"))),
            }
        }
        let cone_keys: Vec<BinStr> = cones.keys().copied().collect();
        if cone_keys != leaves {
            return Err(Error::Invalid("cone behaviors must be given for exactly the decision leaves".into()));
        }
        for b in cones.values() {
            b.validate(palette)?;
        }
        Ok(PatternColoring { palette, table, cones, leaf_order: leaves, analysis: OnceLock::new() })
    }

    /// `D = {⟨⟩}` with one behavior; the root gets the color the behavior
    /// would give a string of length 0.
    pub fn uniform(palette: usize, behavior: ConeBehavior) -> Result<Self> {
        let root_color = match &behavior {
            ConeBehavior::Constant { color } => *color,
            ConeBehavior::LengthMod { wheel } => wheel.first().copied().unwrap_or(0),
            ConeBehavior::Automaton { dfa } => dfa.colors.get(dfa.start).copied().unwrap_or(0),
        };
        Self::new(palette, [(BinStr::EMPTY, root_color)].into(), [(BinStr::EMPTY, behavior)].into())
    }

    pub fn constant(palette: usize, color: Color) -> Self {
        Self::uniform(palette, ConeBehavior::constant(color)).expect("valid constant coloring")
    }

    /// Builds a coloring whose decision set is every string of length at
    /// most `depth`.
    pub fn complete(
        palette: usize,
        depth: usize,
        node_color: impl Fn(&BinStr) -> Color,
        cone: impl Fn(&BinStr) -> ConeBehavior,
    ) -> Result<Self> {
        let table = BinStr::all_up_to(depth).map(|s| (s, node_color(&s))).collect();
        let cones = BinStr::EMPTY.extensions_of_len(depth).map(|s| (s, cone(&s))).collect();
        Self::new(palette, table, cones)
    }

    pub fn palette(&self) -> usize {
        self.palette
    }

    pub fn table(&self) -> &BTreeMap<BinStr, Color> {
        &self.table
    }

    pub fn cones(&self) -> &BTreeMap<BinStr, ConeBehavior> {
        &self.cones
    }

    /// Length of the longest decision node.
    pub fn depth(&self) -> usize {
        self.table.keys().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Least common multiple of the cone periods.
    pub fn period_lcm(&self) -> usize {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        self.cones.values().map(|b| b.period()).fold(1, |acc, p| acc / gcd(acc, p) * p)
    }

    fn governing_leaf(&self, s: &BinStr) -> BinStr {
        (0..s.len()).rev().map(|l| s.prefix(l)).find(|p| self.table.contains_key(p)).expect("root is in D")
    }

    pub fn eval(&self, s: &BinStr) -> Color {
        if let Some(&c) = self.table.get(s) {
            return c;
        }
        let leaf = self.governing_leaf(s);
        match &self.cones[&leaf] {
            ConeBehavior::Constant { color } => *color,
            ConeBehavior::LengthMod { wheel } => wheel[s.len() % wheel.len()],
            ConeBehavior::Automaton { dfa } => dfa.colors[dfa.run(s.bits().skip(leaf.len()))],
        }
    }

    fn analysis(&self) -> &Analysis {
        self.analysis.get_or_init(|| Arc::new(Analysis::build(self)))
    }

    fn node_of(&self, s: &BinStr) -> Node {
        if self.table.contains_key(s) {
            return Node::Table(*s);
        }
        let leaf = self.governing_leaf(s);
        let idx = self.leaf_order.binary_search(&leaf).expect("leaf");
        let local = match &self.cones[&leaf] {
            ConeBehavior::Constant { .. } => 0,
            ConeBehavior::LengthMod { wheel } => s.len() % wheel.len(),
            ConeBehavior::Automaton { dfa } => dfa.run(s.bits().skip(leaf.len())),
        };
        Node::Cone { leaf: idx, local }
    }

    fn step(&self, node: Node, bit: bool) -> Node {
        match node {
            Node::Table(s) => {
                let child = s.child(bit);
                if self.table.contains_key(&child) {
                    return Node::Table(child);
                }
                let idx = self.leaf_order.binary_search(&s).expect("childless node is a leaf");
                let local = match &self.cones[&s] {
                    ConeBehavior::Constant { .. } => 0,
                    ConeBehavior::LengthMod { wheel } => (s.len() + 1) % wheel.len(),
                    ConeBehavior::Automaton { dfa } => dfa.next[dfa.start][bit as usize],
                };
                Node::Cone { leaf: idx, local }
            }
            Node::Cone { leaf, local } => {
                let local = match &self.cones[&self.leaf_order[leaf]] {
                    ConeBehavior::Constant { .. } => 0,
                    ConeBehavior::LengthMod { wheel } => (local + 1) % wheel.len(),
                    ConeBehavior::Automaton { dfa } => dfa.next[local][bit as usize],
                };
                Node::Cone { leaf, local }
            }
        }
    }

    fn node_color(&self, node: Node) -> Color {
        match node {
            Node::Table(s) => self.table[&s],
            Node::Cone { leaf, local } => match &self.cones[&self.leaf_order[leaf]] {
                ConeBehavior::Constant { color } => *color,
                ConeBehavior::LengthMod { wheel } => wheel[local],
                ConeBehavior::Automaton { dfa } => dfa.colors[local],
            },
        }
    }

    fn state(&self, s: &BinStr) -> usize {
        self.analysis().ids[&self.node_of(s)]
    }

    /// Number of states of the underlying automaton. Any color reachable
    /// above a string is reached within this many extra bits.
    pub fn horizon(&self) -> usize {
        self.analysis().nodes.len()
    }

    /// Is `{τ : f(τ) = c}` dense above `s`?
    pub fn dense_above(&self, c: Color, s: &BinStr) -> bool {
        c < self.palette && self.analysis().dense[self.state(s)][c]
    }

    /// All colors dense above `s`. May be empty, but then some extension of
    /// `s` within [`horizon`](Self::horizon) bits has a nonempty set.
    pub fn recurrent_colors(&self, s: &BinStr) -> BTreeSet<Color> {
        (0..self.palette).filter(|&c| self.dense_above(c, s)).collect()
    }

    /// Does some `ρ ⪰ s` have color `c`?
    pub fn occurs_above(&self, c: Color, s: &BinStr) -> bool {
        c < self.palette && self.analysis().reaches_color[self.state(s)][c]
    }

    /// `f(ρ) ≠ c` for every `ρ ⪰ s`.
    pub fn avoids_above(&self, s: &BinStr, c: Color) -> bool {
        !self.occurs_above(c, s)
    }

    /// Colors occurring somewhere above `s`.
    pub fn colors_above(&self, s: &BinStr) -> BTreeSet<Color> {
        (0..self.palette).filter(|&c| self.occurs_above(c, s)).collect()
    }

    /// The range of the coloring.
    pub fn range(&self) -> BTreeSet<Color> {
        self.colors_above(&BinStr::EMPTY)
    }

    /// `Some(c)` when every `τ ⪰ s` has color `c`.
    pub fn constant_above(&self, s: &BinStr) -> Option<Color> {
        let colors = self.colors_above(s);
        (colors.len() == 1).then(|| *colors.first().expect("one color"))
    }

    /// Are all `τ ⪰ s` of color `c` pairwise comparable?
    pub fn color_forms_chain_above(&self, c: Color, s: &BinStr) -> bool {
        let a = self.analysis();
        !a.reach[self.state(s)].iter().any(|&q| {
            let [l, r] = a.succ[q];
            c < self.palette && a.reaches_color[l][c] && a.reaches_color[r][c]
        })
    }

    /// Can a string whose state is reached from `s` by at least one bit root
    /// an infinite monochromatic copy of the full tree in color `c`?
    pub fn can_branch_properly_above(&self, c: Color, s: &BinStr) -> bool {
        if c >= self.palette {
            return false;
        }
        let a = self.analysis();
        let q = self.state(s);
        a.succ[q].iter().any(|&r| a.reach[r].iter().any(|&t| a.branching[c][t]))
    }

    /// Can `s` itself root an infinite monochromatic copy of the full tree in color `c`?
    pub fn roots_mono_tree(&self, c: Color, s: &BinStr) -> bool {
        c < self.palette && self.analysis().branching[c][self.state(s)]
    }

    /// Is there `H ≅ 2^{<ω}` monochromatic in color `c` with `H^{rk<n} = S`?
    ///
    /// `S` must be empty or full-tree shaped. Holds iff `f` is `c` on `S` and
    /// above every leaf of `S` some proper extension can root an infinite
    /// `c`-colored full tree.
    pub fn mono_extendable(&self, s: &TreeSet, c: Color) -> Result<bool> {
        if s.iso_to_full().is_none() {
            return precondition("set is not shaped like a full binary tree");
        }
        if c >= self.palette {
            return Ok(false);
        }
        if s.is_empty() {
            let a = self.analysis();
            return Ok(a.reach[self.state(&BinStr::EMPTY)].iter().any(|&t| a.branching[c][t]));
        }
        if s.iter().any(|x| self.eval(x) != c) {
            return Ok(false);
        }
        Ok(s.leaves().iter().all(|l| self.can_branch_properly_above(c, l)))
    }

    /// Length-lex least `ρ ⪰ s` (or `ρ ≻ s` when `proper`) with `f(ρ) = c`.
    pub fn least_extension_with_color(&self, s: &BinStr, c: Color, proper: bool) -> Option<BinStr> {
        self.least_extension_where(s, proper, |q, a| a.color[q] == c)
    }

    /// Length-lex least `ρ ⪰ s` (or `ρ ≻ s`) that can root an infinite
    /// monochromatic full tree of color `c`, and has color `c` itself.
    pub fn least_mono_root(&self, s: &BinStr, c: Color, proper: bool) -> Option<BinStr> {
        if c >= self.palette {
            return None;
        }
        self.least_extension_where(s, proper, |q, a| a.branching[c][q])
    }

    /// Length-lex least `ρ ⪰ s` with every `τ ⪰ ρ` of color `c`.
    pub fn least_constant_cone(&self, s: &BinStr, c: Color) -> Option<BinStr> {
        if c >= self.palette {
            return None;
        }
        self.least_extension_where(s, false, |q, a| a.reach[q].iter().all(|&y| a.color[y] == c))
    }

    /// Least `j` such that some extension of `s` of length `|s| + j` has
    /// color `c`.
    pub fn color_distance(&self, s: &BinStr, c: Color) -> Option<usize> {
        if c >= self.palette {
            return None;
        }
        self.analysis().dist[self.state(s)][c]
    }

    /// Does some `ρ ⪰ s` with `|ρ| ≤ |s| + steps` have color `c`?
    pub fn occurs_within(&self, c: Color, s: &BinStr, steps: usize) -> bool {
        self.color_distance(s, c).is_some_and(|d| d <= steps)
    }

    /// Length-lex least `ρ ⪰ s` above which some color of `colors` does not
    /// occur (within `within` further bits, when given).
    pub fn least_extension_lacking(&self, s: &BinStr, colors: &BTreeSet<Color>, within: Option<usize>) -> Option<BinStr> {
        let palette = self.palette;
        self.least_extension_where(s, false, |q, a| {
            colors.iter().any(|&c| {
                c >= palette || a.dist[q][c].is_none_or(|d| within.is_some_and(|w| d > w))
            })
        })
    }

    /// Length-lex least `ρ ⪰ s` such that no `σ ⪰ ρ` with `|σ| < n` has
    /// color `c`.
    pub fn least_avoiding_extension(&self, s: &BinStr, c: Color, n: usize) -> BinStr {
        if s.len() >= n || c >= self.palette {
            return *s;
        }
        let a = self.analysis();
        for len in s.len()..n {
            let slack = n - len;
            if let Some(r) = self.least_extension_of_len(s, len - s.len(), |q| a.dist[q][c].is_none_or(|d| d >= slack)) {
                return r;
            }
        }
        s.concat(&BinStr::zeros(n - s.len()))
    }

    fn least_extension_of_len(&self, s: &BinStr, steps: usize, target: impl Fn(usize) -> bool) -> Option<BinStr> {
        let a = self.analysis();
        let n = a.nodes.len();
        let mut layers: Vec<Vec<bool>> = vec![(0..n).map(&target).collect()];
        for j in 1..=steps {
            let prev = &layers[j - 1];
            let next: Vec<bool> = (0..n).map(|q| prev[a.succ[q][0]] || prev[a.succ[q][1]]).collect();
            layers.push(next);
        }
        let mut q = self.state(s);
        if !layers[steps][q] {
            return None;
        }
        let mut out = *s;
        for remaining in (0..steps).rev() {
            let bit = !layers[remaining][a.succ[q][0]];
            q = a.succ[q][bit as usize];
            out = out.child(bit);
        }
        Some(out)
    }

    fn least_extension_where(&self, s: &BinStr, proper: bool, target: impl Fn(usize, &Analysis) -> bool) -> Option<BinStr> {
        let a = self.analysis();
        let n = a.nodes.len();
        // layers[j][q]: from q a target state is reached in exactly j steps.
        let mut layers: Vec<Vec<bool>> = vec![(0..n).map(|q| target(q, a)).collect()];
        let start = self.state(s);
        let first = if proper { 1 } else { 0 };
        let max_steps = n + 1;
        let mut found = None;
        for j in 0..=max_steps {
            if j > 0 {
                let prev = &layers[j - 1];
                let next: Vec<bool> = (0..n).map(|q| prev[a.succ[q][0]] || prev[a.succ[q][1]]).collect();
                layers.push(next);
            }
            if j >= first && layers[j][start] {
                found = Some(j);
                break;
            }
        }
        let steps = found?;
        if s.len() + steps > MAX_LEN {
            return None;
        }
        let mut out = *s;
        let mut q = start;
        for remaining in (0..steps).rev() {
            let bit = !layers[remaining][a.succ[q][0]];
            q = a.succ[q][bit as usize];
            out = out.child(bit);
        }
        Some(out)
    }

    /// Every `S ≅ 2^{<n}` monochromatic in color `c` whose elements extend
    /// `root_bound` and have length at most `len_bound`, in length-lex order.
    pub fn enumerate_mono(&self, root_bound: &BinStr, n: usize, len_bound: usize, c: Color) -> Vec<TreeSet> {
        if n == 0 {
            return vec![TreeSet::new()];
        }
        let candidates: Vec<BinStr> = root_bound.extensions_up_to(len_bound).filter(|s| self.eval(s) == c).collect();
        let mut memo: HashMap<(BinStr, usize), Vec<TreeSet>> = HashMap::new();
        let mut out: Vec<TreeSet> = Vec::new();
        for r in &candidates {
            out.extend(trees_rooted_at(*r, n, &candidates, &mut memo));
        }
        out.sort();
        out
    }
}

fn trees_rooted_at(
    root: BinStr,
    n: usize,
    candidates: &[BinStr],
    memo: &mut HashMap<(BinStr, usize), Vec<TreeSet>>,
) -> Vec<TreeSet> {
    if n == 1 {
        return vec![TreeSet::singleton(root)];
    }
    if let Some(v) = memo.get(&(root, n)) {
        return v.clone();
    }
    let above: Vec<BinStr> = candidates.iter().filter(|t| root.is_proper_prefix_of(t)).copied().collect();
    let mut out = Vec::new();
    for (i, a) in above.iter().enumerate() {
        for b in &above[i + 1..] {
            if a.comparable(b) {
                continue;
            }
            let left = trees_rooted_at(*a, n - 1, candidates, memo);
            let right = trees_rooted_at(*b, n - 1, candidates, memo);
            for l in &left {
                for r in &right {
                    let mut t = l.union(r);
                    t.insert(root);
                    out.push(t);
                }
            }
        }
    }
    memo.insert((root, n), out.clone());
    out
}

impl Analysis {
    fn build(f: &PatternColoring) -> Self {
        let mut nodes = vec![Node::Table(BinStr::EMPTY)];
        let mut ids: HashMap<Node, usize> = [(nodes[0], 0)].into();
        let mut succ: Vec<[usize; 2]> = Vec::new();
        let mut i = 0;
        while i < nodes.len() {
            let mut pair = [0; 2];
            for bit in [false, true] {
                let n = f.step(nodes[i], bit);
                let id = *ids.entry(n).or_insert_with(|| {
                    nodes.push(n);
                    nodes.len() - 1
                });
                pair[bit as usize] = id;
            }
            succ.push(pair);
            i += 1;
        }
        let n = nodes.len();
        let color: Vec<Color> = nodes.iter().map(|&x| f.node_color(x)).collect();
        let reach: Vec<Vec<usize>> = (0..n)
            .map(|q| {
                let mut seen = vec![false; n];
                let mut stack = vec![q];
                seen[q] = true;
                while let Some(x) = stack.pop() {
                    for &y in &succ[x] {
                        if !seen[y] {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
                (0..n).filter(|&y| seen[y]).collect()
            })
            .collect();
        let k = f.palette;
        let reaches_color: Vec<Vec<bool>> = (0..n)
            .map(|q| {
                let mut row = vec![false; k];
                for &y in &reach[q] {
                    row[color[y]] = true;
                }
                row
            })
            .collect();
        let dense: Vec<Vec<bool>> =
            (0..n).map(|q| (0..k).map(|c| reach[q].iter().all(|&y| reaches_color[y][c])).collect()).collect();
        let branching = (0..k).map(|c| branching_states(c, &succ, &color, &reach)).collect();
        let mut dist: Vec<Vec<Option<usize>>> =
            (0..n).map(|q| (0..k).map(|c| (color[q] == c).then_some(0)).collect()).collect();
        loop {
            let mut changed = false;
            for q in 0..n {
                for c in 0..k {
                    let via = succ[q].iter().filter_map(|&r| dist[r][c]).min().map(|d| d + 1);
                    if let Some(d) = via {
                        if dist[q][c].is_none_or(|cur| d < cur) {
                            dist[q][c] = Some(d);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Analysis { nodes, ids, succ, color, reach, reaches_color, dense, branching, dist }
    }
}

/// Greatest set `X` of `c`-colored states such that from each member two
/// incomparable continuations lead back into `X`.
fn branching_states(c: Color, succ: &[[usize; 2]], color: &[Color], reach: &[Vec<usize>]) -> Vec<bool> {
    let n = succ.len();
    let mut in_x: Vec<bool> = (0..n).map(|q| color[q] == c).collect();
    loop {
        let hits: Vec<bool> = (0..n).map(|q| reach[q].iter().any(|&y| in_x[y])).collect();
        let split: Vec<bool> = (0..n).map(|q| hits[succ[q][0]] && hits[succ[q][1]]).collect();
        let next: Vec<bool> = (0..n).map(|q| in_x[q] && reach[q].iter().any(|&y| split[y])).collect();
        if next == in_x {
            return in_x;
        }
        in_x = next;
    }
}

type EvalFn = dyn Fn(&BinStr, &mut Budget) -> Result<Color> + Send + Sync;

/// A coloring known only through budgeted pointwise evaluation.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "coloring", rename_all = "snake_case")]
pub enum ProgramColoring {
    /// A pattern coloring run as a program.
    Pattern(PatternColoring),
    /// Color 0 on the branch-coding strings of `T * ω^{<ω}`, color 1 elsewhere.
    TreeCode(FiniteOmegaTree),
    /// A built-in opaque program, looked up by name in [`builtin_program`].
    Builtin { name: String },
    /// An opaque user program with a declared palette bound (`None` for a
    /// bounded-range promise without an explicit bound). Not serializable.
    #[serde(skip)]
    Custom { name: String, palette: Option<usize>, eval: Arc<EvalFn> },
}

impl fmt::Debug for ProgramColoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramColoring::Pattern(p) => f.debug_tuple("Pattern").field(p).finish(),
            ProgramColoring::TreeCode(t) => f.debug_tuple("TreeCode").field(t).finish(),
            ProgramColoring::Builtin { name } => f.debug_struct("Builtin").field("name", name).finish(),
            ProgramColoring::Custom { name, palette, .. } => {
                f.debug_struct("Custom").field("name", name).field("palette", palette).finish()
            }
        }
    }
}

impl PartialEq for ProgramColoring {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ProgramColoring::Pattern(a), ProgramColoring::Pattern(b)) => a == b,
            (ProgramColoring::TreeCode(a), ProgramColoring::TreeCode(b)) => a == b,
            (ProgramColoring::Builtin { name: a }, ProgramColoring::Builtin { name: b }) => a == b,
            (ProgramColoring::Custom { name: a, .. }, ProgramColoring::Custom { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl ProgramColoring {
    pub fn custom(
        name: &str,
        palette: Option<usize>,
        eval: impl Fn(&BinStr, &mut Budget) -> Result<Color> + Send + Sync + 'static,
    ) -> Self {
        ProgramColoring::Custom { name: name.to_string(), palette, eval: Arc::new(eval) }
    }

    pub fn palette(&self) -> Option<usize> {
        match self {
            ProgramColoring::Pattern(p) => Some(p.palette()),
            ProgramColoring::TreeCode(_) => Some(2),
            ProgramColoring::Builtin { name } => builtin_program(name).map(|(p, _)| p),
            ProgramColoring::Custom { palette, .. } => *palette,
        }
    }

    pub fn eval(&self, s: &BinStr, budget: &mut Budget) -> Result<Color> {
        budget.charge(s.len() as u64 + 1)?;
        match self {
            ProgramColoring::Pattern(p) => Ok(p.eval(s)),
            ProgramColoring::TreeCode(t) => {
                let members = t.contains(&crate::reductions::decode_branch_code(s));
                budget.charge(s.len() as u64)?;
                Ok(if members { 0 } else { 1 })
            }
            ProgramColoring::Builtin { name } => match builtin_program(name) {
                Some((_, eval)) => eval(s, budget),
                None => Err(Error::Invalid(format!("unknown built-in program {name:?}"))),
            },
            ProgramColoring::Custom { eval, .. } => eval(s, budget),
        }
    }
}

/// Names accepted by [`ProgramColoring::Builtin`].
pub const BUILTIN_PROGRAMS: [&str; 2] = ["length_parity", "ones_count_mod3"];

/// Evaluator of a built-in program coloring.
pub type BuiltinEval = fn(&BinStr, &mut Budget) -> Result<Color>;

/// Palette and evaluator of a built-in program. Both run in time linear in
/// the input, but they are treated as opaque: nothing about them is decided
/// beyond pointwise evaluation.
pub fn builtin_program(name: &str) -> Option<(usize, BuiltinEval)> {
    fn length_parity(s: &BinStr, b: &mut Budget) -> Result<Color> {
        b.charge(s.len() as u64)?;
        Ok(s.len() % 2)
    }
    fn ones_count_mod3(s: &BinStr, b: &mut Budget) -> Result<Color> {
        b.charge(s.len() as u64)?;
        Ok(s.bits().filter(|&x| x).count() % 3)
    }
    match name {
        "length_parity" => Some((2, length_parity)),
        "ones_count_mod3" => Some((3, ones_count_mod3)),
        _ => None,
    }
}

/// Deterministic evaluation within `budget` steps.
pub fn eval_program(f: &ProgramColoring, s: &BinStr, budget: u64) -> Result<Color> {
    f.eval(s, &mut Budget::new(budget))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::treecore::{bs, ts};

    /// `D = {⟨⟩,0,1}`, cone(0) alternates 0/1 by length, cone(1) is constant 1.
    pub(crate) fn split_example() -> PatternColoring {
        PatternColoring::new(
            2,
            [(bs(""), 0), (bs("0"), 0), (bs("1"), 1)].into(),
            [(bs("0"), ConeBehavior::length_mod(&[0, 1])), (bs("1"), ConeBehavior::constant(1))].into(),
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(PatternColoring::constant(1, 0).eval(&bs("0110")), 0);
        let f = split_example();
        assert_eq!(f.eval(&bs("01")), 0);
        assert_eq!(f.eval(&bs("11")), 1);
        assert_eq!(f.eval(&bs("010")), 1);
    }

    #[test]
    fn density_examples() {
        assert!(PatternColoring::constant(1, 0).dense_above(0, &bs("")));
        let f = split_example();
        assert!(!f.dense_above(0, &bs("")));
        assert!(f.dense_above(0, &bs("0")));
        assert_eq!(f.recurrent_colors(&bs("")), [1].into());
        assert_eq!(f.recurrent_colors(&bs("1")), [1].into());
        assert_eq!(f.recurrent_colors(&bs("0")), [0, 1].into());
        assert_eq!(PatternColoring::constant(1, 0).recurrent_colors(&bs("")), [0].into());
    }

    #[test]
    fn mono_extendable_examples() {
        let zero = PatternColoring::constant(2, 0);
        assert!(zero.mono_extendable(&ts(&["", "0", "1"]), 0).unwrap());
        assert!(!zero.mono_extendable(&TreeSet::new(), 1).unwrap());
        assert!(split_example().mono_extendable(&ts(&[""]), 0).unwrap());
        assert!(!split_example().mono_extendable(&ts(&["1"]), 0).unwrap());
        assert!(zero.mono_extendable(&ts(&["0", "00"]), 0).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let zero = PatternColoring::constant(2, 0);
        assert_eq!(zero.enumerate_mono(&bs(""), 1, 1, 0), vec![ts(&[""]), ts(&["0"]), ts(&["1"])]);
        assert_eq!(split_example().enumerate_mono(&bs(""), 0, 3, 1), vec![TreeSet::new()]);
        assert!(zero.enumerate_mono(&bs(""), 2, 3, 1).is_empty());
        let two = zero.enumerate_mono(&bs(""), 2, 2, 0);
        assert!(two.iter().all(|s| s.iso_to_full() == Some(2)));
        assert!(two.contains(&ts(&["", "0", "1"])));
        assert!(two.contains(&ts(&["", "00", "11"])));
    }

    #[test]
    fn invalid_colorings_are_rejected() {
        let one_child = PatternColoring::new(2, [(bs(""), 0), (bs("0"), 0)].into(), [(bs("0"), ConeBehavior::constant(0))].into());
        assert!(one_child.is_err());
        let bad_color = PatternColoring::uniform(2, ConeBehavior::constant(2));
        assert!(bad_color.is_err());
        let empty_wheel = PatternColoring::uniform(2, ConeBehavior::length_mod(&[]));
        assert!(empty_wheel.is_err());
    }

    #[test]
    fn last_bit_automaton() {
        let f = PatternColoring::uniform(2, ConeBehavior::last_bit([0, 1])).unwrap();
        assert_eq!(f.eval(&bs("0101")), 1);
        assert_eq!(f.eval(&bs("10")), 0);
        assert!(f.dense_above(0, &bs("1")) && f.dense_above(1, &bs("0")));
        assert_eq!(f.constant_above(&bs("")), None);
    }

    #[test]
    fn branching_without_density() {
        // Color 0 on strings avoiding "11"; once "11" appears everything is 1.
        let dfa = Dfa { start: 0, colors: vec![0, 1, 1], next: vec![[0, 1], [0, 2], [2, 2]] };
        let f = PatternColoring::uniform(2, ConeBehavior::Automaton { dfa }).unwrap();
        assert!(!f.dense_above(0, &bs("")));
        assert!(f.mono_extendable(&ts(&[""]), 0).unwrap());
        assert!(f.color_forms_chain_above(0, &bs("11")));
        assert!(!f.color_forms_chain_above(0, &bs("")));
    }

    #[test]
    fn least_extension_search() {
        let f = split_example();
        assert_eq!(f.least_extension_with_color(&bs(""), 1, false), Some(bs("1")));
        assert_eq!(f.least_extension_with_color(&bs(""), 0, true), Some(bs("0")));
        assert_eq!(f.least_extension_with_color(&bs("0"), 0, true), Some(bs("00")));
        assert_eq!(f.least_extension_with_color(&bs("1"), 0, false), None);
    }

    #[test]
    fn serde_roundtrip_is_exact() {
        let f = split_example();
        let text = serde_json::to_string(&f).unwrap();
        let back: PatternColoring = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn program_budget() {
        let p = ProgramColoring::Pattern(PatternColoring::constant(3, 2));
        assert_eq!(eval_program(&p, &bs("0101"), 100).unwrap(), 2);
        assert_eq!(eval_program(&p, &bs("0101"), 2), Err(Error::BudgetExceeded(2)));
    }
}
