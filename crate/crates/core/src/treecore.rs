//! Finite binary strings and finite subsets of the full binary tree.
//!
//! Strings are ordered length-lexicographically with `0 < 1`; this order is
//! also the bijection with the naturals used for every "least string" search
//! in the crate: `⟨⟩ ↦ 0, 0 ↦ 1, 1 ↦ 2, 00 ↦ 3, …`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{precondition, Error, Result};
use crate::rakes::Rake;

/// Longest representable string. Indices of such strings still fit in a `u64`.
pub const MAX_LEN: usize = 63;

/// A finite binary string of length at most [`MAX_LEN`].
///
/// The derived order compares length first and then the bits read as a
/// binary numeral, which is exactly the length-lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BinStr {
    len: u8,
    bits: u64,
}

impl BinStr {
    pub const EMPTY: BinStr = BinStr { len: 0, bits: 0 };

    pub fn empty() -> Self {
        Self::EMPTY
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        bits.iter().fold(Self::EMPTY, |s, &b| s.child(b))
    }

    /// `0^n`.
    pub fn zeros(n: usize) -> Self {
        Self::repeat(false, n)
    }

    /// `1^n`.
    pub fn ones(n: usize) -> Self {
        Self::repeat(true, n)
    }

    fn repeat(b: bool, n: usize) -> Self {
        (0..n).fold(Self::EMPTY, |s, _| s.child(b))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at position `i` (0 is the first bit).
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit {i} out of range for length {}", self.len);
        (self.bits >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn last(&self) -> Option<bool> {
        (!self.is_empty()).then_some(self.bits & 1 == 1)
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    /// The one-bit extension `σb`.
    pub fn child(&self, b: bool) -> Self {
        assert!(self.len() < MAX_LEN, "binary strings are limited to {MAX_LEN} bits");
        BinStr { len: self.len + 1, bits: (self.bits << 1) | b as u64 }
    }

    pub fn concat(&self, other: &BinStr) -> Self {
        other.bits().fold(*self, |s, b| s.child(b))
    }

    /// The prefix of length `l` (clamped to the whole string).
    pub fn prefix(&self, l: usize) -> Self {
        let l = l.min(self.len());
        BinStr { len: l as u8, bits: self.bits >> (self.len() - l) }
    }

    pub fn parent(&self) -> Option<Self> {
        (!self.is_empty()).then(|| self.prefix(self.len() - 1))
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BinStr) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }

    /// `self ≺ other`.
    pub fn is_proper_prefix_of(&self, other: &BinStr) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &BinStr) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Position in the length-lexicographic enumeration.
    pub fn index(&self) -> u64 {
        ((1u64 << self.len) - 1) + self.bits
    }

    pub fn from_index(index: u64) -> Self {
        let len = 63 - (index + 1).leading_zeros();
        BinStr { len: len as u8, bits: index + 1 - (1u64 << len) }
    }

    /// All strings of length at most `n`, in length-lex order.
    pub fn all_up_to(n: usize) -> impl Iterator<Item = BinStr> {
        (0..(1u64 << (n + 1)) - 1).map(BinStr::from_index)
    }

    /// All extensions of `self` of length exactly `len`, in lex order.
    pub fn extensions_of_len(&self, len: usize) -> impl Iterator<Item = BinStr> {
        let extra = len.saturating_sub(self.len());
        let base = *self;
        let count = if len < self.len() { 0 } else { 1u64 << extra };
        (0..count).map(move |v| BinStr { len: len as u8, bits: (base.bits << extra) | v })
    }

    /// Extensions of `self` (including itself) of length at most `max_len`,
    /// in length-lex order.
    pub fn extensions_up_to(&self, max_len: usize) -> impl Iterator<Item = BinStr> {
        let base = *self;
        (base.len()..=max_len.max(base.len()))
            .filter(move |&l| l <= max_len)
            .flat_map(move |l| base.extensions_of_len(l))
    }

    /// Dictionary order: a prefix comes before its extensions, otherwise the
    /// first differing bit decides.
    pub fn lex_cmp(&self, other: &BinStr) -> std::cmp::Ordering {
        self.bits().cmp(other.bits())
    }
}

impl fmt::Display for BinStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("⟨⟩")
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for BinStr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_LEN {
            return Err(Error::Parse(format!("string longer than {MAX_LEN} bits")));
        }
        s.chars().try_fold(BinStr::EMPTY, |acc, c| match c {
            '0' => Ok(acc.child(false)),
            '1' => Ok(acc.child(true)),
            _ => Err(Error::Parse(format!("invalid bit {c:?} in {s:?}"))),
        })
    }
}

impl Serialize for BinStr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and examples: `bs("01")`.
pub fn bs(s: &str) -> BinStr {
    s.parse().expect("valid binary string literal")
}

/// A finite subset of the full binary tree. Equality is set equality and
/// iteration is length-lex.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeSet {
    elems: BTreeSet<BinStr>,
}

impl fmt::Debug for TreeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter()).finish()
    }
}

impl FromIterator<BinStr> for TreeSet {
    fn from_iter<I: IntoIterator<Item = BinStr>>(iter: I) -> Self {
        TreeSet { elems: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a TreeSet {
    type Item = &'a BinStr;
    type IntoIter = std::collections::btree_set::Iter<'a, BinStr>;

    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

/// Shorthand: `ts(&["", "0", "1"])`.
pub fn ts(items: &[&str]) -> TreeSet {
    items.iter().map(|s| bs(s)).collect()
}

impl TreeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(s: BinStr) -> Self {
        std::iter::once(s).collect()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, s: &BinStr) -> bool {
        self.elems.contains(s)
    }

    pub fn insert(&mut self, s: BinStr) -> bool {
        self.elems.insert(s)
    }

    pub fn remove(&mut self, s: &BinStr) -> bool {
        self.elems.remove(s)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &BinStr> + ExactSizeIterator + '_ {
        self.elems.iter()
    }

    pub fn first(&self) -> Option<BinStr> {
        self.elems.first().copied()
    }

    pub fn is_subset(&self, other: &TreeSet) -> bool {
        self.elems.is_subset(&other.elems)
    }

    pub fn union(&self, other: &TreeSet) -> TreeSet {
        self.elems.union(&other.elems).copied().collect()
    }

    fn count_proper_prefixes(&self, s: &BinStr) -> usize {
        (0..s.len()).filter(|&l| self.elems.contains(&s.prefix(l))).count()
    }

    /// Number of proper prefixes of `s` that lie in the set.
    pub fn rank(&self, s: &BinStr) -> Result<usize> {
        if !self.contains(s) {
            return Err(Error::MemberNotFound(*s));
        }
        Ok(self.count_proper_prefixes(s))
    }

    /// Rank of every element.
    pub fn ranks(&self) -> BTreeMap<BinStr, usize> {
        self.elems.iter().map(|s| (*s, self.count_proper_prefixes(s))).collect()
    }

    /// Elements of rank below `n`.
    pub fn restrict_rank(&self, n: usize) -> TreeSet {
        self.elems.iter().filter(|s| self.count_proper_prefixes(s) < n).copied().collect()
    }

    /// One more than the largest rank; 0 for the empty set.
    pub fn height(&self) -> usize {
        self.elems.iter().map(|s| self.count_proper_prefixes(s) + 1).max().unwrap_or(0)
    }

    /// The longest proper prefix of `s` inside the set, if any.
    pub fn predecessor(&self, s: &BinStr) -> Option<BinStr> {
        (0..s.len()).rev().map(|l| s.prefix(l)).find(|p| self.elems.contains(p))
    }

    /// Elements with no proper extension in the set.
    pub fn leaves(&self) -> TreeSet {
        let inner: BTreeSet<BinStr> = self.elems.iter().filter_map(|s| self.predecessor(s)).collect();
        self.elems.iter().filter(|s| !inner.contains(s)).copied().collect()
    }

    /// Extensions of `s` in the set whose rank is exactly one higher.
    pub fn successors(&self, s: &BinStr) -> Result<TreeSet> {
        if !self.contains(s) {
            return Err(Error::MemberNotFound(*s));
        }
        Ok(self.children_of(s))
    }

    fn children_of(&self, s: &BinStr) -> TreeSet {
        self.elems
            .iter()
            .filter(|t| s.is_proper_prefix_of(t) && self.predecessor(t) == Some(*s))
            .copied()
            .collect()
    }

    fn child_map(&self) -> BTreeMap<BinStr, Vec<BinStr>> {
        let mut map: BTreeMap<BinStr, Vec<BinStr>> = self.elems.iter().map(|s| (*s, Vec::new())).collect();
        for t in &self.elems {
            if let Some(p) = self.predecessor(t) {
                map.get_mut(&p).expect("predecessor is a member").push(*t);
            }
        }
        map
    }

    /// Elements of rank 0.
    pub fn minimal_elements(&self) -> TreeSet {
        self.elems.iter().filter(|s| self.predecessor(s).is_none()).copied().collect()
    }

    /// The unique rank-0 element, if the set is rooted.
    pub fn root(&self) -> Option<BinStr> {
        let mins = self.minimal_elements();
        (mins.len() == 1).then(|| mins.first().expect("one element"))
    }

    /// Elements of equal rank have equally many successors.
    pub fn is_symmetric(&self) -> bool {
        let ranks = self.ranks();
        let children = self.child_map();
        let mut per_rank: BTreeMap<usize, usize> = BTreeMap::new();
        for (s, r) in &ranks {
            let count = children[s].len();
            if *per_rank.entry(*r).or_insert(count) != count {
                return false;
            }
        }
        true
    }

    pub fn is_antichain(&self) -> bool {
        let v: Vec<&BinStr> = self.elems.iter().collect();
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| !a.comparable(b)))
    }

    /// `Some(n)` when the set is order-isomorphic to the full binary tree of
    /// height `n` (`Some(0)` for the empty set).
    pub fn iso_to_full(&self) -> Option<usize> {
        if self.is_empty() {
            return Some(0);
        }
        self.root()?;
        let ranks = self.ranks();
        let children = self.child_map();
        let mut leaf_rank = None;
        for (s, kids) in &children {
            match kids.len() {
                0 => {
                    let r = ranks[s];
                    if *leaf_rank.get_or_insert(r) != r {
                        return None;
                    }
                }
                2 => {
                    if kids[0].comparable(&kids[1]) {
                        return None;
                    }
                }
                _ => return None,
            }
        }
        let n = leaf_rank.expect("nonempty set has a leaf") + 1;
        debug_assert_eq!(self.len(), (1usize << n) - 1);
        Some(n)
    }
}

/// Pick pairwise incomparable `σ_i ∈ S_i` from `n` pairwise disjoint
/// antichains each of size at least `n`.
///
/// Repeatedly takes an element of maximal rank in the union (length-lex least
/// on ties), assigns it to its family, discards every remaining string
/// comparable to it, and retires that family.
pub fn incomparable_selection(families: &[TreeSet]) -> Result<Vec<BinStr>> {
    let n = families.len();
    for (i, fam) in families.iter().enumerate() {
        if fam.len() < n {
            return precondition(format!("family {i} has {} < {n} elements", fam.len()));
        }
        if !fam.is_antichain() {
            return precondition(format!("family {i} is not an antichain"));
        }
        for (j, other) in families.iter().enumerate().skip(i + 1) {
            if fam.iter().any(|s| other.contains(s)) {
                return precondition(format!("families {i} and {j} intersect"));
            }
        }
    }
    let mut remaining: Vec<Option<TreeSet>> = families.iter().cloned().map(Some).collect();
    let mut chosen = vec![BinStr::EMPTY; n];
    for _ in 0..n {
        let union: TreeSet = remaining.iter().flatten().flat_map(|f| f.iter().copied()).collect();
        let ranks = union.ranks();
        let (&pick, _) = ranks
            .iter()
            .max_by(|(a, ra), (b, rb)| ra.cmp(rb).then_with(|| b.cmp(a)))
            .expect("remaining families are nonempty");
        let owner = remaining
            .iter()
            .position(|f| f.as_ref().is_some_and(|f| f.contains(&pick)))
            .expect("picked element belongs to a family");
        chosen[owner] = pick;
        remaining[owner] = None;
        for fam in remaining.iter_mut().flatten() {
            fam.elems.retain(|s| !s.comparable(&pick));
        }
    }
    Ok(chosen)
}

/// `S ⊴ R`: `S` is a full-tree-shaped subset of the finite rake `R` with one
/// node per block, all at the same rank residue modulo `|C|`.
pub fn is_subrake(s: &TreeSet, r: &Rake) -> bool {
    if s.is_empty() {
        return true;
    }
    if !s.is_subset(r.nodes()) {
        return false;
    }
    let Some(n) = s.iso_to_full() else { return false };
    if n > r.height() {
        return false;
    }
    let k = r.k();
    let s_ranks = s.ranks();
    let mut residue = None;
    for (sigma, rs) in &s_ranks {
        let rr = r.nodes().rank(sigma).expect("subset");
        if rr / k != *rs {
            return false;
        }
        if *residue.get_or_insert(rr % k) != rr % k {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TreeSet {
        ts(&["0", "00", "01", "000"])
    }

    #[test]
    fn index_matches_enumeration_order() {
        let expected = ["", "0", "1", "00", "01", "10", "11", "000"];
        for (i, s) in expected.iter().enumerate() {
            assert_eq!(bs(s).index(), i as u64);
            assert_eq!(BinStr::from_index(i as u64), bs(s));
        }
    }

    #[test]
    fn index_roundtrip_up_to_sixteen_bits() {
        for s in BinStr::all_up_to(16) {
            assert_eq!(BinStr::from_index(s.index()), s);
        }
        let last = BinStr::from_index((1u64 << 17) - 2);
        assert_eq!(last, BinStr::ones(16));
    }

    #[test]
    fn ordering_is_length_lex() {
        let mut v: Vec<BinStr> = ["11", "0", "", "10", "000", "1"].iter().map(|s| bs(s)).collect();
        v.sort();
        let shown: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["", "0", "1", "10", "11", "000"]);
    }

    #[test]
    fn prefix_relations() {
        assert!(bs("").is_prefix_of(&bs("0110")));
        assert!(bs("01").is_proper_prefix_of(&bs("0110")));
        assert!(!bs("0110").is_proper_prefix_of(&bs("0110")));
        assert!(!bs("1").comparable(&bs("0110")));
        assert_eq!(bs("0110").prefix(2), bs("01"));
        assert_eq!(bs("01").concat(&bs("10")), bs("0110"));
        assert!(bs("0110").bit(1));
        assert_eq!(bs("0110").last(), Some(false));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("012".parse::<BinStr>().is_err());
        assert_eq!("".parse::<BinStr>().unwrap(), BinStr::EMPTY);
    }

    #[test]
    fn rank_examples() {
        let s = sample();
        assert_eq!(s.rank(&bs("0")).unwrap(), 0);
        assert_eq!(s.rank(&bs("000")).unwrap(), 2);
        assert_eq!(ts(&[""]).rank(&bs("")).unwrap(), 0);
        assert_eq!(s.rank(&bs("1")), Err(Error::MemberNotFound(bs("1"))));
    }

    #[test]
    fn restrict_and_height_examples() {
        let s = sample();
        assert_eq!(s.restrict_rank(2), ts(&["0", "00", "01"]));
        assert_eq!(TreeSet::new().restrict_rank(5), TreeSet::new());
        assert_eq!(s.restrict_rank(0), TreeSet::new());
        assert_eq!(TreeSet::new().height(), 0);
        assert_eq!(s.height(), 3);
        assert_eq!(ts(&[""]).height(), 1);
    }

    #[test]
    fn leaves_successors_symmetry() {
        let s = sample();
        assert_eq!(s.leaves(), ts(&["01", "000"]));
        assert!(!s.is_symmetric());
        assert_eq!(ts(&["", "0", "1"]).successors(&bs("")).unwrap(), ts(&["0", "1"]));
        assert!(ts(&["", "0", "1"]).is_symmetric());
        assert!(s.successors(&bs("1")).is_err());
    }

    #[test]
    fn iso_examples() {
        assert_eq!(ts(&["0", "00", "01"]).iso_to_full(), Some(2));
        assert_eq!(sample().iso_to_full(), None);
        assert_eq!(ts(&[""]).iso_to_full(), Some(1));
        assert_eq!(TreeSet::new().iso_to_full(), Some(0));
        // Not prefix-closed, still isomorphic.
        assert_eq!(ts(&["", "00", "11"]).iso_to_full(), Some(2));
        // Two comparable successors are impossible, but two roots are caught.
        assert_eq!(ts(&["0", "1"]).iso_to_full(), None);
    }

    #[test]
    fn selection_examples() {
        assert_eq!(incomparable_selection(&[ts(&["0"])]).unwrap(), vec![bs("0")]);
        assert_eq!(
            incomparable_selection(&[ts(&["0", "10"]), ts(&["00", "01"])]).unwrap(),
            vec![bs("10"), bs("00")]
        );
        assert_eq!(
            incomparable_selection(&[ts(&["00", "01"]), ts(&["10", "11"])]).unwrap(),
            vec![bs("00"), bs("10")]
        );
        assert_eq!(incomparable_selection(&[]).unwrap(), vec![]);
    }

    #[test]
    fn selection_preconditions() {
        let small = incomparable_selection(&[ts(&["0"]), ts(&["1", "00"])]);
        assert!(matches!(small, Err(Error::PreconditionViolated(_))));
        let chain = incomparable_selection(&[ts(&["0", "00"])]);
        assert!(matches!(chain, Err(Error::PreconditionViolated(_))));
        let overlap = incomparable_selection(&[ts(&["0", "1"]), ts(&["1", "00"])]);
        assert!(matches!(overlap, Err(Error::PreconditionViolated(_))));
    }

    /// Independent isomorphism oracle: try every bijection from the full tree.
    fn iso_by_permutation(s: &TreeSet) -> Option<usize> {
        let n = (0usize..=3).find(|&n| (1usize << n) - 1 == s.len())?;
        let full: Vec<BinStr> = BinStr::all_up_to(n.saturating_sub(1)).take(s.len()).collect();
        let target: Vec<BinStr> = s.iter().copied().collect();
        let mut perm: Vec<usize> = (0..target.len()).collect();
        fn next_perm(p: &mut [usize]) -> bool {
            let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
            true
        }
        loop {
            let ok = (0..full.len()).all(|a| {
                (0..full.len()).all(|b| {
                    full[a].is_prefix_of(&full[b]) == target[perm[a]].is_prefix_of(&target[perm[b]])
                })
            });
            if ok {
                return Some(n);
            }
            if !next_perm(&mut perm) {
                return None;
            }
        }
    }

    #[test]
    fn iso_agrees_with_permutation_oracle() {
        let pool: Vec<BinStr> = BinStr::all_up_to(3).collect();
        let mut checked = 0;
        for mask in 0u32..(1 << pool.len()) {
            if mask.count_ones() > 3 && mask.count_ones() != 7 {
                continue;
            }
            if mask.count_ones() == 7 && mask % 61 != 0 {
                continue;
            }
            let s: TreeSet = pool.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| *s).collect();
            assert_eq!(s.iso_to_full(), iso_by_permutation(&s), "set {s:?}");
            checked += 1;
        }
        assert!(checked > 600);
    }
}
