//! Deterministic instance corpora shared by tests, benches and the CLI.

use crate::colorings::{Color, ConeBehavior, PatternColoring, ProgramColoring};
use crate::problems::{
    nat, Bound, CoEnum, FiniteOmegaTree, Functional, Growth, Instance, MembershipWord, OmegaColoring, Tail,
};
use crate::reductions::Reduction;
use crate::treecore::{BinStr, TreeSet};

/// Small mixing function for reproducible pseudo-random choices.
fn mix(a: u64, b: u64) -> u64 {
    let mut h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0x632B_E59B_D9B4_E019);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^ (h >> 32)
}

/// Twenty eventually periodic colorings of `ω` with colors below 3.
pub fn rt1_corpus() -> Vec<OmegaColoring> {
    let mut out = vec![
        OmegaColoring::small(&[], &[0]),
        OmegaColoring::small(&[], &[1]),
        OmegaColoring::small(&[], &[0, 1]),
        OmegaColoring::small(&[], &[0, 1, 2]),
        OmegaColoring::small(&[2, 2, 2], &[0]),
        OmegaColoring::small(&[0], &[1, 2]),
        OmegaColoring::small(&[1, 0], &[2]),
        OmegaColoring::small(&[0, 0, 1], &[2, 1]),
    ];
    for i in 0..12u64 {
        let h = mix(i, 17);
        let plen = (h % 4) as usize;
        let qlen = 1 + ((h >> 8) % 3) as usize;
        let prefix: Vec<u64> = (0..plen).map(|p| mix(h, p as u64) % 3).collect();
        let period: Vec<u64> = (0..qlen).map(|p| mix(h, 100 + p as u64) % 3).collect();
        out.push(OmegaColoring::small(&prefix, &period));
    }
    out
}

/// The coloring with decision set `{⟨⟩, 0, 1}`, cone above 0 colored by
/// length parity and cone above 1 constant 1.
pub fn split_example() -> PatternColoring {
    let s = |t: &str| t.parse::<BinStr>().expect("literal");
    PatternColoring::new(
        2,
        [(s(""), 0), (s("0"), 0), (s("1"), 1)].into(),
        [(s("0"), ConeBehavior::length_mod(&[0, 1])), (s("1"), ConeBehavior::constant(1))].into(),
    )
    .expect("valid")
}

/// About twenty pattern colorings with at most 3 colors and decision depth
/// at most 2, starting with the constant-0 coloring and the split example.
pub fn pattern_corpus() -> Vec<PatternColoring> {
    let mut out = vec![
        PatternColoring::constant(2, 0),
        split_example(),
        PatternColoring::constant(3, 2),
        PatternColoring::uniform(2, ConeBehavior::length_mod(&[0, 1])).expect("valid"),
        PatternColoring::uniform(3, ConeBehavior::length_mod(&[0, 1, 2])).expect("valid"),
        PatternColoring::uniform(3, ConeBehavior::length_mod(&[1, 0, 0])).expect("valid"),
        PatternColoring::uniform(2, ConeBehavior::last_bit([0, 1])).expect("valid"),
        PatternColoring::uniform(3, ConeBehavior::last_bit([2, 1])).expect("valid"),
    ];
    for i in 0..12u64 {
        let k = 2 + (i % 2) as usize;
        let depth = 1 + ((i / 2) % 2) as usize;
        let color = |s: &BinStr, salt: u64| (mix(mix(i, salt), s.index()) % k as u64) as Color;
        let cone = |s: &BinStr| {
            let h = mix(mix(i, 7), s.index());
            match h % 3 {
                0 => ConeBehavior::constant((h / 3 % k as u64) as Color),
                1 => ConeBehavior::length_mod(&[(h / 3 % k as u64) as Color, (h / 9 % k as u64) as Color]),
                _ => ConeBehavior::last_bit([(h / 3 % k as u64) as Color, (h / 9 % k as u64) as Color]),
            }
        };
        out.push(PatternColoring::complete(k, depth, |s| color(s, 1), cone).expect("valid"));
    }
    out
}

/// Every co-enumeration whose stage list has length at most `max_len` and
/// values below `values`, once with each of the two simple tails.
pub fn coenum_grid(max_len: usize, values: u64) -> Vec<CoEnum> {
    let mut lists: Vec<Vec<u64>> = vec![Vec::new()];
    let mut frontier = lists.clone();
    for _ in 0..max_len {
        let next: Vec<Vec<u64>> = frontier
            .iter()
            .flat_map(|l| {
                (0..values).map(move |v| {
                    let mut l = l.clone();
                    l.push(v);
                    l
                })
            })
            .collect();
        lists.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::with_capacity(2 * lists.len());
    for l in &lists {
        out.push(CoEnum::new(l, Tail::Stabilized));
        out.push(CoEnum::new(l, Tail::Exhaustive));
    }
    out
}

/// Small trees on `ω`, both well-founded and ill-founded.
pub fn omega_trees() -> Vec<FiniteOmegaTree> {
    vec![
        FiniteOmegaTree::root_only(),
        FiniteOmegaTree::new([vec![], vec![0], vec![1], vec![0, 3]], Growth::None).expect("valid"),
        FiniteOmegaTree::new([vec![], vec![2]], Growth::InfinitePath { prefix: vec![], period: vec![0] }).expect("valid"),
        FiniteOmegaTree::new([vec![], vec![5]], Growth::InfinitePath { prefix: vec![1], period: vec![0, 1] })
            .expect("valid"),
    ]
}

/// Characteristic words of small finite and infinite sets.
pub fn membership_words() -> Vec<MembershipWord> {
    [
        (&[][..], &[false][..]),
        (&[true][..], &[false][..]),
        (&[false, true, true][..], &[false][..]),
        (&[][..], &[true][..]),
        (&[false][..], &[true, false][..]),
        (&[true, false, false][..], &[false, false, true][..]),
    ]
    .iter()
    .map(|(p, q)| MembershipWord::new(p, q).expect("valid"))
    .collect()
}

/// First-order triples over the pattern corpus: the coloring is passed
/// through unchanged and the output functional is `Root` or `Antichain(2)`.
pub fn first_order_corpus() -> Vec<(PatternColoring, Functional)> {
    let mut out = Vec::new();
    for f in pattern_corpus().into_iter().take(8) {
        out.push((f.clone(), Functional::Root));
        out.push((f, Functional::Antichain(2)));
    }
    out
}

fn patterns_below(k: usize) -> impl Iterator<Item = PatternColoring> {
    pattern_corpus().into_iter().filter(move |f| f.range().iter().all(|&c| c < k))
}

/// The built-in source corpus of a shipped reduction.
pub fn corpus_for(r: &Reduction) -> Vec<Instance> {
    match r {
        Reduction::Rt1ToTt1 { bound } => {
            let (limit, declared) = match bound {
                Bound::Fixed(k) => (*k as u64, None),
                Bound::Declared => (3, Some(3)),
                Bound::Unbounded => (3, None),
            };
            rt1_corpus()
                .into_iter()
                .filter(|g| g.range().iter().all(|c| *c < nat(limit)))
                .map(|g| Instance::Omega { bound: declared, coloring: g })
                .collect()
        }
        Reduction::WfToTt1Ext => omega_trees().into_iter().map(|tree| Instance::OmegaTree { tree }).collect(),
        Reduction::Tt1ExtToWf { k } => {
            let root: TreeSet = [BinStr::EMPTY].into_iter().collect();
            patterns_below(*k)
                .map(|f| Instance::Extension { coloring: ProgramColoring::Pattern(f), prefix: root.clone() })
                .collect()
        }
        Reduction::V1ToTcn | Reduction::V4ToStcn => patterns_below(2).map(Instance::tree).collect(),
        Reduction::TcnToV0 | Reduction::StcnToV2 => coenum_grid(3, 3).into_iter().map(Instance::choice).collect(),
        Reduction::IsFiniteToStcn => membership_words().into_iter().map(|set| Instance::Word { set }).collect(),
        Reduction::Tt1kToD2k { k } => patterns_below(*k).map(Instance::tree).collect(),
        Reduction::FoTt1nToRt1n { .. } => first_order_corpus()
            .into_iter()
            .map(|(f, gamma)| Instance::FirstOrder { inner: Box::new(Instance::tree(f)), delta: Functional::Identity, gamma })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpora_have_the_advertised_shape() {
        let rt1 = rt1_corpus();
        assert_eq!(rt1.len(), 20);
        assert!(rt1.iter().all(|g| g.range().iter().all(|c| *c < crate::problems::nat(3))));
        let pats = pattern_corpus();
        assert_eq!(pats.len(), 20);
        assert!(pats.iter().all(|f| f.palette() <= 3 && f.depth() <= 2));
        assert_eq!(coenum_grid(2, 3).len(), 2 * (1 + 3 + 9));
        assert_eq!(pattern_corpus(), pattern_corpus());
    }
}
