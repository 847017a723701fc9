//! Property tests for the core invariants.

use proptest::prelude::*;
use rakelab::format::{parse_instance, render_instance};
use rakelab::problems::{index_word, nat, tuple_code, tuple_decode, word_index, Bound, Functional, Instance, ProblemId};
use rakelab::rakes::{build_good_rake, exact_leaf_colors, extract_mono, is_good, validate_rake};
use rakelab::treecore::{incomparable_selection, is_subrake};
use rakelab::{BinStr, Budget, ConeBehavior, PatternColoring, TreeSet};

fn binstr(max_len: usize) -> impl Strategy<Value = BinStr> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(|b| BinStr::from_bits(&b))
}

fn behavior(k: usize) -> impl Strategy<Value = ConeBehavior> {
    prop_oneof![
        (0..k).prop_map(ConeBehavior::constant),
        prop::collection::vec(0..k, 1..=3).prop_map(|w| ConeBehavior::length_mod(&w)),
        (0..k, 0..k).prop_map(|(a, b)| ConeBehavior::last_bit([a, b])),
    ]
}

/// Complete decision sets of depth at most 2 with random node colors and cones.
fn coloring() -> impl Strategy<Value = PatternColoring> {
    (1usize..=3, 0usize..=2).prop_flat_map(|(k, depth)| {
        let nodes = (1usize << (depth + 1)) - 1;
        let leaves = 1usize << depth;
        (
            Just(k),
            Just(depth),
            prop::collection::vec(0..k, nodes),
            prop::collection::vec(behavior(k), leaves),
        )
            .prop_map(|(k, depth, colors, cones)| {
                PatternColoring::complete(
                    k,
                    depth,
                    |s| colors[s.index() as usize],
                    |s| cones[(s.index() as usize) - ((1 << depth) - 1)].clone(),
                )
                .expect("well formed")
            })
    })
}

/// Pairwise disjoint antichains, each with at least as many members as there
/// are families.
fn families() -> impl Strategy<Value = Vec<TreeSet>> {
    (1usize..=4, prop::collection::vec(binstr(6), 0..200)).prop_filter_map("too few strings", |(n, pool)| {
        let mut fams: Vec<TreeSet> = vec![TreeSet::new(); n];
        let mut used = TreeSet::new();
        for s in pool {
            if used.contains(&s) {
                continue;
            }
            if let Some(f) = fams.iter_mut().find(|f| f.len() < n + 1 && f.iter().all(|t| !t.comparable(&s))) {
                f.insert(s);
                used.insert(s);
            }
        }
        fams.iter().all(|f| f.len() >= n).then_some(fams)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn string_index_round_trips_and_orders(a in binstr(20), b in binstr(20)) {
        prop_assert_eq!(BinStr::from_index(a.index()), a);
        if a.len() == b.len() {
            prop_assert_eq!(a.lex_cmp(&b), a.cmp(&b));
        }
        if a.is_proper_prefix_of(&b) {
            prop_assert_eq!(a.lex_cmp(&b), std::cmp::Ordering::Less);
        }
        prop_assert_eq!(a.cmp(&b), a.index().cmp(&b.index()));
    }

    #[test]
    fn tuple_codes_round_trip(items in prop::collection::vec(0u64..1000, 0..6), word in prop::collection::vec(any::<bool>(), 0..40)) {
        let items: Vec<_> = items.into_iter().map(nat).collect();
        prop_assert_eq!(tuple_decode(&tuple_code(&items)), Some(items));
        prop_assert_eq!(index_word(&word_index(&word)), word);
    }

    #[test]
    fn selections_are_pairwise_incomparable(fams in families()) {
        let sel = incomparable_selection(&fams).unwrap();
        for (i, s) in sel.iter().enumerate() {
            prop_assert!(fams[i].contains(s));
            for t in &sel[i + 1..] {
                prop_assert!(!s.comparable(t));
            }
        }
    }

    #[test]
    fn density_is_monotone_and_dense_colors_are_reachable(f in coloring(), s in binstr(4), ext in binstr(4)) {
        let above = s.concat(&ext);
        prop_assert!(s.extensions_up_to(s.len() + f.horizon()).any(|t| !f.recurrent_colors(&t).is_empty()));
        for c in 0..f.palette() {
            if f.dense_above(c, &s) {
                prop_assert!(f.dense_above(c, &above));
                prop_assert!(f.occurs_above(c, &s));
            }
        }
    }

    #[test]
    fn good_rakes_validate_and_extract(f in coloring()) {
        let good = build_good_rake(&f);
        let r = good.rake.prefix(2).expect("two blocks");
        prop_assert!(validate_rake(&f, &r).is_ok());
        prop_assert!(is_good(&f, &r));
        let lc = exact_leaf_colors(&f, &r).unwrap();
        let ex = extract_mono(&f, &r, &lc).unwrap();
        prop_assert!(is_subrake(&ex.set, &r));
        prop_assert!(ex.set.iter().all(|x| f.eval(x) == ex.color));
        prop_assert_eq!(ex.set.len(), 3);
    }

    #[test]
    fn functionals_ignore_end_extensions(f in coloring(), n in 1usize..=2, pick in any::<prop::sample::Index>(), tail in binstr(3)) {
        let colors: Vec<_> = f.range().into_iter().collect();
        let c = colors[pick.index(colors.len())];
        let sets = f.enumerate_mono(&BinStr::EMPTY, n, f.depth() + 4, c);
        prop_assume!(!sets.is_empty());
        let s = &sets[pick.index(sets.len())];
        let leaves: Vec<BinStr> = s.leaves().iter().copied().collect();
        let x = leaves[pick.index(leaves.len())].concat(&tail).child(true);
        let mut t = s.clone();
        t.insert(x);
        for gamma in [Functional::Root, Functional::Antichain(1), Functional::Antichain(2)] {
            let before = gamma.apply_tree(s, &mut Budget::unlimited()).unwrap();
            if before.is_some() {
                prop_assert_eq!(gamma.apply_tree(&t, &mut Budget::unlimited()).unwrap(), before);
            }
        }
    }

    #[test]
    fn instances_round_trip_through_text(f in coloring()) {
        let pid = ProblemId::Tt1(Bound::Unbounded);
        let inst = Instance::tree(f);
        let text = render_instance(&pid, &inst).unwrap();
        let (p, back) = parse_instance(&text).unwrap();
        prop_assert_eq!(p, pid);
        prop_assert_eq!(back, inst);
    }
}
