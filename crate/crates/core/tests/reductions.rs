//! Every shipped reduction checked end to end over its corpus.

use rakelab::corpus::{coenum_grid, first_order_corpus, membership_words, omega_trees, pattern_corpus, rt1_corpus};
use rakelab::problems::{Bound, Functional, Instance};
use rakelab::reductions::{verify_reduction, Reduction, ReductionReport, DEFAULT_FUNCTIONAL_BUDGET};
use rakelab::{ProgramColoring, TreeSet};

const BUDGET: u64 = 1 << 20;

fn assert_passed(report: &ReductionReport) {
    assert!(report.instances > 0, "{} ran on an empty corpus", report.reduction);
    eprintln!("{}: {} instances, {} certificates", report.reduction, report.instances, report.certificates);
    assert!(report.certificates > 0, "{} checked no certificates", report.reduction);
    for f in report.failures.iter().take(5) {
        eprintln!("{}: instance {} cert {:?}: {}", report.reduction, f.instance, f.certificate, f.reason);
    }
    assert!(report.passed(), "{} failed on {} cases", report.reduction, report.failures.len());
}

fn two_colorings() -> Vec<Instance> {
    pattern_corpus().into_iter().filter(|f| f.range().iter().all(|&c| c < 2)).map(Instance::tree).collect()
}

#[test]
fn rt1_to_tt1_over_the_omega_corpus() {
    let corpus: Vec<Instance> =
        rt1_corpus().into_iter().map(|g| Instance::Omega { bound: None, coloring: g }).collect();
    assert_passed(&verify_reduction(&Reduction::Rt1ToTt1 { bound: Bound::Fixed(3) }, &corpus, BUDGET));
}

#[test]
fn well_foundedness_and_extendability() {
    let trees: Vec<Instance> = omega_trees().into_iter().map(|tree| Instance::OmegaTree { tree }).collect();
    assert_passed(&verify_reduction(&Reduction::WfToTt1Ext, &trees, BUDGET));
    let root: TreeSet = [rakelab::BinStr::EMPTY].into_iter().collect();
    let ext: Vec<Instance> = pattern_corpus()
        .into_iter()
        .filter(|f| f.palette() == 2)
        .map(|f| Instance::Extension { coloring: ProgramColoring::Pattern(f), prefix: root.clone() })
        .collect();
    assert_passed(&verify_reduction(&Reduction::Tt1ExtToWf { k: 2 }, &ext, BUDGET));
}

#[test]
fn choice_chain() {
    let twos = two_colorings();
    assert_passed(&verify_reduction(&Reduction::V1ToTcn, &twos, BUDGET));
    assert_passed(&verify_reduction(&Reduction::V4ToStcn, &twos, BUDGET));
    let grid: Vec<Instance> = coenum_grid(3, 3).into_iter().map(Instance::choice).collect();
    assert_passed(&verify_reduction(&Reduction::TcnToV0, &grid, BUDGET));
    assert_passed(&verify_reduction(&Reduction::StcnToV2, &grid, BUDGET));
    let words: Vec<Instance> = membership_words().into_iter().map(|set| Instance::Word { set }).collect();
    assert_passed(&verify_reduction(&Reduction::IsFiniteToStcn, &words, BUDGET));
}

#[test]
fn tt1_to_d2_over_the_pattern_corpus() {
    for k in 2..=3 {
        let corpus: Vec<Instance> =
            pattern_corpus().into_iter().filter(|f| f.range().iter().all(|&c| c < k)).map(Instance::tree).collect();
        assert_passed(&verify_reduction(&Reduction::Tt1kToD2k { k }, &corpus, BUDGET));
    }
}

#[test]
fn first_order_tt1_to_rt1() {
    let corpus: Vec<Instance> = first_order_corpus()
        .into_iter()
        .map(|(f, gamma)| Instance::FirstOrder { inner: Box::new(Instance::tree(f)), delta: Functional::Identity, gamma })
        .collect();
    let r = Reduction::FoTt1nToRt1n { cap: 4, budget: DEFAULT_FUNCTIONAL_BUDGET };
    assert_passed(&verify_reduction(&r, &corpus, BUDGET));
}
