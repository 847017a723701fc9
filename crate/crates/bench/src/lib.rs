//! Shared inputs for the benchmarks.

use rakelab::corpus::{coenum_grid, pattern_corpus, split_example};
use rakelab::problems::Instance;
use rakelab::PatternColoring;

/// Pattern colorings of increasing shape: a constant one, the split example,
/// and the rest of the corpus.
pub fn colorings() -> Vec<(String, PatternColoring)> {
    let mut out = vec![("constant".to_string(), PatternColoring::constant(2, 0)), ("split".to_string(), split_example())];
    out.extend(pattern_corpus().into_iter().enumerate().skip(2).step_by(6).map(|(i, f)| (format!("corpus{i}"), f)));
    out
}

/// A slice of the co-enumeration grid used for the choice reductions.
pub fn choice_instances() -> Vec<Instance> {
    coenum_grid(4, 3).into_iter().map(Instance::choice).collect()
}
