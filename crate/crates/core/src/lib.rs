//! Tree pigeonhole combinatorics on effective colorings: exact analysis of
//! finitely presented colorings of the full binary tree, rakes, executable
//! reductions between instance–solution problems, and diagonalization
//! harnesses.

pub mod colorings;
pub mod corpus;
pub mod diagonal;
pub mod error;
pub mod format;
pub mod problems;
pub mod rakes;
pub mod reductions;
pub mod treecore;

pub use colorings::{Color, ConeBehavior, PatternColoring, ProgramColoring};
pub use error::{Budget, Error, Result};
pub use treecore::{BinStr, TreeSet};
