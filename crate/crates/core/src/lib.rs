//! Global minimization of a trained gradient-boosted tree ensemble plus a
//! convex quadratic penalty over a box.
//!
//! The objective is `f(x) = GBT(x) + penalty(x)` with `x` in `[lower, upper]`.
//! [`bb::solve`] runs a best-bound branch-and-bound over breakpoint-index
//! domains. Each node bounds the two parts separately: the penalty by a
//! certified box minimization ([`penalty::min_convex_over_box`]) and the
//! ensemble by summing exact minima of disjoint tree blocks
//! ([`bounding::partition_bound`]).
//!
//! ```
//! use gbtopt::{Tree, TreeEnsemble};
//!
//! let tree = Tree::split(0, 2.0, Tree::leaf(1.0), Tree::leaf(3.0));
//! let ens = TreeEnsemble::new(1, vec![0.0], vec![5.0], vec![tree]).unwrap();
//! assert_eq!(ens.evaluate(&[1.5]), 1.0);
//! assert_eq!(ens.evaluate(&[2.0]), 3.0);
//! ```

pub mod bb;
pub mod bounding;
pub mod branching;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod heuristics;
pub mod indexed;
pub mod milp;
pub mod penalty;
pub mod report;
pub mod subset;
pub mod synthetic;

pub use bb::{solve, SolveOptions, SolverReport, Status};
pub use ensemble::{ensemble_stats, reduce_tree, EnsembleStats, Tree, TreeEnsemble, TreeNode};
pub use error::{Error, Result};
pub use grid::{extract_breakpoints, BreakpointGrid, IndexRange, NodeDomain};
pub use indexed::IndexedEnsemble;
pub use penalty::{fit_pca, min_convex_over_box, Mixture, PenaltyModel};
pub use subset::{brute_force_subset, solve_subset, SubsetSolution};

/// Version of the ensemble JSON document layout.
pub const ENSEMBLE_SCHEMA_VERSION: u32 = 1;
/// Version of the report, log and LP output formats.
pub const OUTPUT_FORMAT_VERSION: u32 = 1;
