//! Runs the code blocks of the book in `book/src` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod ensembles {}

#[doc = include_str!("../../../book/src/penalties.md")]
pub mod penalties {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}

#[doc = include_str!("../../../book/src/branch-and-bound.md")]
pub mod branch_and_bound {}

#[doc = include_str!("../../../book/src/heuristics.md")]
pub mod heuristics {}

#[doc = include_str!("../../../book/src/milp-export.md")]
pub mod milp_export {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
