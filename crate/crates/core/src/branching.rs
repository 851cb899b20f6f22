//! Branch candidates, their static ordering, and strong branching.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{BreakpointGrid, NodeDomain};
use crate::indexed::{IndexedEnsemble, IndexedNode};
use crate::penalty::{min_convex_over_box, MinimizerOptions, PenaltyModel};

/// A split `x[var] < value` at breakpoint `index` of row `var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchCandidate {
    pub var: usize,
    pub index: usize,
    pub value: f64,
    pub weight: f64,
}

impl BranchCandidate {
    /// Whether both sides of the split meet `domain`.
    pub fn is_active(&self, domain: &NodeDomain) -> bool {
        domain.range(self.var).splits_at(self.index)
    }
}

/// Leaf-coverage weight of every interior breakpoint.
///
/// A split node contributes the fraction of its tree's leaves that lie below
/// it; a breakpoint's weight sums these over every node splitting on it in
/// every tree. Candidates come back ordered by `(var, index)`.
pub fn split_weights(ens: &IndexedEnsemble) -> Vec<BranchCandidate> {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (tree, source) in ens.trees().iter().zip(ens.source().trees()) {
        let covers = source.cover_sizes();
        let total = source.leaf_count() as f64;
        for (id, node) in tree.nodes().iter().enumerate() {
            if let IndexedNode::Split { var, bp, .. } = *node {
                *acc.entry((var, bp)).or_default() += covers[id] as f64 / total;
            }
        }
    }
    let grid = ens.grid();
    acc.into_iter()
        .map(|((var, index), weight)| BranchCandidate {
            var,
            index,
            value: grid.value(var, index),
            weight,
        })
        .collect()
}

/// How candidates are ordered before the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchOrder {
    /// Non-increasing weight; ties by variable, then value.
    #[default]
    Weight,
    /// Seeded uniform shuffle.
    Random(u64),
}

pub fn branch_ordering(mut candidates: Vec<BranchCandidate>, order: BranchOrder) -> Vec<BranchCandidate> {
    candidates.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.var.cmp(&b.var))
            .then(a.value.total_cmp(&b.value))
    });
    if let BranchOrder::Random(seed) = order {
        candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    candidates
}

/// Penalty, grid and minimizer settings used to bound child domains.
#[derive(Debug, Clone, Copy)]
pub struct ConvexOracle<'a> {
    pub grid: &'a BreakpointGrid,
    pub penalty: &'a PenaltyModel,
    pub options: MinimizerOptions,
}

impl ConvexOracle<'_> {
    /// Certified lower bound of the penalty over the closure of `domain`,
    /// with the minimizer found.
    pub fn bound(&self, domain: &NodeDomain) -> Result<(f64, Vec<f64>)> {
        let (lo, hi) = self.grid.closed_box(domain);
        let m = min_convex_over_box(self.penalty, &lo, &hi, &self.options)?;
        Ok((m.lower_bound, m.x))
    }
}

/// A node as strong branching sees it.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub domain: NodeDomain,
    pub b_cvx: f64,
    pub b_gbt: f64,
    /// Penalty minimizer over the node's closed box.
    pub x_cvx: Vec<f64>,
}

/// Convex bound of one child of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildBound {
    pub domain: NodeDomain,
    pub b_cvx: f64,
    pub x_cvx: Vec<f64>,
    /// Whether the bound was carried over from the parent.
    pub inherited: bool,
}

/// Both children of `candidate`. The child whose region holds the parent's
/// minimizer reuses the parent's bound and minimizer; the other one is
/// minimized afresh, never reporting less than the parent's bound.
pub fn child_bounds(
    node: &NodeState,
    candidate: &BranchCandidate,
    oracle: &ConvexOracle<'_>,
) -> Result<[ChildBound; 2]> {
    let (left, right) = node
        .domain
        .split(candidate.var, candidate.index)
        .expect("candidate is active in the node domain");
    let left_inherits = node.x_cvx[candidate.var] < candidate.value;
    let inherit = |domain: NodeDomain| ChildBound {
        domain,
        b_cvx: node.b_cvx,
        x_cvx: node.x_cvx.clone(),
        inherited: true,
    };
    let compute = |domain: NodeDomain| -> Result<ChildBound> {
        let (b, x) = oracle.bound(&domain)?;
        Ok(ChildBound {
            domain,
            b_cvx: b.max(node.b_cvx),
            x_cvx: x,
            inherited: false,
        })
    };
    Ok(if left_inherits {
        [inherit(left), compute(right)?]
    } else {
        [compute(left)?, inherit(right)]
    })
}

/// Pruning test: the node's bound exceeds the incumbent by more than `1e-9`.
pub fn prunable(b_cvx: f64, b_gbt: f64, incumbent: f64) -> bool {
    b_cvx + b_gbt - 1e-9 > incumbent
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrongBranchOutcome {
    /// Both children of some candidate can be pruned.
    NodePrunable { branch: BranchCandidate },
    /// One child of `branch` can be pruned; continue with `survivor`.
    Strong {
        branch: BranchCandidate,
        survivor: ChildBound,
    },
    /// No candidate among the first `lookahead` active ones is strong.
    /// `branch` is the first active candidate, with its children when they
    /// were bounded during the scan.
    NotFound {
        branch: Option<BranchCandidate>,
        children: Option<[ChildBound; 2]>,
    },
}

/// Scans the first `lookahead` candidates active in the node's domain, in
/// `ordering` order, for a split whose larger-bound child is prunable.
///
/// Candidates are bounded in parallel chunks; the earliest decisive
/// candidate in `ordering` wins regardless of thread count.
pub fn strong_branch(
    node: &NodeState,
    ordering: &[BranchCandidate],
    lookahead: usize,
    incumbent: f64,
    oracle: &ConvexOracle<'_>,
) -> Result<StrongBranchOutcome> {
    let active: Vec<&BranchCandidate> = ordering.iter().filter(|c| c.is_active(&node.domain)).collect();
    let first = active.first().map(|c| **c);
    if lookahead == 0 || incumbent == f64::INFINITY || first.is_none() {
        return Ok(StrongBranchOutcome::NotFound {
            branch: first,
            children: None,
        });
    }
    let scanned = &active[..lookahead.min(active.len())];
    let chunk = rayon::current_num_threads().max(1);
    let mut first_children = None;
    for (c, group) in scanned.chunks(chunk).enumerate() {
        let results: Vec<Result<[ChildBound; 2]>> = group
            .par_iter()
            .map(|cand| child_bounds(node, cand, oracle))
            .collect();
        for (k, res) in results.into_iter().enumerate() {
            let [left, right] = res?;
            let branch = *group[k];
            let left_pr = prunable(left.b_cvx, node.b_gbt, incumbent);
            let right_pr = prunable(right.b_cvx, node.b_gbt, incumbent);
            if left_pr && right_pr {
                return Ok(StrongBranchOutcome::NodePrunable { branch });
            }
            if left_pr || right_pr {
                let survivor = if left_pr { right } else { left };
                return Ok(StrongBranchOutcome::Strong { branch, survivor });
            }
            if c == 0 && k == 0 {
                first_children = Some([left, right]);
            }
        }
    }
    Ok(StrongBranchOutcome::NotFound {
        branch: first,
        children: first_children,
    })
}
