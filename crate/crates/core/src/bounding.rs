//! Lower bounds on the ensemble part from tree partitions.
//!
//! Splitting the trees into disjoint blocks and minimizing each block
//! independently gives a lower bound on the ensemble minimum: the blocks may
//! choose inconsistent points. Coarser partitions give tighter bounds, and
//! [`refine_partition`] coarsens a partition by merging pairs of blocks under
//! a time limit.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::grid::NodeDomain;
use crate::indexed::IndexedEnsemble;
use crate::subset::SubsetSearch;

/// Bound of one block, valid on `domain` and every sub-domain of it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBound {
    pub value: f64,
    /// Reachable leaves of the block's trees in `domain`.
    pub leaves: usize,
    pub domain: Arc<NodeDomain>,
    /// False when the subset search hit its expansion budget.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Tree ids, ascending.
    pub trees: Vec<usize>,
    pub cached: Option<BlockBound>,
}

impl Block {
    pub fn new(mut trees: Vec<usize>) -> Self {
        trees.sort_unstable();
        Block {
            trees,
            cached: None,
        }
    }
}

/// Disjoint blocks of tree ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    blocks: Vec<Block>,
}

impl Partition {
    /// Builds a partition from tree-id sets. Returns `None` unless the sets
    /// are nonempty, disjoint and cover `0..tree_count`.
    pub fn from_blocks(tree_count: usize, blocks: Vec<Vec<usize>>) -> Option<Self> {
        let mut seen = vec![false; tree_count];
        for b in &blocks {
            if b.is_empty() {
                return None;
            }
            for &t in b {
                if t >= tree_count || std::mem::replace(&mut seen[t], true) {
                    return None;
                }
            }
        }
        seen.iter().all(|&s| s).then(|| Partition {
            blocks: blocks.into_iter().map(Block::new).collect(),
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Sum of cached block bounds, or `None` if a block has no cached bound.
    pub fn cached_bound(&self) -> Option<f64> {
        self.blocks
            .iter()
            .map(|b| b.cached.as_ref().map(|c| c.value))
            .sum()
    }

    /// Whether every cached bound is exact.
    pub fn is_exact(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.cached.as_ref().is_some_and(|c| c.exact))
    }
}

/// How block minima are computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockSolver {
    /// Expansion budget per subset search; `None` solves exactly.
    pub max_expansions: Option<usize>,
}

impl BlockSolver {
    fn bound(&self, ens: &IndexedEnsemble, trees: &[usize], domain: &Arc<NodeDomain>) -> BlockBound {
        let outcome = SubsetSearch::new(ens)
            .with_max_expansions(self.max_expansions)
            .run(trees, domain, &mut |_| {});
        BlockBound {
            value: outcome.bound(),
            leaves: ens.reachable_leaf_count(trees, domain),
            domain: Arc::clone(domain),
            exact: outcome.is_exact(),
        }
    }
}

/// Default block size for `tree_count` trees.
pub fn default_block_size(tree_count: usize) -> usize {
    (tree_count / 110).max(1)
}

/// Consecutive blocks of `size` trees in training order; the last block may
/// be smaller. Panics if `size` is zero.
pub fn root_partition(tree_count: usize, size: usize) -> Partition {
    assert!(size >= 1, "block size must be positive");
    let ids: Vec<usize> = (0..tree_count).collect();
    Partition {
        blocks: ids.chunks(size).map(|c| Block::new(c.to_vec())).collect(),
    }
}

/// Recomputes every block on `domain` and returns the summed bound.
pub fn partition_bound(
    ens: &IndexedEnsemble,
    partition: &mut Partition,
    domain: &NodeDomain,
    solver: &BlockSolver,
) -> f64 {
    let domain = Arc::new(domain.clone());
    let bounds: Vec<BlockBound> = partition
        .blocks
        .par_iter()
        .map(|b| solver.bound(ens, &b.trees, &domain))
        .collect();
    for (b, bound) in partition.blocks.iter_mut().zip(bounds) {
        b.cached = Some(bound);
    }
    partition.cached_bound().expect("all blocks were just bounded")
}

/// Whether every block of `a` lies inside some block of `b`.
pub fn refines(a: &Partition, b: &Partition) -> bool {
    let owner: HashMap<usize, usize> = b
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(k, block)| block.trees.iter().map(move |&t| (t, k)))
        .collect();
    a.blocks.iter().all(|block| {
        let first = owner.get(&block.trees[0]);
        first.is_some() && block.trees.iter().all(|t| owner.get(t) == first)
    })
}

/// Options for [`refine_partition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub time_limit: Duration,
    pub solver: BlockSolver,
    /// After all pairs are merged, recompute the remaining unmerged block on
    /// the new domain if time is left.
    pub recompute_leftover: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            time_limit: Duration::from_secs(120),
            solver: BlockSolver::default(),
            recompute_leftover: true,
        }
    }
}

/// Merges consecutive pairs of blocks, smallest reachable-leaf count first,
/// until every pair is merged or the time limit passes. No pair starts after
/// the deadline; pairs already running finish. Blocks that are not merged
/// keep their cached bounds, which stay valid because `domain` lies inside
/// the domain they were computed on.
///
/// Returns the coarser partition and its bound. Blocks without a cached
/// bound are computed on `domain` first.
pub fn refine_partition(
    ens: &IndexedEnsemble,
    partition: &Partition,
    domain: &NodeDomain,
    options: &RefineOptions,
) -> (Partition, f64) {
    let start = Instant::now();
    let deadline = start + options.time_limit;
    let shared = Arc::new(domain.clone());
    let mut blocks = partition.blocks.clone();
    let missing: Vec<usize> = (0..blocks.len())
        .filter(|&k| blocks[k].cached.is_none())
        .collect();
    let filled: Vec<(usize, BlockBound)> = missing
        .par_iter()
        .map(|&k| (k, options.solver.bound(ens, &blocks[k].trees, &shared)))
        .collect();
    for (k, b) in filled {
        blocks[k].cached = Some(b);
    }

    let mut keyed: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| (ens.reachable_leaf_count(&b.trees, domain), k))
        .collect();
    keyed.sort_unstable();
    let order: Vec<usize> = keyed.into_iter().map(|(_, k)| k).collect();
    let pairs: Vec<(usize, usize)> = order.chunks_exact(2).map(|p| (p[0], p[1])).collect();

    let merged: Vec<Option<Block>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            if Instant::now() >= deadline {
                return None;
            }
            let mut trees = blocks[a].trees.clone();
            trees.extend_from_slice(&blocks[b].trees);
            trees.sort_unstable();
            let mut bound = options.solver.bound(ens, &trees, &shared);
            // never report less than the parts already certify
            let parts = cached_value(&blocks[a]) + cached_value(&blocks[b]);
            if parts > bound.value {
                bound.value = parts;
            }
            Some(Block {
                trees,
                cached: Some(bound),
            })
        })
        .collect();

    let all_merged = merged.iter().all(Option::is_some);
    let mut out = Vec::with_capacity(blocks.len());
    for (&(a, b), m) in pairs.iter().zip(merged) {
        match m {
            Some(block) => out.push(block),
            None => {
                out.push(blocks[a].clone());
                out.push(blocks[b].clone());
            }
        }
    }
    if order.len() % 2 == 1 {
        let k = *order.last().expect("odd length is nonzero");
        let mut block = blocks[k].clone();
        let stale = block.cached.as_ref().is_some_and(|c| *c.domain != *domain);
        if options.recompute_leftover && all_merged && stale && Instant::now() < deadline {
            let mut bound = options.solver.bound(ens, &block.trees, &shared);
            bound.value = bound.value.max(cached_value(&block));
            block.cached = Some(bound);
        }
        out.push(block);
    }
    let refined = Partition { blocks: out };
    let bound = refined.cached_bound().expect("all blocks carry bounds");
    (refined, bound)
}

fn cached_value(block: &Block) -> f64 {
    block.cached.as_ref().map_or(f64::NEG_INFINITY, |c| c.value)
}

/// Lower bound on the full objective over a domain from separate bounds on
/// the penalty and the ensemble.
pub fn global_lower_bound(b_cvx: f64, b_gbt: f64) -> f64 {
    b_cvx + b_gbt
}
