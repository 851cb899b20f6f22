//! Exact minimization of a subset of trees over a node domain.
//!
//! [`solve_subset`] runs a best-first search. A state assigns leaves to the
//! first `k` trees of a fixed processing order and keeps the product of index
//! intervals consistent with all of them. Its priority is the accumulated leaf
//! sum plus, for every unassigned tree, the smallest leaf still reachable in
//! the state's domain. That remainder never overestimates the best completion
//! and never decreases along an expansion, so the first complete state popped
//! is optimal and states repeating a `(k, domain)` pair can be skipped.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::ensemble::TreeNode;
use crate::error::{Error, Result};
use crate::grid::{IndexRange, NodeDomain};
use crate::indexed::IndexedEnsemble;

/// Default cap on the number of leaf combinations the brute-force oracle may
/// enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution {
    /// Minimum of the subset sum over the domain.
    pub value: f64,
    /// Region, inside the domain, where the chosen leaves are all reached.
    pub witness: NodeDomain,
    /// `(tree, leaf node id)` pairs in ascending tree order.
    pub leaf_choice: Vec<(usize, usize)>,
}

/// Result of a search that may stop early.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetOutcome {
    Exact(SubsetSolution),
    /// Expansion budget exhausted; `lower_bound` is the smallest open priority.
    Truncated { lower_bound: f64 },
}

impl SubsetOutcome {
    /// A valid lower bound on the subset minimum.
    pub fn bound(&self) -> f64 {
        match self {
            SubsetOutcome::Exact(s) => s.value,
            SubsetOutcome::Truncated { lower_bound } => *lower_bound,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SubsetOutcome::Exact(_))
    }
}

/// One state expansion, reported to search observers.
#[derive(Debug, Clone)]
pub struct Expansion<'a> {
    /// Trees in processing order.
    pub order: &'a [usize],
    /// Number of trees already assigned.
    pub assigned: usize,
    pub accumulated: f64,
    pub priority: f64,
    pub domain: &'a NodeDomain,
}

/// Minimum leaf value of tree `t` reachable in `domain`.
pub fn min_leaf_under_domain(ens: &IndexedEnsemble, t: usize, domain: &NodeDomain) -> f64 {
    ens.tree(t).min_leaf(domain).0
}

/// Exact minimum of `Σ_{t in trees} f_t(x)` over `domain`.
pub fn solve_subset(ens: &IndexedEnsemble, trees: &[usize], domain: &NodeDomain) -> SubsetSolution {
    match SubsetSearch::new(ens).run(trees, domain, &mut |_| {}) {
        SubsetOutcome::Exact(s) => s,
        SubsetOutcome::Truncated { .. } => unreachable!("unbounded search always completes"),
    }
}

/// Best-first subset search with an optional expansion budget.
#[derive(Debug, Clone, Copy)]
pub struct SubsetSearch<'a> {
    ens: &'a IndexedEnsemble,
    max_expansions: Option<usize>,
}

#[derive(Debug)]
struct State {
    parent: Option<usize>,
    slot: usize,
    assigned: usize,
    accumulated: f64,
    domain: NodeDomain,
}

#[derive(Debug, PartialEq)]
struct Entry {
    priority: f64,
    assigned: usize,
    counter: u64,
    state: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // max-heap: invert so the smallest priority wins, then most trees
    // assigned, then earliest insertion
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then(self.assigned.cmp(&other.assigned))
            .then(other.counter.cmp(&self.counter))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> SubsetSearch<'a> {
    pub fn new(ens: &'a IndexedEnsemble) -> Self {
        SubsetSearch {
            ens,
            max_expansions: None,
        }
    }

    pub fn with_max_expansions(mut self, limit: Option<usize>) -> Self {
        self.max_expansions = limit;
        self
    }

    /// Processing order: descending spread of reachable leaf values, ties by
    /// tree id.
    pub fn processing_order(&self, trees: &[usize], domain: &NodeDomain) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize)> = trees
            .iter()
            .map(|&t| (self.ens.tree(t).spread(domain), t))
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, t)| t).collect()
    }

    fn remainder(&self, order: &[usize], from: usize, domain: &NodeDomain) -> f64 {
        order[from..]
            .iter()
            .map(|&t| self.ens.tree(t).min_leaf_by_scan(domain))
            .sum()
    }

    pub fn run(
        &self,
        trees: &[usize],
        domain: &NodeDomain,
        observer: &mut dyn FnMut(&Expansion<'_>),
    ) -> SubsetOutcome {
        let order = self.processing_order(trees, domain);
        let mut states = vec![State {
            parent: None,
            slot: usize::MAX,
            assigned: 0,
            accumulated: 0.0,
            domain: domain.clone(),
        }];
        let mut heap = BinaryHeap::new();
        let mut counter = 0u64;
        heap.push(Entry {
            priority: self.remainder(&order, 0, domain),
            assigned: 0,
            counter,
            state: 0,
        });
        let mut closed: HashSet<(usize, NodeDomain)> = HashSet::new();
        let mut expansions = 0usize;

        while let Some(entry) = heap.pop() {
            let (assigned, accumulated) = {
                let s = &states[entry.state];
                (s.assigned, s.accumulated)
            };
            if assigned == order.len() {
                return SubsetOutcome::Exact(self.rebuild(&states, entry.state, &order));
            }
            if !closed.insert((assigned, states[entry.state].domain.clone())) {
                continue;
            }
            if self.max_expansions.is_some_and(|m| expansions >= m) {
                return SubsetOutcome::Truncated {
                    lower_bound: entry.priority,
                };
            }
            expansions += 1;
            observer(&Expansion {
                order: &order,
                assigned,
                accumulated,
                priority: entry.priority,
                domain: &states[entry.state].domain,
            });

            let tree = self.ens.tree(order[assigned]);
            for (slot, leaf) in tree.leaves().iter().enumerate() {
                let Some(child) = leaf.restrict(&states[entry.state].domain) else {
                    continue;
                };
                let acc = accumulated + leaf.value;
                let priority = acc + self.remainder(&order, assigned + 1, &child);
                counter += 1;
                states.push(State {
                    parent: Some(entry.state),
                    slot,
                    assigned: assigned + 1,
                    accumulated: acc,
                    domain: child,
                });
                heap.push(Entry {
                    priority,
                    assigned: assigned + 1,
                    counter,
                    state: states.len() - 1,
                });
            }
        }
        unreachable!("a nonempty domain always admits a leaf per tree")
    }

    fn rebuild(&self, states: &[State], mut at: usize, order: &[usize]) -> SubsetSolution {
        let witness = states[at].domain.clone();
        let mut choice = Vec::with_capacity(order.len());
        while let Some(parent) = states[at].parent {
            let s = &states[at];
            let t = order[s.assigned - 1];
            choice.push((t, s.slot));
            at = parent;
        }
        choice.sort_unstable();
        let value = choice
            .iter()
            .map(|&(t, slot)| self.ens.tree(t).leaf(slot).value)
            .sum();
        SubsetSolution {
            value,
            witness,
            leaf_choice: choice
                .into_iter()
                .map(|(t, slot)| (t, self.ens.tree(t).leaf(slot).node))
                .collect(),
        }
    }
}

/// Output of the enumeration oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub solution: SubsetSolution,
    /// Leaf combinations passing every pairwise consistency check.
    pub feasible: u128,
    /// Leaf combinations enumerated.
    pub total: u128,
}

/// Real-valued constraints `lower <= x < upper` a leaf's root path imposes.
#[derive(Debug, Clone)]
struct PathBox {
    node: usize,
    value: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn path_boxes(ens: &IndexedEnsemble, t: usize) -> Vec<PathBox> {
    let source = ens.source();
    let tree = &source.trees()[t];
    let n = source.n();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])];
    while let Some((id, lower, upper)) = stack.pop() {
        match *tree.node(id) {
            TreeNode::Split {
                var,
                value,
                left,
                right,
            } => {
                let mut lu = upper.clone();
                lu[var] = lu[var].min(value);
                let mut rl = lower.clone();
                rl[var] = rl[var].max(value);
                stack.push((left, lower, lu));
                stack.push((right, rl, upper));
            }
            TreeNode::Leaf { value } => out.push(PathBox {
                node: id,
                value,
                lower,
                upper,
            }),
        }
    }
    out.sort_by_key(|b| b.node);
    out
}

/// Enumerates every leaf combination and keeps the cheapest one that passes
/// the pairwise consistency test: two leaves conflict on `x_i` when one
/// requires `x_i >= a` and the other `x_i < b` with `a >= b`. Intended as a
/// test oracle for [`solve_subset`].
pub fn brute_force_subset(
    ens: &IndexedEnsemble,
    trees: &[usize],
    domain: &NodeDomain,
    cap: u128,
) -> Result<BruteForce> {
    let grid = ens.grid();
    let n = grid.n();
    // every leaf bound is a breakpoint, so closing the domain at the top of
    // the box never changes whether an intersection is empty
    let (dom_lo, dom_hi) = grid.closed_box(domain);

    let mut trees: Vec<usize> = trees.to_vec();
    trees.sort_unstable();
    let candidates: Vec<Vec<PathBox>> = trees
        .iter()
        .map(|&t| {
            path_boxes(ens, t)
                .into_iter()
                .filter(|b| {
                    (0..n).all(|i| {
                        let lo = b.lower[i].max(dom_lo[i]);
                        let hi = b.upper[i].min(dom_hi[i]);
                        lo < hi
                    })
                })
                .collect()
        })
        .collect();
    let total = candidates
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::EnumerationCap { needed: total, cap });
    }

    let consistent = |a: &PathBox, b: &PathBox| {
        (0..n).all(|i| a.lower[i].max(b.lower[i]) < a.upper[i].min(b.upper[i]))
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut feasible = 0u128;
    let mut pick = vec![0usize; candidates.len()];
    let mut enumerated = 0u128;
    'outer: loop {
        if !candidates.is_empty() {
            enumerated += 1;
            let chosen: Vec<&PathBox> = pick
                .iter()
                .zip(&candidates)
                .map(|(&k, c)| &c[k])
                .collect();
            let ok = (0..chosen.len())
                .all(|a| (a + 1..chosen.len()).all(|b| consistent(chosen[a], chosen[b])));
            if ok {
                feasible += 1;
                let value: f64 = chosen.iter().map(|b| b.value).sum();
                if best.as_ref().is_none_or(|(v, _)| value < *v) {
                    best = Some((value, pick.clone()));
                }
            }
        }
        for k in (0..pick.len()).rev() {
            pick[k] += 1;
            if pick[k] < candidates[k].len() {
                continue 'outer;
            }
            pick[k] = 0;
        }
        break;
    }

    let (value, pick) = best.unwrap_or((0.0, Vec::new()));
    let mut witness = domain.clone();
    let mut leaf_choice = Vec::with_capacity(pick.len());
    for ((&t, c), &k) in trees.iter().zip(&candidates).zip(&pick) {
        let b = &c[k];
        leaf_choice.push((t, b.node));
        for i in 0..n {
            let r = witness.range(i);
            let lo = if b.lower[i] > grid.value(i, r.lo) {
                grid.index_of(i, b.lower[i]).unwrap_or(r.lo)
            } else {
                r.lo
            };
            let hi = if b.upper[i] < grid.value(i, r.hi) {
                grid.index_of(i, b.upper[i]).unwrap_or(r.hi)
            } else {
                r.hi
            };
            witness = witness.with_range(i, IndexRange::new(lo, hi));
        }
    }
    Ok(BruteForce {
        solution: SubsetSolution {
            value,
            witness,
            leaf_choice,
        },
        feasible,
        total: if candidates.is_empty() { 1 } else { enumerated },
    })
}
