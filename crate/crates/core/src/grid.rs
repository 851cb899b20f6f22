//! Breakpoint grids and node domains.
//!
//! Row `i` of a [`BreakpointGrid`] holds `v[i][0] = lower[i] < v[i][1] < ... <
//! v[i][m_i] < v[i][m_i + 1] = upper[i]`, where the interior entries are the
//! distinct split values on variable `i`. Cell `c` of that row is the interval
//! `[v[i][c], v[i][c + 1])`, with the last cell closed at the upper bound. The
//! ensemble is constant on every product of cells.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::{TreeEnsemble, TreeNode};

#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointGrid {
    rows: Vec<Vec<f64>>,
}

impl BreakpointGrid {
    pub fn from_ensemble(ensemble: &TreeEnsemble) -> Self {
        let mut interior: Vec<Vec<f64>> = vec![Vec::new(); ensemble.n()];
        for tree in ensemble.trees() {
            for node in tree.nodes() {
                if let TreeNode::Split { var, value, .. } = *node {
                    interior[var].push(value);
                }
            }
        }
        let rows = interior
            .into_iter()
            .enumerate()
            .map(|(i, mut values)| {
                values.sort_by(f64::total_cmp);
                values.dedup();
                let mut row = Vec::with_capacity(values.len() + 2);
                row.push(ensemble.lower()[i]);
                row.extend(values);
                row.push(ensemble.upper()[i]);
                row
            })
            .collect();
        BreakpointGrid { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Full row of variable `i`, sentinels included.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Number of interior breakpoints `m_i`.
    pub fn m(&self, i: usize) -> usize {
        self.rows[i].len() - 2
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// Total number of interior breakpoints, i.e. binary variables of the
    /// mixed-integer formulation.
    pub fn binary_count(&self) -> usize {
        (0..self.n()).map(|i| self.m(i)).sum()
    }

    /// Grid index of an interior breakpoint, matched exactly.
    pub fn index_of(&self, i: usize, value: f64) -> Option<usize> {
        let row = &self.rows[i];
        let interior = &row[1..row.len() - 1];
        interior
            .binary_search_by(|probe| probe.total_cmp(&value))
            .ok()
            .map(|k| k + 1)
    }

    /// Number of grid cells, saturating at `u128::MAX`.
    pub fn cell_count(&self) -> u128 {
        self.rows
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul((r.len() - 1) as u128))
    }

    pub fn root_domain(&self) -> NodeDomain {
        NodeDomain {
            ranges: self
                .rows
                .iter()
                .map(|r| IndexRange::new(0, r.len() - 1))
                .collect(),
        }
    }

    /// Cell index of `x_i` under the right-going tie rule.
    pub fn cell_of(&self, i: usize, x: f64) -> usize {
        let row = &self.rows[i];
        let last = row.len() - 2;
        // number of interior breakpoints <= x
        row[1..row.len() - 1].partition_point(|&v| v <= x).min(last)
    }

    /// The single-cell domain containing `x`.
    pub fn locate(&self, x: &[f64]) -> NodeDomain {
        NodeDomain {
            ranges: (0..self.n())
                .map(|i| {
                    let c = self.cell_of(i, x[i]);
                    IndexRange::new(c, c + 1)
                })
                .collect(),
        }
    }

    /// Closed box `[lower, upper]` spanned by a domain.
    pub fn closed_box(&self, domain: &NodeDomain) -> (Vec<f64>, Vec<f64>) {
        domain
            .iter()
            .enumerate()
            .map(|(i, r)| (self.rows[i][r.lo], self.rows[i][r.hi]))
            .unzip()
    }

    /// Midpoint of a domain. For any domain this point lies in the half-open
    /// region the domain denotes.
    pub fn midpoint(&self, domain: &NodeDomain) -> Vec<f64> {
        domain
            .iter()
            .enumerate()
            .map(|(i, r)| 0.5 * (self.rows[i][r.lo] + self.rows[i][r.hi]))
            .collect()
    }

    /// Whether `x` lies in the region denoted by `domain`: `v[lo] <= x < v[hi]`,
    /// closed at the upper box bound.
    pub fn region_contains(&self, domain: &NodeDomain, x: &[f64]) -> bool {
        domain.iter().enumerate().all(|(i, r)| {
            let row = &self.rows[i];
            let lo = row[r.lo];
            let hi = row[r.hi];
            lo <= x[i] && (x[i] < hi || (r.hi == row.len() - 1 && x[i] == hi))
        })
    }
}

/// Convenience alias for [`BreakpointGrid::from_ensemble`].
pub fn extract_breakpoints(ensemble: &TreeEnsemble) -> BreakpointGrid {
    BreakpointGrid::from_ensemble(ensemble)
}

/// Half-open range `lo..hi` of breakpoint indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexRange {
    pub lo: usize,
    pub hi: usize,
}

impl IndexRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo < hi, "empty index range {lo}..{hi}");
        IndexRange { lo, hi }
    }

    pub fn intersect(self, other: IndexRange) -> Option<IndexRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(IndexRange { lo, hi })
    }

    pub fn contains_range(self, other: IndexRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_single_cell(self) -> bool {
        self.hi == self.lo + 1
    }

    /// Whether breakpoint `j` splits this range into two nonempty parts.
    pub fn splits_at(self, j: usize) -> bool {
        self.lo < j && j < self.hi
    }
}

/// A sub-box of the grid: per variable, the region `v[lo] <= x < v[hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeDomain {
    ranges: Vec<IndexRange>,
}

impl NodeDomain {
    /// Panics if any range is empty.
    pub fn new(ranges: Vec<IndexRange>) -> Self {
        assert!(ranges.iter().all(|r| r.lo < r.hi), "empty domain");
        NodeDomain { ranges }
    }

    pub fn n(&self) -> usize {
        self.ranges.len()
    }

    pub fn range(&self, i: usize) -> IndexRange {
        self.ranges[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = IndexRange> + '_ {
        self.ranges.iter().copied()
    }

    pub fn ranges(&self) -> &[IndexRange] {
        &self.ranges
    }

    pub fn is_single_cell(&self) -> bool {
        self.ranges.iter().all(|r| r.is_single_cell())
    }

    pub fn contains(&self, other: &NodeDomain) -> bool {
        self.ranges
            .iter()
            .zip(&other.ranges)
            .all(|(a, b)| a.contains_range(*b))
    }

    pub fn intersect(&self, other: &NodeDomain) -> Option<NodeDomain> {
        self.ranges
            .iter()
            .zip(&other.ranges)
            .map(|(a, b)| a.intersect(*b))
            .collect::<Option<Vec<_>>>()
            .map(|ranges| NodeDomain { ranges })
    }

    /// Splits at breakpoint `j` of variable `var` into the `x < v` and
    /// `x >= v` parts, or `None` when `j` is not strictly inside the range.
    pub fn split(&self, var: usize, j: usize) -> Option<(NodeDomain, NodeDomain)> {
        let r = self.ranges[var];
        if !r.splits_at(j) {
            return None;
        }
        let mut left = self.clone();
        let mut right = self.clone();
        left.ranges[var].hi = j;
        right.ranges[var].lo = j;
        Some((left, right))
    }

    pub fn with_range(&self, var: usize, range: IndexRange) -> NodeDomain {
        let mut d = self.clone();
        d.ranges[var] = range;
        d
    }

    /// Number of cells, saturating.
    pub fn cell_count(&self) -> u128 {
        self.ranges
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul((r.hi - r.lo) as u128))
    }

    /// Every single-cell sub-domain, in lexicographic order.
    pub fn cells(&self) -> impl Iterator<Item = NodeDomain> + '_ {
        let total = self.cell_count();
        let mut current: Vec<usize> = self.ranges.iter().map(|r| r.lo).collect();
        let mut produced = 0u128;
        std::iter::from_fn(move || {
            if produced == total {
                return None;
            }
            produced += 1;
            let cell = NodeDomain {
                ranges: current.iter().map(|&c| IndexRange::new(c, c + 1)).collect(),
            };
            for (i, c) in current.iter_mut().enumerate().rev() {
                *c += 1;
                if *c < self.ranges[i].hi {
                    break;
                }
                *c = self.ranges[i].lo;
            }
            Some(cell)
        })
    }
}

impl fmt::Display for NodeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "[{}, {})", r.lo, r.hi)?;
        }
        Ok(())
    }
}
