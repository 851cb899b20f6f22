//! Trained tree ensembles: storage, ingestion, evaluation and structural
//! statistics.
//!
//! A tree routes a point `x` from its root to a leaf: a split node on
//! `(var, value)` sends `x` left when `x[var] < value` and right otherwise, so
//! a point sitting exactly on a threshold always goes right. The ensemble
//! value is the sum of the reached leaf values over all trees.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BreakpointGrid, NodeDomain};

/// One node of a tree stored in a flat array; children are indices into the
/// same array and node 0 is the root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        var: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A binary regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Builds a tree from a flat node array, checking that the array encodes a
    /// rooted binary tree at node 0.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Tree> {
        let tree = Tree { nodes };
        tree.check_structure(0)?;
        Ok(tree)
    }

    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Joins two subtrees under a new root splitting on `x[var] < value`.
    pub fn split(var: usize, value: f64, left: Tree, right: Tree) -> Tree {
        let left_len = left.nodes.len();
        let mut nodes = Vec::with_capacity(1 + left_len + right.nodes.len());
        nodes.push(TreeNode::Split {
            var,
            value,
            left: 1,
            right: 1 + left_len,
        });
        for (offset, sub) in [(1, left), (1 + left_len, right)] {
            nodes.extend(sub.nodes.into_iter().map(|node| match node {
                TreeNode::Split {
                    var,
                    value,
                    left,
                    right,
                } => TreeNode::Split {
                    var,
                    value,
                    left: left + offset,
                    right: right + offset,
                },
                leaf => leaf,
            }));
        }
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Id of the leaf reached by `x`.
    pub fn leaf_for(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                TreeNode::Split {
                    var,
                    value,
                    left,
                    right,
                } => id = if x[var] < value { left } else { right },
                TreeNode::Leaf { .. } => return id,
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_for(x)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!("leaf_for returns a leaf"),
        }
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, TreeNode::Leaf { .. }))
            .map(|(id, _)| id)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids().count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn leaf_value(&self, id: usize) -> Option<f64> {
        match self.nodes.get(id)? {
            TreeNode::Leaf { value } => Some(*value),
            TreeNode::Split { .. } => None,
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            match self.nodes[id] {
                TreeNode::Split { left, right, .. } => {
                    stack.push((left, d + 1));
                    stack.push((right, d + 1));
                }
                TreeNode::Leaf { .. } => best = best.max(d),
            }
        }
        best
    }

    /// For every node, the number of leaves in the subtree rooted there.
    pub fn cover_sizes(&self) -> Vec<usize> {
        let mut cover = vec![0; self.nodes.len()];
        // children always have larger ids than their parent in trees built by
        // this crate, but dumps may not, so walk a post-order explicitly
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            order.push(id);
            if let TreeNode::Split { left, right, .. } = self.nodes[id] {
                stack.push(left);
                stack.push(right);
            }
        }
        for &id in order.iter().rev() {
            cover[id] = match self.nodes[id] {
                TreeNode::Split { left, right, .. } => cover[left] + cover[right],
                TreeNode::Leaf { .. } => 1,
            };
        }
        cover
    }

    /// Leaf ids of the subtree rooted at `id`, in left-to-right order.
    pub fn subtree_leaves(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                TreeNode::Leaf { .. } => out.push(id),
            }
        }
        out
    }

    fn check_structure(&self, tree: usize) -> Result<()> {
        let len = self.nodes.len();
        if len == 0 {
            return Err(Error::NotATree {
                tree,
                reason: "tree has no nodes".into(),
            });
        }
        let mut parents = vec![0usize; len];
        for (id, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    value, left, right, ..
                } => {
                    if !value.is_finite() {
                        return Err(Error::NonFinite { tree, node: id });
                    }
                    for child in [left, right] {
                        if child >= len {
                            return Err(Error::MissingChild {
                                tree,
                                node: id,
                                child,
                            });
                        }
                        parents[child] += 1;
                    }
                    if left == right {
                        return Err(Error::NotATree {
                            tree,
                            reason: format!("node {id} uses node {left} as both children"),
                        });
                    }
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::NonFinite { tree, node: id });
                    }
                }
            }
        }
        if parents[0] != 0 {
            return Err(Error::NotATree {
                tree,
                reason: "root node 0 has a parent".into(),
            });
        }
        if let Some(id) = (1..len).find(|&id| parents[id] != 1) {
            return Err(Error::NotATree {
                tree,
                reason: format!("node {id} has {} parents", parents[id]),
            });
        }
        // one parent per non-root node leaves only disconnected cycles to rule out
        let mut seen = vec![false; len];
        let mut stack = vec![0usize];
        let mut visited = 0;
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                continue;
            }
            visited += 1;
            if let TreeNode::Split { left, right, .. } = self.nodes[id] {
                stack.push(left);
                stack.push(right);
            }
        }
        if visited != len {
            return Err(Error::NotATree {
                tree,
                reason: format!("{} nodes are unreachable from the root", len - visited),
            });
        }
        Ok(())
    }
}

/// A trained ensemble over the box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    trees: Vec<Tree>,
}

impl TreeEnsemble {
    /// Validates the inputs and collapses every split whose outcome is fixed
    /// by the box (or by the splits above it), so that every remaining split
    /// value lies strictly inside the box.
    pub fn new(n: usize, lower: Vec<f64>, upper: Vec<f64>, trees: Vec<Tree>) -> Result<Self> {
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} bounds, got {} lower and {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for var in 0..n {
            let (lo, hi) = (lower[var], upper[var]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds {
                    var,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        let mut simplified = Vec::with_capacity(trees.len());
        for (t, tree) in trees.into_iter().enumerate() {
            tree.check_structure(t)?;
            for (id, node) in tree.nodes.iter().enumerate() {
                if let TreeNode::Split { var, .. } = *node {
                    if var >= n {
                        return Err(Error::VariableOutOfRange {
                            tree: t,
                            node: id,
                            var,
                            n,
                        });
                    }
                }
            }
            let mut nodes = Vec::with_capacity(tree.nodes.len());
            let mut lo = lower.clone();
            let mut hi = upper.clone();
            collapse_by_interval(&tree, 0, &mut lo, &mut hi, &mut nodes);
            simplified.push(Tree { nodes });
        }
        Ok(TreeEnsemble {
            n,
            lower,
            upper,
            trees: simplified,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: EnsembleDocument = serde_json::from_str(text)
            .map_err(|e| Error::Malformed(e.to_string()))?;
        doc.into_ensemble()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&EnsembleDocument::from(self))
            .expect("ensemble documents always serialize")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.evaluate(x)).sum()
    }

    /// The ensemble restricted to `ids`, in the given order, over the same box.
    pub fn subset(&self, ids: &[usize]) -> TreeEnsemble {
        TreeEnsemble {
            n: self.n,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            trees: ids.iter().map(|&t| self.trees[t].clone()).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    pub fn stats(&self) -> EnsembleStats {
        ensemble_stats(self)
    }
}

fn collapse_by_interval(
    tree: &Tree,
    id: usize,
    lo: &mut [f64],
    hi: &mut [f64],
    out: &mut Vec<TreeNode>,
) -> usize {
    match tree.nodes[id] {
        TreeNode::Leaf { value } => {
            out.push(TreeNode::Leaf { value });
            out.len() - 1
        }
        TreeNode::Split {
            var,
            value,
            left,
            right,
        } => {
            if value <= lo[var] {
                return collapse_by_interval(tree, right, lo, hi, out);
            }
            if value >= hi[var] {
                return collapse_by_interval(tree, left, lo, hi, out);
            }
            let at = out.len();
            out.push(TreeNode::Leaf { value: 0.0 });
            let saved = hi[var];
            hi[var] = value;
            let l = collapse_by_interval(tree, left, lo, hi, out);
            hi[var] = saved;
            let saved = lo[var];
            lo[var] = value;
            let r = collapse_by_interval(tree, right, lo, hi, out);
            lo[var] = saved;
            out[at] = TreeNode::Split {
                var,
                value,
                left: l,
                right: r,
            };
            at
        }
    }
}

/// Equivalent tree over `domain`: splits whose outcome is fixed inside the
/// domain (given the splits above them) are replaced by the surviving child.
///
/// Panics if the tree splits on a value missing from `grid`.
pub fn reduce_tree(tree: &Tree, domain: &NodeDomain, grid: &BreakpointGrid) -> Tree {
    fn walk(
        tree: &Tree,
        id: usize,
        bounds: &mut [(usize, usize)],
        grid: &BreakpointGrid,
        out: &mut Vec<TreeNode>,
    ) -> usize {
        match tree.nodes[id] {
            TreeNode::Leaf { value } => {
                out.push(TreeNode::Leaf { value });
                out.len() - 1
            }
            TreeNode::Split {
                var,
                value,
                left,
                right,
            } => {
                let j = grid
                    .index_of(var, value)
                    .expect("split value belongs to the grid");
                let (lo, hi) = bounds[var];
                if hi <= j {
                    return walk(tree, left, bounds, grid, out);
                }
                if lo >= j {
                    return walk(tree, right, bounds, grid, out);
                }
                let at = out.len();
                out.push(TreeNode::Leaf { value: 0.0 });
                bounds[var] = (lo, j);
                let l = walk(tree, left, bounds, grid, out);
                bounds[var] = (j, hi);
                let r = walk(tree, right, bounds, grid, out);
                bounds[var] = (lo, hi);
                out[at] = TreeNode::Split {
                    var,
                    value,
                    left: l,
                    right: r,
                };
                at
            }
        }
    }
    let mut bounds: Vec<(usize, usize)> = domain.iter().map(|r| (r.lo, r.hi)).collect();
    let mut nodes = Vec::with_capacity(tree.nodes.len());
    walk(tree, 0, &mut bounds, grid, &mut nodes);
    Tree { nodes }
}

/// Size statistics, including the worst-case enumeration counts for
/// leaf-combination search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub tree_count: usize,
    pub leaf_count: usize,
    pub split_count: usize,
    pub max_depth: usize,
    /// Number of interior breakpoints summed over variables.
    pub binary_var_count: usize,
    /// Base-2 logarithm of the leaf-combination bound `2^(d|T|)`.
    pub combination_bound_log2: u64,
    /// `|T|(|T|-1)/2` pairwise checks per combination.
    pub pair_checks: u64,
    /// Base-2 logarithm of `2^(d|T|-1) |T| (|T|-1)`, absent when there are
    /// fewer than two trees (no checks needed).
    pub feasibility_check_bound_log2: Option<f64>,
}

impl EnsembleStats {
    /// `2^(d|T|)` when it fits in a `u128`.
    pub fn combination_bound(&self) -> Option<u128> {
        1u128.checked_shl(u32::try_from(self.combination_bound_log2).ok()?)
    }
}

pub fn ensemble_stats(ensemble: &TreeEnsemble) -> EnsembleStats {
    let tree_count = ensemble.trees.len();
    let max_depth = ensemble.trees.iter().map(Tree::depth).max().unwrap_or(0);
    let t = tree_count as u64;
    let exponent = max_depth as u64 * t;
    let pair_checks = t * t.saturating_sub(1) / 2;
    let feasibility_check_bound_log2 = (pair_checks > 0)
        .then(|| exponent as f64 - 1.0 + (t as f64).log2() + ((t - 1) as f64).log2());
    EnsembleStats {
        tree_count,
        leaf_count: ensemble.trees.iter().map(Tree::leaf_count).sum(),
        split_count: ensemble.trees.iter().map(Tree::split_count).sum(),
        max_depth,
        binary_var_count: BreakpointGrid::from_ensemble(ensemble).binary_count(),
        combination_bound_log2: exponent,
        pair_checks,
        feasibility_check_bound_log2,
    }
}

/// Wire form of the ensemble-dump format.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleDocument {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    trees: Vec<Vec<NodeDocument>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum NodeDocument {
    Split(SplitDocument),
    Leaf(f64),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitDocument {
    var: usize,
    value: f64,
    left: usize,
    right: usize,
}

impl EnsembleDocument {
    fn into_ensemble(self) -> Result<TreeEnsemble> {
        let trees = self
            .trees
            .into_iter()
            .map(|nodes| Tree {
                nodes: nodes
                    .into_iter()
                    .map(|node| match node {
                        NodeDocument::Split(s) => TreeNode::Split {
                            var: s.var,
                            value: s.value,
                            left: s.left,
                            right: s.right,
                        },
                        NodeDocument::Leaf(value) => TreeNode::Leaf { value },
                    })
                    .collect(),
            })
            .collect();
        TreeEnsemble::new(self.n, self.lower, self.upper, trees)
    }
}

impl From<&TreeEnsemble> for EnsembleDocument {
    fn from(e: &TreeEnsemble) -> Self {
        EnsembleDocument {
            n: e.n,
            lower: e.lower.clone(),
            upper: e.upper.clone(),
            trees: e
                .trees
                .iter()
                .map(|t| {
                    t.nodes
                        .iter()
                        .map(|node| match *node {
                            TreeNode::Split {
                                var,
                                value,
                                left,
                                right,
                            } => NodeDocument::Split(SplitDocument {
                                var,
                                value,
                                left,
                                right,
                            }),
                            TreeNode::Leaf { value } => NodeDocument::Leaf(value),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}
