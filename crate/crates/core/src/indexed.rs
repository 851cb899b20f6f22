//! Grid-indexed view of an ensemble.
//!
//! Every split value is replaced by its breakpoint index, and every leaf
//! carries the index-interval box its root path imposes. Reachability of a
//! leaf inside a [`NodeDomain`] is then an interval-intersection test.

use crate::ensemble::{Tree, TreeEnsemble, TreeNode};
use crate::grid::{BreakpointGrid, IndexRange, NodeDomain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexedNode {
    Split {
        var: usize,
        bp: usize,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        slot: usize,
    },
}

/// A leaf together with the box its root path imposes. Only constrained
/// variables are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafBox {
    pub node: usize,
    pub value: f64,
    pub constraints: Vec<(usize, IndexRange)>,
}

impl LeafBox {
    pub fn meets(&self, domain: &NodeDomain) -> bool {
        self.constraints
            .iter()
            .all(|&(var, r)| r.intersect(domain.range(var)).is_some())
    }

    /// Narrows `domain` to this leaf's box, or `None` when they are disjoint.
    pub fn restrict(&self, domain: &NodeDomain) -> Option<NodeDomain> {
        let mut out = domain.clone();
        for &(var, r) in &self.constraints {
            let narrowed = r.intersect(domain.range(var))?;
            out = out.with_range(var, narrowed);
        }
        Some(out)
    }
}

#[derive(Debug, Clone)]
pub struct IndexedTree {
    nodes: Vec<IndexedNode>,
    leaves: Vec<LeafBox>,
    /// Leaf slots in ascending value order, ties by slot.
    by_value: Vec<usize>,
}

impl IndexedTree {
    fn new(tree: &Tree, grid: &BreakpointGrid) -> Self {
        let mut nodes = Vec::with_capacity(tree.nodes().len());
        let mut leaves = Vec::new();
        for node in tree.nodes() {
            nodes.push(match *node {
                TreeNode::Split {
                    var,
                    value,
                    left,
                    right,
                } => IndexedNode::Split {
                    var,
                    bp: grid
                        .index_of(var, value)
                        .expect("grid holds every split value"),
                    left,
                    right,
                },
                TreeNode::Leaf { value } => IndexedNode::Leaf { value, slot: 0 },
            });
        }
        let root = grid.root_domain();
        let mut stack = vec![(0usize, Vec::<(usize, IndexRange)>::new())];
        while let Some((id, path)) = stack.pop() {
            match nodes[id] {
                IndexedNode::Split {
                    var,
                    bp,
                    left,
                    right,
                } => {
                    let current = path
                        .iter()
                        .find(|(v, _)| *v == var)
                        .map(|&(_, r)| r)
                        .unwrap_or(root.range(var));
                    for (child, r) in [
                        (right, IndexRange::new(bp, current.hi)),
                        (left, IndexRange::new(current.lo, bp)),
                    ] {
                        let mut p: Vec<_> = path.iter().copied().filter(|(v, _)| *v != var).collect();
                        p.push((var, r));
                        stack.push((child, p));
                    }
                }
                IndexedNode::Leaf { value, .. } => {
                    let mut constraints = path;
                    constraints.sort_by_key(|&(v, _)| v);
                    nodes[id] = IndexedNode::Leaf {
                        value,
                        slot: leaves.len(),
                    };
                    leaves.push(LeafBox {
                        node: id,
                        value,
                        constraints,
                    });
                }
            }
        }
        let mut by_value: Vec<usize> = (0..leaves.len()).collect();
        by_value.sort_by(|&a, &b| leaves[a].value.total_cmp(&leaves[b].value).then(a.cmp(&b)));
        IndexedTree {
            nodes,
            leaves,
            by_value,
        }
    }

    pub fn nodes(&self) -> &[IndexedNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[LeafBox] {
        &self.leaves
    }

    pub fn leaf(&self, slot: usize) -> &LeafBox {
        &self.leaves[slot]
    }

    /// Slot of the leaf reached from cell indices `cell[i]`.
    pub fn leaf_at_cell(&self, cell: &[usize]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                IndexedNode::Split {
                    var,
                    bp,
                    left,
                    right,
                } => id = if cell[var] < bp { left } else { right },
                IndexedNode::Leaf { slot, .. } => return slot,
            }
        }
    }

    /// Minimum leaf value reachable inside `domain`, with its slot. Walks the
    /// tree and only descends into children that intersect the domain.
    pub fn min_leaf(&self, domain: &NodeDomain) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                IndexedNode::Split {
                    var,
                    bp,
                    left,
                    right,
                } => {
                    let r = domain.range(var);
                    if r.hi > bp {
                        stack.push(right);
                    }
                    if r.lo < bp {
                        stack.push(left);
                    }
                }
                IndexedNode::Leaf { value, slot } => {
                    if value < best.0 || (value == best.0 && slot < best.1) {
                        best = (value, slot);
                    }
                }
            }
        }
        best
    }

    /// Minimum reachable leaf value found by scanning leaves in value order.
    pub(crate) fn min_leaf_by_scan(&self, domain: &NodeDomain) -> f64 {
        self.by_value
            .iter()
            .map(|&s| &self.leaves[s])
            .find(|leaf| leaf.meets(domain))
            .map_or(f64::INFINITY, |leaf| leaf.value)
    }

    /// Leaf slots reachable inside `domain`.
    pub fn reachable(&self, domain: &NodeDomain) -> impl Iterator<Item = usize> + '_ {
        let domain = domain.clone();
        self.leaves
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.meets(&domain))
            .map(|(s, _)| s)
    }

    /// `max - min` over reachable leaves.
    pub fn spread(&self, domain: &NodeDomain) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for leaf in self.leaves.iter().filter(|l| l.meets(domain)) {
            lo = lo.min(leaf.value);
            hi = hi.max(leaf.value);
        }
        hi - lo
    }
}

/// An ensemble with its breakpoint grid and per-leaf boxes.
#[derive(Debug, Clone)]
pub struct IndexedEnsemble {
    source: TreeEnsemble,
    grid: BreakpointGrid,
    trees: Vec<IndexedTree>,
}

impl IndexedEnsemble {
    pub fn new(ensemble: &TreeEnsemble) -> Self {
        let grid = BreakpointGrid::from_ensemble(ensemble);
        let trees = ensemble
            .trees()
            .iter()
            .map(|t| IndexedTree::new(t, &grid))
            .collect();
        IndexedEnsemble {
            source: ensemble.clone(),
            grid,
            trees,
        }
    }

    pub fn source(&self) -> &TreeEnsemble {
        &self.source
    }

    pub fn grid(&self) -> &BreakpointGrid {
        &self.grid
    }

    pub fn trees(&self) -> &[IndexedTree] {
        &self.trees
    }

    pub fn tree(&self, t: usize) -> &IndexedTree {
        &self.trees[t]
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Exact ensemble value on a single-cell domain.
    pub fn cell_value(&self, cell: &NodeDomain) -> f64 {
        debug_assert!(cell.is_single_cell());
        let idx: Vec<usize> = cell.iter().map(|r| r.lo).collect();
        self.trees
            .iter()
            .map(|t| t.leaf(t.leaf_at_cell(&idx)).value)
            .sum()
    }

    /// Number of leaves of `trees` reachable inside `domain`.
    pub fn reachable_leaf_count(&self, trees: &[usize], domain: &NodeDomain) -> usize {
        trees
            .iter()
            .map(|&t| self.trees[t].reachable(domain).count())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TreeEnsemble {
        // x0 < 2 ? (x1 < 3 ? 1 : 2) : (x0 < 4 ? 5 : 0)
        let t = Tree::split(
            0,
            2.0,
            Tree::split(1, 3.0, Tree::leaf(1.0), Tree::leaf(2.0)),
            Tree::split(0, 4.0, Tree::leaf(5.0), Tree::leaf(0.0)),
        );
        TreeEnsemble::new(2, vec![0.0, 0.0], vec![6.0, 6.0], vec![t]).unwrap()
    }

    #[test]
    fn leaf_boxes_follow_root_paths() {
        let ix = IndexedEnsemble::new(&sample());
        let tree = ix.tree(0);
        let boxes: Vec<_> = tree
            .leaves()
            .iter()
            .map(|l| (l.value, l.constraints.clone()))
            .collect();
        assert!(boxes.contains(&(
            1.0,
            vec![(0, IndexRange::new(0, 1)), (1, IndexRange::new(0, 1))]
        )));
        assert!(boxes.contains(&(5.0, vec![(0, IndexRange::new(1, 2))])));
        assert!(boxes.contains(&(0.0, vec![(0, IndexRange::new(2, 3))])));
    }

    #[test]
    fn min_leaf_respects_domain() {
        let ix = IndexedEnsemble::new(&sample());
        let root = ix.grid().root_domain();
        assert_eq!(ix.tree(0).min_leaf(&root).0, 0.0);
        let (left, _) = root.split(0, 1).unwrap();
        assert_eq!(ix.tree(0).min_leaf(&left).0, 1.0);
        assert_eq!(ix.tree(0).min_leaf_by_scan(&left), 1.0);
        assert_eq!(ix.tree(0).spread(&left), 1.0);
        assert_eq!(ix.reachable_leaf_count(&[0], &left), 2);
    }

    #[test]
    fn cell_value_matches_evaluation() {
        let e = sample();
        let ix = IndexedEnsemble::new(&e);
        for cell in ix.grid().root_domain().cells() {
            let x = ix.grid().midpoint(&cell);
            assert_eq!(ix.cell_value(&cell), e.evaluate(&x));
        }
    }
}
