//! Best-bound branch-and-bound over breakpoint-index domains.
//!
//! Each node carries a certified penalty bound `b_cvx`, an ensemble bound
//! `b_gbt` from its tree partition, and the penalty minimizer over its closed
//! box. A node is pruned when `b_cvx + b_gbt` exceeds the incumbent. Before
//! branching, strong branching shrinks the node while a candidate split has a
//! prunable child, then the partition is coarsened to tighten `b_gbt`. A node
//! reduced to a single grid cell is solved exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bounding::{
    default_block_size, partition_bound, refine_partition, root_partition, BlockSolver, Partition,
    RefineOptions,
};
use crate::branching::{
    branch_ordering, child_bounds, split_weights, strong_branch, BranchCandidate, BranchOrder,
    ChildBound, ConvexOracle, NodeState, StrongBranchOutcome,
};
use crate::ensemble::TreeEnsemble;
use crate::error::{Error, Result};
use crate::grid::{BreakpointGrid, NodeDomain};
use crate::indexed::IndexedEnsemble;
use crate::penalty::{min_convex_over_box, MinimizerOptions, PenaltyModel};

/// Safety margin of the pruning test.
pub const PRUNE_MARGIN: f64 = 1e-9;

/// Environment variable read when no thread count is configured.
pub const THREADS_ENV: &str = "GBTOPT_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Trees per root block; `None` picks [`default_block_size`].
    pub subset_size: Option<usize>,
    /// Candidates examined per strong-branching pass.
    pub lookahead: usize,
    /// Time allowed for each partition refinement.
    pub refine_limit: Duration,
    /// Stop once the relative gap is at most this.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub branch_order: BranchOrder,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
    /// Disable to explore every node that is not a single cell.
    pub prune: bool,
    pub minimizer: MinimizerOptions,
    /// Expansion budget of each block search; `None` is exact.
    pub subset_expansions: Option<usize>,
    pub recompute_leftover: bool,
    /// Points whose objective seeds the incumbent.
    pub initial_points: Vec<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            subset_size: None,
            lookahead: 100,
            refine_limit: Duration::from_secs(120),
            gap_tol: 1e-6,
            time_limit: None,
            node_limit: None,
            branch_order: BranchOrder::Weight,
            threads: None,
            prune: true,
            minimizer: MinimizerOptions::default(),
            subset_expansions: None,
            recompute_leftover: true,
            initial_points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every node was pruned or solved.
    Optimal,
    /// The relative gap reached the tolerance.
    GapReached,
    /// A time or node limit stopped the search.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Root,
    Incumbent,
    LowerBound,
    Finish,
}

/// One bound-evolution record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub wall_ms: f64,
    pub event: EventKind,
    pub node_id: usize,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub convex_ms: f64,
    pub gbt_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: Status,
    pub incumbent_x: Vec<f64>,
    /// `f*`: best objective found. A cell solved at a boundary its region
    /// excludes contributes the infimum over the cell.
    pub incumbent_value: f64,
    /// Objective evaluated at `incumbent_x`.
    pub incumbent_point_value: f64,
    pub global_lower_bound: f64,
    pub gap: f64,
    pub nodes_processed: usize,
    pub nodes_pruned: usize,
    pub strong_branches_taken: usize,
    pub cells_finalized: usize,
    /// True when a subset search hit its budget, so bounds are not exact.
    pub truncated_bounds: bool,
    pub times: PhaseTimes,
    pub events: Vec<LogEvent>,
}

/// Relative gap `(ub - lb) / max(1e-12, |lb|)`; infinite while either
/// bound is.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if ub == lb {
        return 0.0;
    }
    if !(ub.is_finite() && lb.is_finite()) {
        return f64::INFINITY;
    }
    (ub - lb) / lb.abs().max(1e-12)
}

/// A branch-and-bound node.
#[derive(Debug, Clone)]
pub struct BBNode {
    pub id: usize,
    pub depth: usize,
    pub domain: NodeDomain,
    pub b_cvx: f64,
    pub b_gbt: f64,
    pub x_cvx: Vec<f64>,
    pub partition: Arc<Partition>,
}

impl BBNode {
    pub fn lower_bound(&self) -> f64 {
        self.b_cvx + self.b_gbt
    }

    fn state(&self) -> NodeState {
        NodeState {
            domain: self.domain.clone(),
            b_cvx: self.b_cvx,
            b_gbt: self.b_gbt,
            x_cvx: self.x_cvx.clone(),
        }
    }
}

/// Whether `node` cannot hold a point better than `incumbent`.
pub fn prune_check(node: &BBNode, incumbent: f64) -> bool {
    node.lower_bound() - PRUNE_MARGIN > incumbent
}

/// Splits `node` on `candidate`. Children share the parent's partition and
/// ensemble bound; their penalty bounds come from `children` when given and
/// are computed otherwise.
pub fn branch(
    node: &BBNode,
    candidate: &BranchCandidate,
    children: Option<[ChildBound; 2]>,
    oracle: &ConvexOracle<'_>,
    next_id: &mut usize,
) -> Result<(BBNode, BBNode)> {
    if !candidate.is_active(&node.domain) {
        return Err(Error::Config(format!(
            "split x{} < {} is not active in {}",
            candidate.var, candidate.value, node.domain
        )));
    }
    let [l, r] = match children {
        Some(c) => c,
        None => child_bounds(&node.state(), candidate, oracle)?,
    };
    let mut make = |c: ChildBound| {
        *next_id += 1;
        BBNode {
            id: *next_id,
            depth: node.depth + 1,
            domain: c.domain,
            b_cvx: c.b_cvx,
            b_gbt: node.b_gbt,
            x_cvx: c.x_cvx,
            partition: Arc::clone(&node.partition),
        }
    };
    let left = make(l);
    let right = make(r);
    Ok((left, right))
}

/// Exact solution of a single-cell domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    /// A point of the cell's region.
    pub x: Vec<f64>,
    /// Penalty minimum over the cell closure plus the cell's ensemble value.
    pub value: f64,
    /// Certified lower bound on `value`.
    pub lower_bound: f64,
    /// Objective evaluated at `x`.
    pub point_value: f64,
}

/// Solves a single-cell domain: the ensemble is constant on the cell, so the
/// optimum is the penalty minimum over the cell plus that constant. The
/// minimizer is taken over the closure; if it sits on an upper face the
/// region excludes, it is moved just inside.
pub fn finalize_cell(
    ens: &IndexedEnsemble,
    penalty: &PenaltyModel,
    cell: &NodeDomain,
    options: &MinimizerOptions,
) -> Result<CellSolution> {
    let grid = ens.grid();
    let gbt = ens.cell_value(cell);
    let (lo, hi) = grid.closed_box(cell);
    let (mut x, cvx, cvx_lb) = if penalty.is_zero() {
        (grid.midpoint(cell), 0.0, 0.0)
    } else {
        let m = min_convex_over_box(penalty, &lo, &hi, options)?;
        (m.x, m.value, m.lower_bound)
    };
    nudge_into_region(grid, cell, &mut x);
    Ok(CellSolution {
        point_value: penalty.eval(&x) + ens.source().evaluate(&x),
        value: cvx + gbt,
        lower_bound: cvx_lb + gbt,
        x,
    })
}

fn nudge_into_region(grid: &BreakpointGrid, cell: &NodeDomain, x: &mut [f64]) {
    for (i, r) in cell.iter().enumerate() {
        let row = grid.row(i);
        let (lo, hi) = (row[r.lo], row[r.hi]);
        let open_top = r.hi < row.len() - 1;
        if open_top && x[i] >= hi {
            let inside = hi - (hi - lo) * 1e-9;
            x[i] = if inside >= lo && inside < hi {
                inside
            } else {
                0.5 * (lo + hi)
            };
        }
    }
}

#[derive(Debug)]
struct Queued(BBNode);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl Ord for Queued {
    // smallest bound first, then earliest created
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .lower_bound()
            .total_cmp(&self.0.lower_bound())
            .then(other.0.id.cmp(&self.0.id))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Thread count from the explicit setting, then [`THREADS_ENV`].
pub fn resolve_threads(explicit: Option<usize>) -> Option<usize> {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&t| t > 0)
}

/// Minimizes `ensemble(x) + penalty(x)` over the ensemble's box.
pub fn solve(ensemble: &TreeEnsemble, penalty: &PenaltyModel, options: &SolveOptions) -> Result<SolverReport> {
    if penalty.n() != ensemble.n() {
        return Err(Error::Dimension(format!(
            "penalty has {} variables, ensemble {}",
            penalty.n(),
            ensemble.n()
        )));
    }
    if let Some(bad) = options.initial_points.iter().find(|p| !ensemble.contains(p)) {
        return Err(Error::Dimension(format!("initial point {bad:?} is outside the box")));
    }
    if options.subset_size == Some(0) {
        return Err(Error::Config("subset size must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = resolve_threads(options.threads) {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| Search::new(ensemble, penalty, options).run())
}

struct Search<'a> {
    ens: IndexedEnsemble,
    penalty: &'a PenaltyModel,
    options: &'a SolveOptions,
    start: Instant,
    incumbent: f64,
    incumbent_x: Vec<f64>,
    incumbent_point_value: f64,
    best_lb: f64,
    report_events: Vec<LogEvent>,
    times: PhaseTimes,
    processed: usize,
    pruned: usize,
    strong: usize,
    finalized: usize,
    /// Lowest certified bound among solved cells.
    finalized_lb: f64,
    truncated: bool,
}

impl<'a> Search<'a> {
    fn new(ensemble: &TreeEnsemble, penalty: &'a PenaltyModel, options: &'a SolveOptions) -> Self {
        Search {
            ens: IndexedEnsemble::new(ensemble),
            penalty,
            options,
            start: Instant::now(),
            incumbent: f64::INFINITY,
            incumbent_x: Vec::new(),
            incumbent_point_value: f64::INFINITY,
            best_lb: f64::NEG_INFINITY,
            report_events: Vec::new(),
            times: PhaseTimes::default(),
            processed: 0,
            pruned: 0,
            strong: 0,
            finalized: 0,
            finalized_lb: f64::INFINITY,
            truncated: false,
        }
    }

    fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.penalty.eval(x) + self.ens.source().evaluate(x)
    }

    fn log(&mut self, event: EventKind, node_id: usize) {
        let (lb, ub) = (self.best_lb, self.incumbent);
        self.report_events.push(LogEvent {
            wall_ms: self.elapsed_ms(),
            event,
            node_id,
            lb,
            ub,
            gap: relative_gap(ub, lb),
        });
    }

    fn offer(&mut self, x: &[f64], value: f64, point_value: f64, node_id: usize) {
        if value < self.incumbent {
            self.incumbent = value;
            self.incumbent_x = x.to_vec();
            self.incumbent_point_value = point_value;
            self.log(EventKind::Incumbent, node_id);
        }
    }

    fn offer_point(&mut self, x: &[f64], node_id: usize) {
        let v = self.objective(x);
        self.offer(x, v, v, node_id);
    }

    fn update_lower_bound(&mut self, queue: &BinaryHeap<Queued>, node_id: usize) {
        let open = queue.peek().map_or(f64::INFINITY, |q| q.0.lower_bound());
        let lb = open.min(self.finalized_lb).min(self.incumbent);
        if lb > self.best_lb {
            self.best_lb = lb;
            self.log(EventKind::LowerBound, node_id);
        }
    }

    fn limit_hit(&self) -> bool {
        self.options
            .time_limit
            .is_some_and(|t| self.start.elapsed() >= t)
            || self.options.node_limit.is_some_and(|n| self.processed >= n)
    }

    fn oracle(&self) -> ConvexOracle<'_> {
        ConvexOracle {
            grid: self.ens.grid(),
            penalty: self.penalty,
            options: self.options.minimizer,
        }
    }

    fn prunes(&self, node: &BBNode) -> bool {
        self.options.prune && prune_check(node, self.incumbent)
    }

    fn run(mut self) -> Result<SolverReport> {
        let opts = self.options;
        let root = self.ens.grid().root_domain();
        let t = Instant::now();
        let (b_cvx, x_cvx) = self.oracle().bound(&root)?;
        self.times.convex_ms += t.elapsed().as_secs_f64() * 1e3;

        let t = Instant::now();
        let size = opts
            .subset_size
            .unwrap_or_else(|| default_block_size(self.ens.len()));
        let mut partition = root_partition(self.ens.len(), size);
        let solver = BlockSolver {
            max_expansions: opts.subset_expansions,
        };
        let b_gbt = partition_bound(&self.ens, &mut partition, &root, &solver);
        self.truncated |= !partition.is_exact();
        self.times.gbt_ms += t.elapsed().as_secs_f64() * 1e3;

        let ordering = branch_ordering(split_weights(&self.ens), opts.branch_order);
        for p in &opts.initial_points {
            self.offer_point(p, 0);
        }
        self.offer_point(&x_cvx, 0);

        let mut next_id = 0;
        let root_node = BBNode {
            id: 0,
            depth: 0,
            domain: root,
            b_cvx,
            b_gbt,
            x_cvx,
            partition: Arc::new(partition),
        };
        self.best_lb = root_node.lower_bound().min(self.incumbent);
        self.log(EventKind::Root, 0);

        let refine = RefineOptions {
            time_limit: opts.refine_limit,
            solver,
            recompute_leftover: opts.recompute_leftover,
        };
        let mut queue = BinaryHeap::new();
        queue.push(Queued(root_node));
        let mut status = Status::Optimal;

        while let Some(Queued(mut node)) = queue.pop() {
            if self.limit_hit() {
                queue.push(Queued(node));
                status = Status::Limit;
                break;
            }
            if relative_gap(self.incumbent, self.best_lb) <= opts.gap_tol && opts.gap_tol > 0.0 {
                queue.push(Queued(node));
                status = Status::GapReached;
                break;
            }
            self.processed += 1;
            if self.prunes(&node) {
                self.pruned += 1;
                self.update_lower_bound(&queue, node.id);
                continue;
            }

            // shrink the node while some split has a prunable child
            let mut decision = None;
            let mut pruned_by_strong = false;
            while !node.domain.is_single_cell() {
                let lookahead = if opts.prune { opts.lookahead } else { 0 };
                let t = Instant::now();
                let outcome =
                    strong_branch(&node.state(), &ordering, lookahead, self.incumbent, &self.oracle())?;
                self.times.convex_ms += t.elapsed().as_secs_f64() * 1e3;
                match outcome {
                    StrongBranchOutcome::NodePrunable { .. } => {
                        pruned_by_strong = true;
                        break;
                    }
                    StrongBranchOutcome::Strong { survivor, .. } => {
                        self.strong += 1;
                        node.domain = survivor.domain;
                        node.b_cvx = survivor.b_cvx;
                        node.x_cvx = survivor.x_cvx;
                    }
                    StrongBranchOutcome::NotFound { branch, children } => {
                        decision = branch.map(|b| (b, children));
                        break;
                    }
                }
            }
            if pruned_by_strong {
                self.pruned += 1;
                self.update_lower_bound(&queue, node.id);
                continue;
            }

            if node.domain.is_single_cell() {
                let t = Instant::now();
                let cell = finalize_cell(&self.ens, self.penalty, &node.domain, &opts.minimizer)?;
                self.times.convex_ms += t.elapsed().as_secs_f64() * 1e3;
                self.finalized += 1;
                self.finalized_lb = self.finalized_lb.min(cell.lower_bound);
                self.offer(&cell.x, cell.value, cell.point_value, node.id);
                self.update_lower_bound(&queue, node.id);
                continue;
            }

            let t = Instant::now();
            let (refined, bound) = refine_partition(&self.ens, &node.partition, &node.domain, &refine);
            self.truncated |= !refined.is_exact();
            self.times.gbt_ms += t.elapsed().as_secs_f64() * 1e3;
            node.b_gbt = node.b_gbt.max(bound);
            node.partition = Arc::new(refined);
            let x = node.x_cvx.clone();
            self.offer_point(&x, node.id);
            if self.prunes(&node) {
                self.pruned += 1;
                self.update_lower_bound(&queue, node.id);
                continue;
            }

            let (candidate, children) = decision.expect("a domain with several cells has an active split");
            let t = Instant::now();
            let (left, right) = branch(&node, &candidate, children, &self.oracle(), &mut next_id)?;
            self.times.convex_ms += t.elapsed().as_secs_f64() * 1e3;
            for child in [left, right] {
                if self.prunes(&child) {
                    self.pruned += 1;
                } else {
                    queue.push(Queued(child));
                }
            }
            self.update_lower_bound(&queue, node.id);
        }

        if status == Status::Optimal {
            // search complete: the incumbent is the minimum up to the
            // minimizer tolerance
            self.best_lb = self.best_lb.max(self.incumbent);
        } else {
            self.update_lower_bound(&queue, usize::MAX);
        }
        self.times.total_ms = self.elapsed_ms();
        self.log(EventKind::Finish, usize::MAX);
        Ok(SolverReport {
            status,
            gap: relative_gap(self.incumbent, self.best_lb),
            incumbent_x: self.incumbent_x,
            incumbent_value: self.incumbent,
            incumbent_point_value: self.incumbent_point_value,
            global_lower_bound: self.best_lb,
            nodes_processed: self.processed,
            nodes_pruned: self.pruned,
            strong_branches_taken: self.strong,
            cells_finalized: self.finalized,
            truncated_bounds: self.truncated,
            times: self.times,
            events: self.report_events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Tree;

    fn stump(v: f64, l: f64, r: f64) -> Tree {
        Tree::split(0, v, Tree::leaf(l), Tree::leaf(r))
    }

    fn node(b_cvx: f64, b_gbt: f64) -> BBNode {
        BBNode {
            id: 0,
            depth: 0,
            domain: NodeDomain::new(vec![crate::grid::IndexRange::new(0, 2)]),
            b_cvx,
            b_gbt,
            x_cvx: vec![0.0],
            partition: Arc::new(root_partition(0, 1)),
        }
    }

    #[test]
    fn prune_check_is_strict_with_margin() {
        assert!(!prune_check(&node(5.0, 3.0), f64::INFINITY));
        assert!(prune_check(&node(5.0, 3.0), 7.5));
        assert!(!prune_check(&node(5.0, 3.0), 8.0));
        assert!(!prune_check(&node(5.0, 3.0), 8.0 - 5e-10));
    }

    #[test]
    fn gap_convention() {
        assert_eq!(relative_gap(3.0, 3.0), 0.0);
        assert_eq!(relative_gap(3.0, 2.0), 0.5);
        assert_eq!(relative_gap(1e-13, 0.0), 0.1);
        assert_eq!(relative_gap(-1.0, f64::NEG_INFINITY), f64::INFINITY);
        assert_eq!(relative_gap(f64::INFINITY, 2.0), f64::INFINITY);
    }

    #[test]
    fn no_trees_is_a_convex_problem() {
        let ens = TreeEnsemble::new(2, vec![0.0, 0.0], vec![1.0, 1.0], vec![]).unwrap();
        let pen = PenaltyModel::new(vec![2.0, 0.5], vec![1.0, 1.0], vec![], 1.0, None).unwrap();
        let opts = SolveOptions {
            gap_tol: 0.0,
            ..Default::default()
        };
        let r = solve(&ens, &pen, &opts).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.cells_finalized, 1);
        assert!((r.incumbent_value - 1.0).abs() < 1e-12);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn conflicting_stumps_without_penalty() {
        let ens = TreeEnsemble::new(
            1,
            vec![0.0],
            vec![5.0],
            vec![stump(2.0, 0.0, 10.0), stump(2.0, 10.0, 0.0), stump(4.0, 1.0, -1.0)],
        )
        .unwrap();
        let opts = SolveOptions {
            subset_size: Some(1),
            gap_tol: 0.0,
            ..Default::default()
        };
        let r = solve(&ens, &PenaltyModel::zero(1), &opts).unwrap();
        assert_eq!(r.incumbent_value, 9.0);
        assert_eq!(ens.evaluate(&r.incumbent_x), 9.0);
        assert_eq!(r.status, Status::Optimal);
    }

    #[test]
    fn boundary_minimizer_is_moved_inside() {
        // one split at 2; penalty pulls x toward 3, so on the cell [0, 2)
        // the closure minimizer is x = 2, which evaluates on the right
        let ens = TreeEnsemble::new(1, vec![0.0], vec![4.0], vec![stump(2.0, 0.0, 1.0)]).unwrap();
        let pen = PenaltyModel::new(vec![3.0], vec![1.0], vec![], 1.0, None).unwrap();
        let ix = IndexedEnsemble::new(&ens);
        let left = NodeDomain::new(vec![crate::grid::IndexRange::new(0, 1)]);
        let c = finalize_cell(&ix, &pen, &left, &MinimizerOptions::default()).unwrap();
        assert!(c.x[0] < 2.0 && c.x[0] > 2.0 - 1e-6);
        assert!((c.value - 1.0).abs() < 1e-12);
        assert!((c.point_value - 1.0).abs() < 1e-6);
        assert!(c.lower_bound <= c.value);
    }

    #[test]
    fn zero_penalty_cell_uses_the_midpoint() {
        let ens = TreeEnsemble::new(1, vec![0.0], vec![4.0], vec![stump(2.0, 5.0, 1.0)]).unwrap();
        let ix = IndexedEnsemble::new(&ens);
        let right = NodeDomain::new(vec![crate::grid::IndexRange::new(1, 2)]);
        let c = finalize_cell(&ix, &PenaltyModel::zero(1), &right, &MinimizerOptions::default()).unwrap();
        assert_eq!(c.x, vec![3.0]);
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn inactive_branch_is_an_error() {
        let ens = TreeEnsemble::new(1, vec![0.0], vec![4.0], vec![stump(2.0, 5.0, 1.0)]).unwrap();
        let ix = IndexedEnsemble::new(&ens);
        let pen = PenaltyModel::zero(1);
        let oracle = ConvexOracle {
            grid: ix.grid(),
            penalty: &pen,
            options: MinimizerOptions::default(),
        };
        let mut n = node(0.0, 0.0);
        n.domain = NodeDomain::new(vec![crate::grid::IndexRange::new(1, 2)]);
        let cand = split_weights(&ix)[0];
        assert!(branch(&n, &cand, None, &oracle, &mut 0).is_err());
        n.domain = ix.grid().root_domain();
        let (l, r) = branch(&n, &cand, None, &oracle, &mut 0).unwrap();
        assert_eq!(l.domain.range(0), crate::grid::IndexRange::new(0, 1));
        assert_eq!(r.domain.range(0), crate::grid::IndexRange::new(1, 2));
    }
}
