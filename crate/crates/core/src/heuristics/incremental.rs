use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HeuristicResult, TracePoint};
use crate::bb::{solve, SolveOptions};
use crate::ensemble::TreeEnsemble;
use crate::error::Result;
use crate::penalty::{min_convex_over_box, PenaltyModel};

/// Which trees join the sub-ensemble next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Training order.
    #[default]
    Ta,
    /// Largest contribution at the current point; ties by tree id.
    Bi,
    /// Uniform without replacement.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncrementalConfig {
    pub strategy: Strategy,
    /// Trees added per iteration.
    pub step: usize,
    /// Seconds; `None` runs until every tree is included.
    pub time_limit: Option<f64>,
}

impl Default for IncrementalConfig {
    fn default() -> Self {
        IncrementalConfig {
            strategy: Strategy::Ta,
            step: 10,
            time_limit: None,
        }
    }
}

/// Picks up to `step` trees not yet in `selected`.
pub fn select_next(
    ensemble: &TreeEnsemble,
    selected: &[bool],
    x: &[f64],
    strategy: Strategy,
    step: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..ensemble.len()).filter(|&t| !selected[t]).collect();
    match strategy {
        Strategy::Ta => {}
        Strategy::Bi => {
            let trees = ensemble.trees();
            pool.sort_by(|&a, &b| {
                trees[b]
                    .evaluate(x)
                    .total_cmp(&trees[a].evaluate(x))
                    .then(a.cmp(&b))
            });
        }
        Strategy::Random(_) => pool.shuffle(rng),
    }
    pool.truncate(step);
    pool
}

/// Solves sub-ensembles of growing size exactly and keeps the point with
/// the best full objective.
///
/// Iteration 0 minimizes the penalty alone. Each later iteration adds
/// `config.step` trees chosen by `config.strategy` at the previous point and
/// solves penalty plus the selected trees with [`solve`]. The result is the
/// best full-objective value over all iterations.
pub fn incremental_minlp(
    ensemble: &TreeEnsemble,
    penalty: &PenaltyModel,
    config: &IncrementalConfig,
    solver: &SolveOptions,
) -> Result<HeuristicResult> {
    let start = Instant::now();
    let deadline = config.time_limit.map(|s| start + Duration::from_secs_f64(s));
    let full = |x: &[f64]| penalty.eval(x) + ensemble.evaluate(x);
    let seed = match config.strategy {
        Strategy::Random(s) => s,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = min_convex_over_box(penalty, ensemble.lower(), ensemble.upper(), &solver.minimizer)?.x;
    let mut best = HeuristicResult {
        value: full(&x),
        x: x.clone(),
        trace: Vec::new(),
    };
    best.trace.push(TracePoint {
        iter: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        value: best.value,
    });

    let mut selected = vec![false; ensemble.len()];
    let mut chosen: Vec<usize> = Vec::new();
    let mut iter = 0;
    while chosen.len() < ensemble.len() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        iter += 1;
        for t in select_next(ensemble, &selected, &x, config.strategy, config.step, &mut rng) {
            selected[t] = true;
            chosen.push(t);
        }
        chosen.sort_unstable();
        let sub = ensemble.subset(&chosen);
        let mut opts = solver.clone();
        if let Some(d) = deadline {
            let left = d.saturating_duration_since(Instant::now());
            opts.time_limit = Some(opts.time_limit.map_or(left, |t| t.min(left)));
        }
        let report = solve(&sub, penalty, &opts)?;
        if report.incumbent_x.is_empty() {
            break;
        }
        x = report.incumbent_x;
        let value = full(&x);
        if value < best.value {
            best.value = value;
            best.x = x.clone();
        }
        best.trace.push(TracePoint {
            iter,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            value,
        });
    }
    Ok(best)
}
