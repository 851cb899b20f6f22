use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clip, HeuristicResult, TracePoint};
use crate::penalty::PenaltyModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    /// Inertia weight.
    pub omega: f64,
    /// Pull toward the particle's own best.
    pub c1: f64,
    /// Pull toward the swarm's best.
    pub c2: f64,
    pub particles: usize,
    pub iterations: usize,
    /// Weight of the uniform sample in the initial positions; the rest is
    /// its projection onto the penalty's subspace.
    pub h: f64,
    pub seed: u64,
    /// Seconds.
    pub time_limit: Option<f64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            omega: 0.5,
            c1: 0.7,
            c2: 0.3,
            particles: 500,
            iterations: 100,
            h: 0.15,
            seed: 0,
            time_limit: None,
        }
    }
}

/// Maps `x` into standardized coordinates, projects onto the penalty's
/// subspace, and maps back.
fn subspace_projection(penalty: &PenaltyModel, x: &[f64]) -> Vec<f64> {
    let (mu, sigma) = (penalty.mu(), penalty.sigma());
    let z: Vec<f64> = (0..x.len()).map(|i| (x[i] - mu[i]) / sigma[i]).collect();
    penalty
        .project(&z)
        .iter()
        .enumerate()
        .map(|(i, p)| mu[i] + sigma[i] * p)
        .collect()
}

/// Particle swarm minimization of `objective` over `[lower, upper]`.
///
/// Random numbers are drawn sequentially from one seeded stream; only the
/// objective evaluations run in parallel, so results depend on the seed
/// alone. Ties for the swarm best go to the lowest particle index.
pub fn pso<F>(
    objective: F,
    lower: &[f64],
    upper: &[f64],
    penalty: Option<&PenaltyModel>,
    config: &PsoConfig,
) -> HeuristicResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let start = Instant::now();
    let deadline = config.time_limit.map(|s| start + Duration::from_secs_f64(s));
    let n = lower.len();
    let m = config.particles.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax: Vec<f64> = (0..n).map(|i| 0.5 * (upper[i] - lower[i])).collect();

    let mut pos: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let x0: Vec<f64> = (0..n)
                .map(|i| lower[i] + rng.random::<f64>() * (upper[i] - lower[i]))
                .collect();
            let mut x = match penalty {
                Some(p) if config.h < 1.0 => {
                    let proj = subspace_projection(p, &x0);
                    (0..n)
                        .map(|i| config.h * x0[i] + (1.0 - config.h) * proj[i])
                        .collect()
                }
                _ => x0,
            };
            clip(&mut x, lower, upper);
            x
        })
        .collect();
    let mut vel = vec![vec![0.0; n]; m];
    let mut values: Vec<f64> = pos.par_iter().map(|x| objective(x)).collect();
    let mut best_pos = pos.clone();
    let mut best_val = values.clone();
    let (mut g, mut g_val) = swarm_best(&best_pos, &best_val);
    let mut trace = vec![TracePoint {
        iter: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        value: g_val,
    }];

    for iter in 1..=config.iterations {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        for p in 0..m {
            for i in 0..n {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = config.omega * vel[p][i]
                    + config.c1 * r1 * (best_pos[p][i] - pos[p][i])
                    + config.c2 * r2 * (g[i] - pos[p][i]);
                vel[p][i] = v.clamp(-vmax[i], vmax[i]);
                pos[p][i] = (pos[p][i] + vel[p][i]).clamp(lower[i], upper[i]);
            }
        }
        values = pos.par_iter().map(|x| objective(x)).collect();
        for p in 0..m {
            if values[p] < best_val[p] {
                best_val[p] = values[p];
                best_pos[p].clone_from(&pos[p]);
            }
        }
        let (cand, cand_val) = swarm_best(&best_pos, &best_val);
        if cand_val < g_val {
            g = cand;
            g_val = cand_val;
        }
        trace.push(TracePoint {
            iter,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            value: g_val,
        });
    }
    HeuristicResult {
        x: g,
        value: g_val,
        trace,
    }
}

fn swarm_best(pos: &[Vec<f64>], val: &[f64]) -> (Vec<f64>, f64) {
    let mut k = 0;
    for p in 1..val.len() {
        if val[p] < val[k] {
            k = p;
        }
    }
    (pos[k].clone(), val[k])
}
