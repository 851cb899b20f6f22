use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{clip, HeuristicResult, TracePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    /// Initial temperature.
    pub t0: f64,
    /// Geometric cooling factor.
    pub alpha: f64,
    /// Scale `c` in the acceptance probability `exp(-delta / (c T))`.
    pub prob_const: f64,
    /// Moves tried per temperature.
    pub inner_iters: usize,
    /// Stop once the temperature drops to this.
    pub epsilon: f64,
    /// Step standard deviation as a fraction of each box width.
    pub step_scale: f64,
    pub seed: u64,
    /// Seconds.
    pub time_limit: Option<f64>,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            t0: 1.0,
            alpha: 0.9,
            prob_const: 1.0,
            inner_iters: 100,
            epsilon: 1e-4,
            step_scale: 0.1,
            seed: 0,
            time_limit: None,
        }
    }
}

/// Simulated annealing from the box center with Gaussian moves clipped to
/// the box. Returns the best point visited. One trace point is recorded per
/// temperature.
pub fn simulated_annealing<F>(objective: F, lower: &[f64], upper: &[f64], config: &SaConfig) -> HeuristicResult
where
    F: Fn(&[f64]) -> f64,
{
    let start = Instant::now();
    let deadline = config.time_limit.map(|s| start + Duration::from_secs_f64(s));
    let n = lower.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let steps: Vec<Normal<f64>> = (0..n)
        .map(|i| {
            Normal::new(0.0, config.step_scale * (upper[i] - lower[i])).expect("finite step deviation")
        })
        .collect();

    let mut x: Vec<f64> = (0..n).map(|i| 0.5 * (lower[i] + upper[i])).collect();
    let mut fx = objective(&x);
    let mut best = (x.clone(), fx);
    let mut trace = Vec::new();
    let mut temp = config.t0;
    let mut level = 0;
    'cooling: while temp > config.epsilon {
        for _ in 0..config.inner_iters {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break 'cooling;
            }
            let mut y: Vec<f64> = (0..n).map(|i| x[i] + steps[i].sample(&mut rng)).collect();
            clip(&mut y, lower, upper);
            let fy = objective(&y);
            let delta = fy - fx;
            let u: f64 = rng.random();
            if delta <= 0.0 || u < (-delta / (config.prob_const * temp)).exp() {
                x = y;
                fx = fy;
                if fx < best.1 {
                    best = (x.clone(), fx);
                }
            }
        }
        trace.push(TracePoint {
            iter: level,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            value: best.1,
        });
        level += 1;
        temp *= config.alpha;
    }
    HeuristicResult {
        x: best.0,
        value: best.1,
        trace,
    }
}
