//! Seeded random instances for tests, fixtures and benchmarks.
//!
//! Leaf values are multiples of 1/8 in a small range, so any sum of a few
//! thousand of them is exact in `f64` and solvers can be compared with `==`.
//! Thresholds are drawn from a per-variable pool of evenly spaced values, so
//! trees share split values the way trained ensembles do. A split is only
//! drawn from thresholds strictly inside the interval its path leaves open,
//! so no branch is dead.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Tree, TreeEnsemble};
use crate::error::Result;
use crate::penalty::{fit_pca, Mixture, PenaltyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub trees: usize,
    /// Maximum depth; a path stops early when no threshold is left.
    pub depth: usize,
    /// Thresholds available per variable.
    pub pool: usize,
    /// Probability that a node above the maximum depth becomes a leaf.
    pub leaf_prob: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            n: 2,
            trees: 5,
            depth: 3,
            pool: 4,
            leaf_prob: 0.0,
            lower: 0.0,
            upper: 10.0,
            seed: 0,
        }
    }
}

/// A leaf value in `[-4, 4]` with step 1/8.
fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-32i32..=32) as f64 / 8.0
}

fn grow(
    rng: &mut ChaCha8Rng,
    pools: &[Vec<f64>],
    open: &mut [(f64, f64)],
    depth: usize,
    leaf_prob: f64,
    root: bool,
) -> Tree {
    let stop = depth == 0 || (!root && rng.random::<f64>() < leaf_prob);
    let choices: Vec<(usize, f64)> = if stop {
        Vec::new()
    } else {
        pools
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                let (lo, hi) = open[i];
                p.iter().filter(move |&&v| lo < v && v < hi).map(move |&v| (i, v))
            })
            .collect()
    };
    if choices.is_empty() {
        return Tree::leaf(dyadic(rng));
    }
    let (var, value) = choices[rng.random_range(0..choices.len())];
    let saved = open[var];
    open[var].1 = value;
    let left = grow(rng, pools, open, depth - 1, leaf_prob, false);
    open[var] = (value, saved.1);
    let right = grow(rng, pools, open, depth - 1, leaf_prob, false);
    open[var] = saved;
    Tree::split(var, value, left, right)
}

/// A random ensemble following `spec`.
pub fn random_ensemble(spec: &EnsembleSpec) -> TreeEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.upper - spec.lower;
    let pools: Vec<Vec<f64>> = (0..spec.n)
        .map(|_| {
            // evenly spaced candidates, a random subset of `pool` of them
            let slots = 4 * spec.pool.max(1);
            let mut picks: Vec<usize> = (1..slots).collect();
            for k in 0..picks.len() {
                let j = rng.random_range(k..picks.len());
                picks.swap(k, j);
            }
            picks.truncate(spec.pool);
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|s| spec.lower + width * s as f64 / slots as f64)
                .collect()
        })
        .collect();
    let trees = (0..spec.trees)
        .map(|_| {
            let mut open = vec![(spec.lower, spec.upper); spec.n];
            grow(&mut rng, &pools, &mut open, spec.depth, spec.leaf_prob, true)
        })
        .collect();
    TreeEnsemble::new(spec.n, vec![spec.lower; spec.n], vec![spec.upper; spec.n], trees)
        .expect("generated ensembles are valid")
}

/// `rows` observations scattered around a random line through the box
/// center, with a little isotropic noise.
pub fn random_training_data(n: usize, rows: usize, lower: f64, upper: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..rows)
        .map(|_| {
            let s: f64 = rng.random_range(-0.8..0.8);
            (0..n)
                .map(|i| {
                    let noise: f64 = rng.random_range(-0.1..0.1);
                    (center + half * (s * dir[i] + noise)).clamp(lower, upper)
                })
                .collect()
        })
        .collect()
}

/// A PCA penalty of rank `k` fitted to [`random_training_data`].
pub fn random_penalty(n: usize, k: usize, lambda: f64, lower: f64, upper: f64, seed: u64) -> Result<PenaltyModel> {
    let data = random_training_data(n, 40, lower, upper, seed);
    let pca = fit_pca(&data, k)?;
    PenaltyModel::from_pca(&pca, lambda, None::<Mixture>)
}
