//! Box-constrained minimization of the penalty.
//!
//! Projected-gradient steps with Armijo backtracking along the projection arc
//! identify the active face; conjugate-gradient steps then solve the
//! quadratic on that face until a bound is hit or the face is optimal. The
//! returned lower bound is the value minus the larger of the configured
//! back-off and the linearization gap `max_{y in box} ∇f(x)ᵀ(x - y)`, which
//! by convexity is a certified bound on the distance to the optimum.

use crate::error::{Error, Result};

use super::PenaltyModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions {
    /// Target norm of the projected gradient.
    pub stationarity_tol: f64,
    /// Minimum amount subtracted from the value to form the lower bound.
    pub back_off: f64,
    pub max_iterations: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        MinimizerOptions {
            stationarity_tol: 1e-7,
            back_off: 1e-8,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexMin {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified lower bound on the box minimum.
    pub lower_bound: f64,
    /// Norm of the projected gradient at `x`.
    pub stationarity: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn projected_gradient(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            if (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0) {
                0.0
            } else {
                g[i]
            }
        })
        .collect()
}

fn linearization_gap(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            if g[i] > 0.0 {
                g[i] * (x[i] - lower[i])
            } else {
                g[i] * (x[i] - upper[i])
            }
        })
        .sum::<f64>()
        .max(0.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn mat_vec(h: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    h.iter().map(|row| dot(row, v)).collect()
}

/// Minimizes the penalty over the closed box `[lower, upper]`.
pub fn min_convex_over_box(
    model: &PenaltyModel,
    lower: &[f64],
    upper: &[f64],
    options: &MinimizerOptions,
) -> Result<ConvexMin> {
    let n = model.n();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension(format!(
            "box has {} / {} bounds for {n} variables",
            lower.len(),
            upper.len()
        )));
    }
    for i in 0..n {
        if !(lower[i].is_finite() && upper[i].is_finite()) {
            return Err(Error::Config(format!("box bound {i} is not finite")));
        }
        if lower[i] > upper[i] {
            return Err(Error::InvalidBounds {
                var: i,
                lower: lower[i],
                upper: upper[i],
            });
        }
    }

    let mut x: Vec<f64> = model.mu().to_vec();
    project(&mut x, lower, upper);
    if model.is_zero() {
        return Ok(ConvexMin {
            x,
            value: 0.0,
            lower_bound: 0.0,
            stationarity: 0.0,
            iterations: 0,
        });
    }

    let h = model.hessian();
    let mut fx = model.eval(&x);
    let mut iterations = 0;
    let mut stationarity;
    loop {
        let g = model.grad(&x);
        let pg = projected_gradient(&x, &g, lower, upper);
        stationarity = norm(&pg);
        if stationarity <= options.stationarity_tol || iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        // projected gradient step
        let hpg = mat_vec(&h, &pg);
        let curvature = dot(&pg, &hpg);
        let mut step = if curvature > 0.0 {
            dot(&pg, &pg) / curvature
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..80 {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x - step * g).collect();
            project(&mut trial, lower, upper);
            let ft = model.eval(&trial);
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(g, (t, x))| g * (t - x))
                .sum();
            if ft <= fx + 1e-4 * decrease {
                accepted = ft < fx || trial != x;
                x = trial;
                fx = ft;
                break;
            }
            step *= 0.5;
        }

        // conjugate gradients on the free face
        let free: Vec<usize> = (0..n)
            .filter(|&i| x[i] > lower[i] && x[i] < upper[i])
            .collect();
        if !free.is_empty() {
            let g = model.grad(&x);
            let mut r: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
            let mut p = r.clone();
            let mut rr = dot(&r, &r);
            let floor = (options.stationarity_tol * 1e-3).powi(2);
            for _ in 0..2 * free.len() + 2 {
                if rr <= floor {
                    break;
                }
                let mut full = vec![0.0; n];
                for (k, &i) in free.iter().enumerate() {
                    full[i] = p[k];
                }
                let hp_full = mat_vec(&h, &full);
                let hp: Vec<f64> = free.iter().map(|&i| hp_full[i]).collect();
                let curv = dot(&p, &hp);
                if curv <= 0.0 {
                    break;
                }
                let alpha = rr / curv;
                let mut to_bound = f64::INFINITY;
                for (k, &i) in free.iter().enumerate() {
                    if p[k] > 0.0 {
                        to_bound = to_bound.min((upper[i] - x[i]) / p[k]);
                    } else if p[k] < 0.0 {
                        to_bound = to_bound.min((lower[i] - x[i]) / p[k]);
                    }
                }
                let hit = alpha >= to_bound;
                let a = alpha.min(to_bound);
                let mut trial = x.clone();
                for (k, &i) in free.iter().enumerate() {
                    trial[i] += a * p[k];
                }
                project(&mut trial, lower, upper);
                let ft = model.eval(&trial);
                if ft > fx {
                    break;
                }
                x = trial;
                fx = ft;
                if hit {
                    break;
                }
                for k in 0..r.len() {
                    r[k] -= alpha * hp[k];
                }
                let rr_new = dot(&r, &r);
                let beta = rr_new / rr;
                rr = rr_new;
                for k in 0..p.len() {
                    p[k] = r[k] + beta * p[k];
                }
                accepted = true;
            }
        }
        if !accepted {
            // no progress possible at working precision
            let g = model.grad(&x);
            stationarity = norm(&projected_gradient(&x, &g, lower, upper));
            break;
        }
    }

    let value = model.eval(&x);
    let g = model.grad(&x);
    let gap = linearization_gap(&x, &g, lower, upper);
    Ok(ConvexMin {
        lower_bound: value - gap.max(options.back_off),
        x,
        value,
        stationarity,
        iterations,
    })
}
