//! Convex quadratic penalties built from principal component analysis.
//!
//! The penalty of a point `x` is
//!
//! ```text
//! λ ‖(I - P) diag(σ)⁻¹ (x - μ)‖² + (target - Σ_{i ∈ I} x_i)²
//! ```
//!
//! where `P = ΦΦᵀ` projects onto the span of the leading loading vectors of
//! the standardized training data and the second (mixture) term is optional.

mod minimize;
mod pca;

pub use minimize::{min_convex_over_box, ConvexMin, MinimizerOptions};
pub use pca::{fit_pca, symmetric_eigen, PcaModel, SymmetricEigen};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖ΦᵀΦ - I‖_max` accepted for loading matrices.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Soft constraint pulling `Σ_{i ∈ indices} x_i` towards `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub indices: Vec<usize>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyModel {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    /// `k` loading columns of length `n`.
    loadings: Vec<Vec<f64>>,
    lambda: f64,
    mixture: Option<Mixture>,
}

impl PenaltyModel {
    pub fn new(
        mu: Vec<f64>,
        sigma: Vec<f64>,
        loadings: Vec<Vec<f64>>,
        lambda: f64,
        mixture: Option<Mixture>,
    ) -> Result<Self> {
        let n = mu.len();
        if sigma.len() != n {
            return Err(Error::Dimension(format!(
                "mean has {n} entries but sigma has {}",
                sigma.len()
            )));
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config(format!("sigma[{i}] must be positive and finite")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mean must be finite".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        if loadings.len() > n {
            return Err(Error::RankOutOfRange {
                k: loadings.len(),
                n,
            });
        }
        for (c, col) in loadings.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "loading column {c} has {} entries, expected {n}",
                    col.len()
                )));
            }
        }
        for a in 0..loadings.len() {
            for b in a..loadings.len() {
                let dot: f64 = loadings[a].iter().zip(&loadings[b]).map(|(p, q)| p * q).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                if (dot - expected).abs() > ORTHONORMALITY_TOL {
                    return Err(Error::Config(format!(
                        "loading columns {a} and {b} are not orthonormal (dot = {dot})"
                    )));
                }
            }
        }
        if let Some(m) = &mixture {
            if let Some(&i) = m.indices.iter().find(|&&i| i >= n) {
                return Err(Error::Dimension(format!(
                    "mixture index {i} out of range for {n} variables"
                )));
            }
            if !m.target.is_finite() {
                return Err(Error::Config("mixture target must be finite".into()));
            }
        }
        Ok(PenaltyModel {
            mu,
            sigma,
            loadings,
            lambda,
            mixture,
        })
    }

    /// The identically zero penalty on `n` variables.
    pub fn zero(n: usize) -> Self {
        PenaltyModel {
            mu: vec![0.0; n],
            sigma: vec![1.0; n],
            loadings: Vec::new(),
            lambda: 0.0,
            mixture: None,
        }
    }

    pub fn from_pca(pca: &PcaModel, lambda: f64, mixture: Option<Mixture>) -> Result<Self> {
        PenaltyModel::new(
            pca.mu.clone(),
            pca.sigma.clone(),
            pca.loadings.clone(),
            lambda,
            mixture,
        )
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn rank(&self) -> usize {
        self.loadings.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn loadings(&self) -> &[Vec<f64>] {
        &self.loadings
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mixture(&self) -> Option<&Mixture> {
        self.mixture.as_ref()
    }

    /// Same model with a different penalty weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut m = self.clone();
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        m.lambda = lambda;
        Ok(m)
    }

    /// True when the penalty is identically zero.
    pub fn is_zero(&self) -> bool {
        self.lambda == 0.0 && self.mixture.is_none()
    }

    /// `Pv` for a vector in standardized coordinates.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for col in &self.loadings {
            let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, a) in out.iter_mut().zip(col) {
                *o += c * a;
            }
        }
        out
    }

    /// The dense projection matrix `P = ΦΦᵀ`, row-major.
    pub fn projection_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut p = vec![vec![0.0; n]; n];
        for col in &self.loadings {
            for i in 0..n {
                for j in 0..n {
                    p[i][j] += col[i] * col[j];
                }
            }
        }
        p
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((x, m), s)| (x - m) / s)
            .collect();
        let pz = self.project(&z);
        z.iter().zip(&pz).map(|(a, b)| a - b).collect()
    }

    fn mixture_gap(&self, x: &[f64]) -> Option<(f64, &Mixture)> {
        self.mixture
            .as_ref()
            .map(|m| (m.target - m.indices.iter().map(|&i| x[i]).sum::<f64>(), m))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut value = 0.0;
        if self.lambda != 0.0 {
            value += self.lambda * self.residual(x).iter().map(|r| r * r).sum::<f64>();
        }
        if let Some((gap, _)) = self.mixture_gap(x) {
            value += gap * gap;
        }
        value
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        if self.lambda != 0.0 {
            // ∇ = 2λ D⁻¹ (I - P)ᵀ r with r = (I - P) D⁻¹ (x - μ)
            let r = self.residual(x);
            let pr = self.project(&r);
            for i in 0..g.len() {
                g[i] = 2.0 * self.lambda * (r[i] - pr[i]) / self.sigma[i];
            }
        }
        if let Some((gap, m)) = self.mixture_gap(x) {
            for &i in &m.indices {
                g[i] -= 2.0 * gap;
            }
        }
        g
    }

    /// Dense Hessian, row-major. Constant since the penalty is quadratic.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut h = vec![vec![0.0; n]; n];
        if self.lambda != 0.0 {
            // (I - P)ᵀ(I - P), kept general rather than assuming idempotence
            let p = self.projection_matrix();
            let m: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| f64::from(i == j) - p[i][j]).collect())
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let q: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
                    h[i][j] = 2.0 * self.lambda * q / (self.sigma[i] * self.sigma[j]);
                }
            }
        }
        if let Some(mix) = &self.mixture {
            for &i in &mix.indices {
                for &j in &mix.indices {
                    h[i][j] += 2.0;
                }
            }
        }
        h
    }

    /// Expanded form `xᵀAx + bᵀx + c` of the penalty.
    pub fn quadratic_form(&self) -> QuadraticForm {
        let n = self.n();
        let h = self.hessian();
        let a: Vec<Vec<f64>> = h.iter().map(|row| row.iter().map(|v| 0.5 * v).collect()).collect();
        // gradient at the origin is b
        let b = self.grad(&vec![0.0; n]);
        let c = self.eval(&vec![0.0; n]);
        QuadraticForm { a, b, c }
    }
}

/// `f(x) = xᵀAx + bᵀx + c` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.c;
        for (i, row) in self.a.iter().enumerate() {
            v += self.b[i] * x[i];
            v += x[i] * row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(lambda: f64) -> PenaltyModel {
        PenaltyModel::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![], lambda, None).unwrap()
    }

    #[test]
    fn zero_at_the_mean() {
        let m = PenaltyModel::new(
            vec![1.0, -2.0],
            vec![0.5, 3.0],
            vec![vec![0.6, 0.8]],
            7.0,
            None,
        )
        .unwrap();
        assert_eq!(m.eval(&[1.0, -2.0]), 0.0);
        assert_eq!(m.grad(&[1.0, -2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn separable_hand_value() {
        assert_eq!(separable(2.0).eval(&[1.0, 1.0]), 4.0);
    }

    #[test]
    fn mixture_on_target_adds_nothing() {
        let m = PenaltyModel::new(
            vec![0.0; 3],
            vec![1.0; 3],
            vec![],
            0.0,
            Some(Mixture {
                indices: vec![0, 2],
                target: 100.0,
            }),
        )
        .unwrap();
        assert_eq!(m.eval(&[40.0, 5.0, 60.0]), 0.0);
        assert_eq!(m.eval(&[40.0, 5.0, 50.0]), 100.0);
        // -2 (target - sum) on the mixture coordinates only
        assert_eq!(m.grad(&[40.0, 5.0, 50.0]), vec![-20.0, 0.0, -20.0]);
    }

    #[test]
    fn validation_errors() {
        assert!(PenaltyModel::new(vec![0.0], vec![0.0], vec![], 1.0, None).is_err());
        assert!(PenaltyModel::new(vec![0.0], vec![1.0], vec![], -1.0, None).is_err());
        assert!(PenaltyModel::new(vec![0.0; 2], vec![1.0; 2], vec![vec![1.0, 1.0]], 1.0, None).is_err());
        assert!(PenaltyModel::new(
            vec![0.0; 2],
            vec![1.0; 2],
            vec![],
            1.0,
            Some(Mixture {
                indices: vec![2],
                target: 1.0
            })
        )
        .is_err());
    }

    #[test]
    fn quadratic_form_agrees_with_eval() {
        let m = PenaltyModel::new(
            vec![1.0, 2.0, 3.0],
            vec![0.5, 2.0, 1.5],
            vec![vec![0.6, 0.0, 0.8]],
            3.0,
            Some(Mixture {
                indices: vec![1, 2],
                target: 4.0,
            }),
        )
        .unwrap();
        let q = m.quadratic_form();
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5], [3.0, 3.0, 3.0]] {
            assert!((q.eval(&x) - m.eval(&x)).abs() < 1e-9);
        }
    }
}
