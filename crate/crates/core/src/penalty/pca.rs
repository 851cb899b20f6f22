use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix. `vectors[c]` is the unit
/// eigenvector for `values[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Eigenpairs of a dense symmetric matrix (row-major), in non-increasing
/// eigenvalue order; each vector is signed so that its largest-magnitude
/// entry is positive.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> SymmetricEigen {
    let n = matrix.len();
    let eig = nalgebra::DMatrix::from_fn(n, n, |r, c| matrix[r][c]).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut col: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let lead = col.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            if lead < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Standardization and leading loadings of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `k` orthonormal columns, leading first.
    pub loadings: Vec<Vec<f64>>,
    /// All eigenvalues of the correlation matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Maps a point to standardized coordinates.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// Fits `k` principal loadings to `data` (rows are observations).
///
/// Columns are standardized by their sample mean and sample standard
/// deviation (`p - 1` denominator); the loadings are the leading eigenvectors
/// of the resulting correlation matrix.
pub fn fit_pca(data: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let p = data.len();
    if p < 2 {
        return Err(Error::Dimension(format!("need at least 2 rows, got {p}")));
    }
    let n = data[0].len();
    if let Some(r) = data.iter().position(|row| row.len() != n) {
        return Err(Error::Dimension(format!(
            "row {r} has {} columns, expected {n}",
            data[r].len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, n });
    }
    let mu: Vec<f64> = (0..n)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / p as f64)
        .collect();
    let sigma: Vec<f64> = (0..n)
        .map(|j| {
            let ss: f64 = data.iter().map(|r| (r[j] - mu[j]).powi(2)).sum();
            (ss / (p - 1) as f64).sqrt()
        })
        .collect();
    if let Some(column) = sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::ZeroVariance { column });
    }
    let z: Vec<Vec<f64>> = data
        .iter()
        .map(|r| (0..n).map(|j| (r[j] - mu[j]) / sigma[j]).collect())
        .collect();
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = z.iter().map(|r| r[i] * r[j]).sum::<f64>() / (p - 1) as f64;
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }
    let eig = symmetric_eigen(&corr);
    Ok(PcaModel {
        mu,
        sigma,
        loadings: eig.vectors.into_iter().take(k).collect(),
        eigenvalues: eig.values,
    })
}
