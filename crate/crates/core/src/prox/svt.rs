use nalgebra::{DMatrix, DVector};

use crate::error::{MlrtgError, Result};
use crate::linalg::{ensure_finite, singular_values, thin_svd};

/// Per-singular-value thresholds `γ · λ_i^α` built from ascending Laplacian
/// eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
}

impl WeightVector {
    pub fn from_eigenvalues(eigenvalues: &[f64], alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(MlrtgError::Numeric(format!("alpha must be a finite value >= 1, got {alpha}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(MlrtgError::Numeric(format!("gamma must be finite and nonnegative, got {gamma}")));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(MlrtgError::Numeric("eigenvalues must be ascending".into()));
        }
        let values = eigenvalues.iter().map(|&l| gamma * l.max(0.0).powf(alpha)).collect();
        Ok(Self { values, alpha, gamma })
    }

    /// Raw thresholds, for tests and callers that bypass eigenvalues.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, alpha: 1.0, gamma: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Vec<f64> {
        self.values.iter().map(|v| v * s).collect()
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `A diag(max(σ_i - τ_i, 0)) B^T` for the SVD `m = A diag(σ) B^T`, σ
/// descending. The i-th largest singular value meets the i-th threshold, so
/// ascending thresholds shrink the small (noisy) singular values hardest.
/// Thresholds beyond `min(rows, cols)` are ignored.
pub fn weighted_svt(m: &DMatrix<f64>, thresholds: impl AsRef<[f64]>) -> Result<DMatrix<f64>> {
    let tau = thresholds.as_ref();
    let p = m.nrows().min(m.ncols());
    if tau.len() < p {
        return Err(MlrtgError::Shape(format!("{} thresholds for {p} singular values", tau.len())));
    }
    ensure_finite(m, "matrix")?;
    if p == 0 || tau[..p].iter().all(|&t| t == 0.0) {
        return Ok(m.clone());
    }
    let svd = thin_svd(m)?;
    let shrunk = DVector::from_fn(p, |i, _| (svd.singular_values[i] - tau[i]).max(0.0));
    let keep = shrunk.iter().take_while(|&&s| s > 0.0).count();
    if keep == 0 {
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    // shrunk values stay sorted only for nondecreasing τ; keep all nonzeros otherwise
    let (u, s, vt) = if shrunk.iter().skip(keep).all(|&s| s == 0.0) {
        (svd.u.columns(0, keep).into_owned(), shrunk.rows(0, keep).into_owned(), svd.v_t.rows(0, keep).into_owned())
    } else {
        (svd.u, shrunk, svd.v_t)
    };
    let mut us = u;
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= s[j];
    }
    Ok(us * vt)
}

/// `Σ_i τ_i σ_i(m)` with σ descending.
pub fn weighted_nuclear_norm(m: &DMatrix<f64>, thresholds: impl AsRef<[f64]>) -> Result<f64> {
    let tau = thresholds.as_ref();
    let s = singular_values(m)?;
    Ok(s.iter().zip(tau).map(|(s, t)| s * t).sum())
}
