//! Thin wrappers over nalgebra's dense decompositions with the ordering and
//! sign conventions the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{MlrtgError, Result};

const EPS: f64 = f64::EPSILON;
const MAX_ITER: usize = 0; // 0 = nalgebra's unbounded iteration

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MlrtgError::Numeric(format!("{what} contains non-finite entries")))
    }
}

/// Thin SVD with singular values sorted in descending order.
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    ensure_finite(m, "matrix")?;
    let svd = SVD::try_new(m.clone(), true, true, EPS, MAX_ITER)
        .ok_or_else(|| MlrtgError::Numeric("SVD failed to converge".into()))?;
    Ok(ThinSvd {
        u: svd.u.expect("u requested"),
        singular_values: svd.singular_values,
        v_t: svd.v_t.expect("v_t requested"),
    })
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    ensure_finite(m, "matrix")?;
    let svd = SVD::try_new(m.clone(), false, false, EPS, MAX_ITER)
        .ok_or_else(|| MlrtgError::Numeric("SVD failed to converge".into()))?;
    Ok(svd.singular_values)
}

/// The `r` leading left singular vectors of `m`.
pub fn leading_left_singular_vectors(m: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    ensure_finite(m, "matrix")?;
    let svd = SVD::try_new(m.clone(), true, false, EPS, MAX_ITER)
        .ok_or_else(|| MlrtgError::Numeric("SVD failed to converge".into()))?;
    let u = svd.u.expect("u requested");
    if r > u.ncols() {
        return Err(MlrtgError::Rank { requested: r, available: u.ncols() });
    }
    Ok(u.columns(0, r).into_owned())
}

/// Best rank-`r` approximation of `m`.
pub fn truncated_svd(m: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let svd = thin_svd(m)?;
    if r > svd.singular_values.len() {
        return Err(MlrtgError::Rank { requested: r, available: svd.singular_values.len() });
    }
    let s = DMatrix::from_diagonal(&svd.singular_values.rows(0, r).into_owned());
    Ok(svd.u.columns(0, r) * s * svd.v_t.rows(0, r))
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
pub fn symmetric_eigen_ascending(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    ensure_finite(m, "matrix")?;
    let eig = SymmetricEigen::try_new(m.clone(), EPS, MAX_ITER)
        .ok_or_else(|| MlrtgError::Numeric("symmetric eigensolver failed to converge".into()))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Flips columns so that each column's largest-magnitude entry is positive
/// (lowest index wins ties). Returns which columns were flipped.
pub fn normalize_column_signs(m: &mut DMatrix<f64>) -> Vec<bool> {
    let mut flipped = Vec::with_capacity(m.ncols());
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let flip = col.nrows() > 0 && col[best] < 0.0;
        if flip {
            col.neg_mut();
        }
        flipped.push(flip);
    }
    flipped
}

/// `max |M^T M - I|` over all entries.
pub fn orthonormality_deviation(m: &DMatrix<f64>) -> f64 {
    let g = m.tr_mul(m);
    (g - DMatrix::identity(m.ncols(), m.ncols())).amax()
}
