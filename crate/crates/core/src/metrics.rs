//! Evaluation measures: normalized reconstruction error, singular value
//! error, principal angles and per-vector alignment.

use nalgebra::{DMatrix, DVector};

use crate::error::{MlrtgError, Result};
use crate::linalg::{orthonormality_deviation, singular_values};
use crate::tensor::{matricize, DenseTensor};

pub const ORTHONORMALITY_TOL: f64 = 1e-6;

/// `||y − y*||_F / ||y*||_F`.
pub fn recon_error(y: &DenseTensor, y_star: &DenseTensor) -> Result<f64> {
    let reference = y_star.frobenius_norm();
    if reference == 0.0 {
        return Err(MlrtgError::ZeroInput("reference tensor is zero"));
    }
    Ok(y.sub(y_star)?.frobenius_norm() / reference)
}

/// `||σ_{1:k*} − σ*_{1:k*}|| / ||σ*_{1:k*}||` over the mode unfolding
/// singular values (descending).
pub fn singular_value_error(y: &DenseTensor, y_star: &DenseTensor, mode: usize, k_star: usize) -> Result<f64> {
    if y.shape() != y_star.shape() {
        return Err(MlrtgError::Shape(format!("shapes {:?} and {:?} differ", y.shape(), y_star.shape())));
    }
    let s = singular_values(&matricize(y, mode)?.matrix)?;
    let s_star = singular_values(&matricize(y_star, mode)?.matrix)?;
    if k_star == 0 || k_star > s.len() {
        return Err(MlrtgError::Rank { requested: k_star, available: s.len() });
    }
    let a = s.rows(0, k_star);
    let b = s_star.rows(0, k_star);
    let reference = b.norm();
    if reference == 0.0 {
        return Err(MlrtgError::ZeroInput("reference singular values are zero"));
    }
    Ok((a - b).norm() / reference)
}

fn cross_gram(v: &DMatrix<f64>, u: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    if v.nrows() != u.nrows() {
        return Err(MlrtgError::Shape(format!("factors have {} and {} rows", v.nrows(), u.nrows())));
    }
    let available = v.ncols().min(u.ncols());
    if count == 0 || count > available {
        return Err(MlrtgError::Rank { requested: count, available });
    }
    let v = v.columns(0, count).into_owned();
    let u = u.columns(0, count).into_owned();
    for m in [&v, &u] {
        let deviation = orthonormality_deviation(m);
        if !(deviation <= ORTHONORMALITY_TOL) {
            return Err(MlrtgError::NotOrthonormal { deviation });
        }
    }
    Ok(v.tr_mul(&u))
}

/// Largest principal angle (radians) between the spans of the first
/// `count` columns. Small angles come from the sine, `||U − V V^T U||_2`,
/// since `arccos` of the smallest cosine loses half the digits near zero.
pub fn subspace_angle(v: &DMatrix<f64>, u: &DMatrix<f64>, count: usize) -> Result<f64> {
    let g = cross_gram(v, u, count)?;
    let s = singular_values(&g)?;
    let smallest = s.iter().copied().fold(f64::INFINITY, f64::min);
    let v = v.columns(0, count);
    let u = u.columns(0, count);
    let rest = u - v * &g;
    let sine = singular_values(&rest)?.iter().copied().fold(0.0, f64::max);
    if sine * sine < 0.5 {
        Ok(sine.min(1.0).asin())
    } else {
        Ok(smallest.clamp(0.0, 1.0).acos())
    }
}

/// `|v_i^T u_i|` for the first `count` column pairs.
pub fn alignment_diag(v: &DMatrix<f64>, u: &DMatrix<f64>, count: usize) -> Result<DVector<f64>> {
    let g = cross_gram(v, u, count)?;
    Ok(g.diagonal().map(f64::abs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recon_error_examples() {
        let y = DenseTensor::from_fn(vec![2, 3], |i| (i[0] + i[1]) as f64 + 1.0).unwrap();
        assert_eq!(recon_error(&y, &y).unwrap(), 0.0);
        assert_eq!(recon_error(&y.scale(2.0), &y).unwrap(), 1.0);
        let z = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert!(matches!(recon_error(&y, &z), Err(MlrtgError::ZeroInput(_))));
    }

    #[test]
    fn singular_value_error_scaling() {
        let y = DenseTensor::from_fn(vec![3, 4], |i| ((i[0] * 4 + i[1]) % 5) as f64).unwrap();
        assert_eq!(singular_value_error(&y, &y, 0, 3).unwrap(), 0.0);
        assert!((singular_value_error(&y.scale(0.25), &y, 1, 2).unwrap() - 0.75).abs() < 1e-14);
        assert!(matches!(singular_value_error(&y, &y, 0, 4), Err(MlrtgError::Rank { .. })));
    }

    #[test]
    fn angles_of_identical_and_orthogonal() {
        let e = DMatrix::<f64>::identity(4, 4);
        let a = e.columns(0, 2).into_owned();
        let b = e.columns(2, 2).into_owned();
        assert_eq!(subspace_angle(&a, &a, 2).unwrap(), 0.0);
        assert!((subspace_angle(&a, &b, 2).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(alignment_diag(&a, &(-&a), 2).unwrap().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn planted_rotation() {
        let theta: f64 = 0.3;
        let e = DMatrix::<f64>::identity(5, 5);
        let u = e.columns(0, 2).into_owned();
        // rotate the second column out of the span, into e_3
        let mut v = u.clone();
        v[(1, 1)] = theta.cos();
        v[(2, 1)] = theta.sin();
        assert!((subspace_angle(&v, &u, 2).unwrap() - theta).abs() < 1e-12);
    }

    #[test]
    fn not_orthonormal_rejected() {
        let m = DMatrix::from_element(3, 2, 1.0);
        let e = DMatrix::<f64>::identity(3, 2);
        assert!(matches!(subspace_angle(&m, &e, 2), Err(MlrtgError::NotOrthonormal { .. })));
    }
}
