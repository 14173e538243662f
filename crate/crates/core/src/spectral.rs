//! Graph spectral covariance, the two MLRTG diagnostics and graph core
//! tensor projection.

use nalgebra::DMatrix;

use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;
use crate::tensor::{multilinear_transform, DenseTensor, ModeMatrix};

/// `Γ = P^T (Y Y^T) P` for one mode.
#[derive(Debug, Clone)]
pub struct GscMatrix {
    pub mode: usize,
    pub gamma: DMatrix<f64>,
    /// Number of eigenvectors used; equals the vertex count for a full basis.
    pub basis_size_used: usize,
    pub vertices: usize,
    /// `||C||_F^2` of the unprojected covariance.
    pub covariance_energy: f64,
}

impl GscMatrix {
    /// Wraps an already computed full-basis Γ.
    pub fn from_gamma(mode: usize, gamma: DMatrix<f64>) -> Result<Self> {
        if !gamma.is_square() {
            return Err(MlrtgError::Shape(format!("GSC must be square, got {:?}", gamma.shape())));
        }
        let n = gamma.nrows();
        let covariance_energy = gamma.norm_squared();
        Ok(Self { mode, gamma, basis_size_used: n, vertices: n, covariance_energy })
    }

    pub fn is_full_basis(&self) -> bool {
        self.basis_size_used == self.vertices
    }

    /// Total energy used as the denominator of both ratios: `||Γ||_F^2` for
    /// a full basis, `||C||_F^2` otherwise.
    fn total_energy(&self) -> f64 {
        if self.is_full_basis() {
            self.gamma.norm_squared()
        } else {
            self.covariance_energy
        }
    }
}

pub fn gsc(y_mode: &ModeMatrix, basis: &GraphBasis) -> Result<GscMatrix> {
    let y = &y_mode.matrix;
    if basis.n() != y.nrows() {
        return Err(MlrtgError::Shape(format!(
            "basis has {} vertices but mode-{} unfolding has {} rows",
            basis.n(),
            y_mode.mode,
            y.nrows()
        )));
    }
    let c = y * y.transpose();
    let a = basis.eigenvectors.tr_mul(y);
    let gamma = &a * a.transpose();
    Ok(GscMatrix {
        mode: y_mode.mode,
        gamma,
        basis_size_used: basis.k(),
        vertices: basis.n(),
        covariance_energy: c.norm_squared(),
    })
}

/// `||diag Γ||^2 / ||Γ||^2`; 1 for a perfectly stationary signal.
pub fn stationarity_ratio(g: &GscMatrix) -> Result<f64> {
    let total = g.total_energy();
    if total <= 0.0 {
        return Err(MlrtgError::ZeroInput("graph spectral covariance is zero"));
    }
    let diag: f64 = g.gamma.diagonal().iter().map(|v| v * v).sum();
    Ok(diag / total)
}

/// Share of the GSC energy in its leading `k x k` block.
pub fn energy_concentration(g: &GscMatrix, k: usize) -> Result<f64> {
    if k == 0 || k > g.basis_size_used {
        return Err(MlrtgError::Rank { requested: k, available: g.basis_size_used });
    }
    let total = g.total_energy();
    if total <= 0.0 {
        return Err(MlrtgError::ZeroInput("graph spectral covariance is zero"));
    }
    Ok(g.gamma.view((0, 0), (k, k)).norm_squared() / total)
}

/// Graph core tensor of `y` together with the bases that expand it.
#[derive(Debug, Clone)]
pub struct GctDecomposition {
    pub core: DenseTensor,
    pub bases: Vec<GraphBasis>,
    pub residual_norm: f64,
}

impl GctDecomposition {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        expand_core(&self.core, &self.bases)
    }
}

pub(crate) fn basis_matrices(bases: &[GraphBasis]) -> Vec<DMatrix<f64>> {
    bases.iter().map(|b| b.eigenvectors.clone()).collect()
}

fn check_bases(shape: &[usize], bases: &[GraphBasis]) -> Result<()> {
    if bases.len() != shape.len() {
        return Err(MlrtgError::Shape(format!("need {} bases, got {}", shape.len(), bases.len())));
    }
    for (mode, (b, &n)) in bases.iter().zip(shape).enumerate() {
        if b.n() != n {
            return Err(MlrtgError::Shape(format!("mode {mode}: basis has {} vertices, tensor has {n}", b.n())));
        }
    }
    Ok(())
}

/// `(P_1 ⊗ .. ⊗ P_d) vec(core)`.
pub fn expand_core(core: &DenseTensor, bases: &[GraphBasis]) -> Result<DenseTensor> {
    multilinear_transform(core, &basis_matrices(bases), false)
}

/// Projects `y` onto the bases: the core is `y ×_m P_m^T` over all modes.
pub fn project_gct(y: &DenseTensor, bases: &[GraphBasis]) -> Result<GctDecomposition> {
    check_bases(y.shape(), bases)?;
    let mats = basis_matrices(bases);
    let core = multilinear_transform(y, &mats, true)?;
    let recon = multilinear_transform(&core, &mats, false)?;
    let residual_norm = y.sub(&recon)?.frobenius_norm();
    Ok(GctDecomposition { core, bases: bases.to_vec(), residual_norm })
}

/// Energy concentration predicted from a known low/high-frequency split:
/// `||X||^4 / (||X||^4 + ||X̄||^4)`, where `X` is `y` projected on the
/// first `ranks[m]` eigenvectors of every mode and `X̄` on the complements.
/// `full_bases` must hold complete eigenbases.
pub fn split_concentration(y: &DenseTensor, full_bases: &[GraphBasis], ranks: &[usize]) -> Result<f64> {
    check_bases(y.shape(), full_bases)?;
    if ranks.len() != y.order() {
        return Err(MlrtgError::Shape(format!("need {} ranks, got {}", y.order(), ranks.len())));
    }
    let mut low = Vec::with_capacity(ranks.len());
    let mut high = Vec::with_capacity(ranks.len());
    for (b, &k) in full_bases.iter().zip(ranks) {
        if b.k() != b.n() {
            return Err(MlrtgError::Rank { requested: b.n(), available: b.k() });
        }
        if k == 0 || k >= b.n() {
            return Err(MlrtgError::Rank { requested: k, available: b.n() - 1 });
        }
        low.push(b.eigenvectors.columns(0, k).into_owned());
        high.push(b.eigenvectors.columns(k, b.n() - k).into_owned());
    }
    let x = multilinear_transform(y, &low, true)?.frobenius_norm().powi(4);
    let xbar = multilinear_transform(y, &high, true)?.frobenius_norm().powi(4);
    if x + xbar == 0.0 {
        return Err(MlrtgError::ZeroInput("tensor has no energy in either block"));
    }
    Ok(x / (x + xbar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_gamma_is_stationary() {
        let g = GscMatrix::from_gamma(0, DMatrix::from_diagonal_element(4, 4, 2.5)).unwrap();
        assert_eq!(stationarity_ratio(&g).unwrap(), 1.0);
    }

    #[test]
    fn all_ones_gamma() {
        let g = GscMatrix::from_gamma(0, DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert_eq!(stationarity_ratio(&g).unwrap(), 0.5);
        assert_eq!(energy_concentration(&g, 1).unwrap(), 0.25);
        assert_eq!(energy_concentration(&g, 2).unwrap(), 1.0);
    }

    #[test]
    fn zero_gamma_rejected() {
        let g = GscMatrix::from_gamma(0, DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(stationarity_ratio(&g), Err(MlrtgError::ZeroInput(_))));
        assert!(matches!(energy_concentration(&g, 1), Err(MlrtgError::ZeroInput(_))));
    }

    #[test]
    fn concentration_rank_out_of_range() {
        let g = GscMatrix::from_gamma(0, DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(energy_concentration(&g, 4), Err(MlrtgError::Rank { .. })));
        assert!(matches!(energy_concentration(&g, 0), Err(MlrtgError::Rank { .. })));
    }
}
