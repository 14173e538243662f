use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;
use crate::linalg::{leading_left_singular_vectors, normalize_column_signs};
use crate::spectral::project_gct;
use crate::tensor::{matricize, mode_product_transposed, multilinear_transform, DenseTensor};

use super::svt::WeightVector;
use super::{gctp, SolverOptions, SolverReport};

const MAX_SWEEPS: usize = 50;
const FIT_TOL: f64 = 1e-8;

/// Tucker factors with orthonormal columns and the matching core.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub factors: Vec<DMatrix<f64>>,
    pub core: DenseTensor,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        multilinear_transform(&self.core, &self.factors, false)
    }
}

fn check_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(MlrtgError::Shape(format!("need {} ranks, got {}", shape.len(), ranks.len())));
    }
    for (mode, (&r, &n)) in ranks.iter().zip(shape).enumerate() {
        let others: usize = ranks.iter().enumerate().filter(|&(m, _)| m != mode).map(|(_, &r)| r).product();
        if r == 0 || r > n || r > others {
            return Err(MlrtgError::Rank { requested: r, available: n.min(others) });
        }
    }
    Ok(())
}

/// `y` multiplied by `U_ν^T` along every mode except `skip`.
fn project_except(y: &DenseTensor, factors: &[DMatrix<f64>], skip: usize) -> Result<DenseTensor> {
    let mut t = y.clone();
    for (mode, u) in factors.iter().enumerate() {
        if mode != skip {
            t = mode_product_transposed(&t, mode, u)?;
        }
    }
    Ok(t)
}

/// Truncated HOSVD followed by HOOI sweeps until the fit
/// `||core|| / ||y||` changes by less than 1e-8 (at most 50 sweeps).
/// The objective trace records the squared residual `||y||^2 − ||core||^2`.
pub fn mlsvd(y: &DenseTensor, ranks: &[usize]) -> Result<(SvdFactors, SolverReport)> {
    check_ranks(y.shape(), ranks)?;
    if !y.is_finite() {
        return Err(MlrtgError::Numeric("input tensor contains non-finite entries".into()));
    }
    let start = Instant::now();
    let norm2 = y.frobenius_norm().powi(2);
    let mut factors = Vec::with_capacity(ranks.len());
    for (mode, &r) in ranks.iter().enumerate() {
        factors.push(leading_left_singular_vectors(&matricize(y, mode)?.matrix, r)?);
    }
    let mut core = multilinear_transform(y, &factors, true)?;
    let residual = |core: &DenseTensor| (norm2 - core.frobenius_norm().powi(2)).max(0.0);
    let mut trace = vec![residual(&core)];
    let mut times = vec![start.elapsed().as_secs_f64()];
    let mut fit = if norm2 > 0.0 { core.frobenius_norm() / norm2.sqrt() } else { 1.0 };
    let mut converged = norm2 == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        let it = Instant::now();
        for mode in 0..ranks.len() {
            let w = project_except(y, &factors, mode)?;
            factors[mode] = leading_left_singular_vectors(&matricize(&w, mode)?.matrix, ranks[mode])?;
        }
        core = multilinear_transform(y, &factors, true)?;
        sweeps += 1;
        trace.push(residual(&core));
        times.push(it.elapsed().as_secs_f64());
        let new_fit = core.frobenius_norm() / norm2.sqrt();
        converged = (new_fit - fit).abs() < FIT_TOL;
        fit = new_fit;
    }
    for u in &mut factors {
        normalize_column_signs(u);
    }
    let core = multilinear_transform(y, &factors, true)?;
    let report = SolverReport {
        iterations: sweeps,
        objective_trace: trace,
        converged,
        tolerance_used: FIT_TOL,
        wall_time: start.elapsed(),
        iteration_times: times,
    };
    Ok((SvdFactors { factors, core }, report))
}

/// Graph multilinear SVD: project onto the bases, denoise the core with
/// GCTP, take its full-rank MLSVD `(A_μ, R)` and lift `V_μ = P_μ A_μ`.
pub fn gmlsvd(
    y: &DenseTensor,
    bases: &[GraphBasis],
    weights: &[WeightVector],
    opts: &SolverOptions,
) -> Result<(SvdFactors, SolverReport)> {
    let x_hat = project_gct(y, bases)?.core;
    let (x, report) = gctp(&x_hat, weights, opts)?;
    let ranks = x.shape().to_vec();
    let (inner, _) = mlsvd(&x, &ranks)?;
    let mut factors: Vec<DMatrix<f64>> = bases.iter().zip(&inner.factors).map(|(b, a)| &b.eigenvectors * a).collect();
    let mut a = inner.factors;
    for (v, a) in factors.iter_mut().zip(a.iter_mut()) {
        for (j, flip) in normalize_column_signs(v).into_iter().enumerate() {
            if flip {
                a.column_mut(j).neg_mut();
            }
        }
    }
    let core = multilinear_transform(&x, &a, true)?;
    Ok((SvdFactors { factors, core }, report))
}
