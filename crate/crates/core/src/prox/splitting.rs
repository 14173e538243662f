//! Parallel proximal splitting over `d + 1` functions: a data term
//! `f0(L x)` and one weighted nuclear norm per mode of the core tensor `x`.
//!
//! `L` has orthonormal columns (`L^T L = I`), so with equal weights
//! `ω = 1/(d+1)` the metric `Σ ω_i L_i^T L_i` is the identity and the
//! iteration needs no inner solve. With step `τ` and relaxation `β`:
//!
//! ```text
//! p_0 = prox_{τ f0 / ω}(z_0)              (data space)
//! p_i = prox_{τ f_i / ω}(z_i)             (core space, weighted SVT)
//! c   = ω (L^T p_0 + Σ p_i)
//! z_0 ← z_0 + β (L(2c − x) − p_0)
//! z_i ← z_i + β (2c − x − p_i)
//! x   ← x + β (c − x)
//! ```
//!
//! GCTP uses `L = I`. TRPCAG uses `L = P` (expansion through the bases)
//! with `z_0` starting at `y` and every `z_i` at `P^T y`.

use std::time::Instant;

use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;
use crate::spectral::{basis_matrices, project_gct};
use crate::tensor::{fold, matricize, multilinear_transform, DenseTensor, ModeMatrix};

use super::svt::{weighted_nuclear_norm, weighted_svt, WeightVector};
use super::{converged, SolverOptions, SolverReport};

fn check_weights(shape: &[usize], weights: &[WeightVector]) -> Result<()> {
    if weights.len() != shape.len() {
        return Err(MlrtgError::Shape(format!("need {} weight vectors, got {}", shape.len(), weights.len())));
    }
    let total: usize = shape.iter().product();
    for (mode, (w, &n)) in weights.iter().zip(shape).enumerate() {
        let p = n.min(total / n.max(1));
        if w.len() < p {
            return Err(MlrtgError::Shape(format!("mode {mode}: {} weights for {p} singular values", w.len())));
        }
    }
    Ok(())
}

fn regularizer(x: &DenseTensor, weights: &[WeightVector]) -> Result<f64> {
    let mut total = 0.0;
    for (mode, w) in weights.iter().enumerate() {
        total += weighted_nuclear_norm(&matricize(x, mode)?.matrix, w)?;
    }
    Ok(total)
}

/// The data term `f0(L x)` of a splitting problem.
struct DataTerm<F, A, P> {
    z0: DenseTensor,
    forward: F,
    adjoint: A,
    prox: P,
}

fn ppxa<F, A, P>(
    x0: &DenseTensor,
    data: DataTerm<F, A, P>,
    weights: &[WeightVector],
    opts: &SolverOptions,
    tau: f64,
    objective: impl Fn(&DenseTensor) -> Result<f64>,
) -> Result<(DenseTensor, SolverReport)>
where
    F: Fn(&DenseTensor) -> Result<DenseTensor>,
    A: Fn(&DenseTensor) -> Result<DenseTensor>,
    P: Fn(&DenseTensor, f64) -> Result<DenseTensor>,
{
    opts.validate()?;
    let start = Instant::now();
    let d = x0.order();
    let omega = 1.0 / (d + 1) as f64;
    let t = tau / omega;
    let beta = opts.beta;
    let thresholds: Vec<Vec<f64>> = weights.iter().map(|w| w.scaled(t)).collect();

    let mut x = x0.clone();
    let mut z0 = data.z0;
    let mut z = vec![x0.clone(); d];
    let mut trace = vec![objective(&x)?];
    let mut times = vec![0.0];
    let mut done = false;
    for _ in 0..opts.max_iters {
        let it = Instant::now();
        let p0 = (data.prox)(&z0, t)?;
        let mut c = (data.adjoint)(&p0)?.scale(omega);
        let mut p = Vec::with_capacity(d);
        for (mode, zi) in z.iter().enumerate() {
            let m = matricize(zi, mode)?;
            let shrunk = weighted_svt(&m.matrix, &thresholds[mode])?;
            let pi = fold(&ModeMatrix { mode, matrix: shrunk }, x.shape())?;
            c.axpy(omega, &pi)?;
            p.push(pi);
        }
        let reflected = c.zip_map(&x, |cv, xv| 2.0 * cv - xv)?;
        let lifted = (data.forward)(&reflected)?;
        for ((zv, &lv), &pv) in z0.data_mut().iter_mut().zip(lifted.data()).zip(p0.data()) {
            *zv += beta * (lv - pv);
        }
        for (zi, pi) in z.iter_mut().zip(&p) {
            for ((zv, &rv), &pv) in zi.data_mut().iter_mut().zip(reflected.data()).zip(pi.data()) {
                *zv += beta * (rv - pv);
            }
        }
        for (xv, &cv) in x.data_mut().iter_mut().zip(c.data()) {
            *xv += beta * (cv - *xv);
        }
        let obj = objective(&x)?;
        if !obj.is_finite() {
            return Err(MlrtgError::Numeric("objective became non-finite".into()));
        }
        trace.push(obj);
        times.push(it.elapsed().as_secs_f64());
        if converged(&trace, opts.window, opts.tol) {
            done = true;
            break;
        }
    }
    let report = SolverReport {
        iterations: trace.len() - 1,
        objective_trace: trace,
        converged: done,
        tolerance_used: opts.tol,
        wall_time: start.elapsed(),
        iteration_times: times,
    };
    Ok((x, report))
}

/// `||x_hat - x||_F^2 + Σ_μ ||x_(μ)||_{*w_μ}`.
pub fn gctp_objective(x: &DenseTensor, x_hat: &DenseTensor, weights: &[WeightVector]) -> Result<f64> {
    Ok(x.sub(x_hat)?.frobenius_norm().powi(2) + regularizer(x, weights)?)
}

/// Graph core tensor pursuit: denoises a projected core with one weighted
/// nuclear norm per mode. Weights carry γ; all-zero weights return `x_hat`.
pub fn gctp(x_hat: &DenseTensor, weights: &[WeightVector], opts: &SolverOptions) -> Result<(DenseTensor, SolverReport)> {
    check_weights(x_hat.shape(), weights)?;
    if !x_hat.is_finite() {
        return Err(MlrtgError::Numeric("core tensor contains non-finite entries".into()));
    }
    if weights.iter().all(|w| w.values.iter().all(|&v| v == 0.0)) {
        opts.validate()?;
        return Ok((x_hat.clone(), SolverReport::trivial(0.0)));
    }
    // prox of t·||x - x_hat||^2
    let prox_f0 = |v: &DenseTensor, t: f64| {
        let s = 1.0 / (1.0 + 2.0 * t);
        v.zip_map(x_hat, |a, b| (a + 2.0 * t * b) * s)
    };
    let data = DataTerm { z0: x_hat.clone(), forward: |v: &DenseTensor| Ok(v.clone()), adjoint: |v: &DenseTensor| Ok(v.clone()), prox: prox_f0 };
    // t = τ/ω = 1/2 puts the quadratic prox at the midpoint (v + x_hat)/2
    let tau = opts.resolved_step(0.5 / (x_hat.order() + 1) as f64);
    ppxa(x_hat, data, weights, opts, tau, |x| gctp_objective(x, x_hat, weights))
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `x + P^T (soft(P x − y, step) − (P x − y))` with `P` the multilinear
/// expansion through the bases. This is the exact prox of
/// `step · ||P x − y||_1` when every basis is square (`P P^T = I`); for
/// truncated bases it is `P^T ∘ prox ∘ P` on the span, still firmly
/// nonexpansive.
pub fn prox_l1_dataterm(x_core: &DenseTensor, y: &DenseTensor, bases: &[GraphBasis], step: f64) -> Result<DenseTensor> {
    let mats = basis_matrices(bases);
    prox_l1_with(x_core, y, &mats, step)
}

fn prox_l1_with(
    x_core: &DenseTensor,
    y: &DenseTensor,
    mats: &[nalgebra::DMatrix<f64>],
    step: f64,
) -> Result<DenseTensor> {
    if mats.len() != y.order() || mats.len() != x_core.order() {
        return Err(MlrtgError::Shape(format!(
            "{} bases for a core of order {} and data of order {}",
            mats.len(),
            x_core.order(),
            y.order()
        )));
    }
    for (mode, m) in mats.iter().enumerate() {
        if m.nrows() != y.shape()[mode] || m.ncols() != x_core.shape()[mode] {
            return Err(MlrtgError::Shape(format!(
                "mode {mode}: basis is {}x{}, data has {} rows and core {}",
                m.nrows(),
                m.ncols(),
                y.shape()[mode],
                x_core.shape()[mode]
            )));
        }
    }
    let r = multilinear_transform(x_core, mats, false)?.sub(y)?;
    let delta = r.map(|v| soft(v, step) - v);
    x_core.add(&multilinear_transform(&delta, mats, true)?)
}

/// `||P x − y||_1 + Σ_μ ||x_(μ)||_{*w_μ}`.
pub fn trpcag_objective(x: &DenseTensor, y: &DenseTensor, bases: &[GraphBasis], weights: &[WeightVector]) -> Result<f64> {
    let mats = basis_matrices(bases);
    let r = multilinear_transform(x, &mats, false)?.sub(y)?;
    Ok(r.l1_norm() + regularizer(x, weights)?)
}

#[derive(Debug, Clone)]
pub struct TrpcagOutput {
    pub core: DenseTensor,
    pub lowrank: DenseTensor,
    /// `y − lowrank`.
    pub sparse: DenseTensor,
    pub report: SolverReport,
}

/// Tensor robust PCA on graphs: ℓ1 data fidelity on the reconstruction plus
/// weighted nuclear norms on the core, started from the projected core.
pub fn trpcag(y: &DenseTensor, bases: &[GraphBasis], weights: &[WeightVector], opts: &SolverOptions) -> Result<TrpcagOutput> {
    if !y.is_finite() {
        return Err(MlrtgError::Numeric("input tensor contains non-finite entries".into()));
    }
    let x0 = project_gct(y, bases)?.core;
    check_weights(x0.shape(), weights)?;
    let mats = basis_matrices(bases);
    let objective = |x: &DenseTensor| {
        let r = multilinear_transform(x, &mats, false)?.sub(y)?;
        Ok(r.l1_norm() + regularizer(x, weights)?)
    };
    // the problem is 1-homogeneous in y, so the step follows the data scale
    let rms = y.frobenius_norm() / (y.len().max(1) as f64).sqrt();
    let tau = opts.resolved_step(if rms > 0.0 { 0.1 * rms } else { 1.0 });
    // prox of t·||v − y||_1 in data space
    let prox = |v: &DenseTensor, t: f64| v.zip_map(y, |a, b| b + soft(a - b, t));
    let data = DataTerm {
        z0: y.clone(),
        forward: |v: &DenseTensor| multilinear_transform(v, &mats, false),
        adjoint: |v: &DenseTensor| multilinear_transform(v, &mats, true),
        prox,
    };
    let (core, report) = ppxa(&x0, data, weights, opts, tau, objective)?;
    let lowrank = multilinear_transform(&core, &mats, false)?;
    let sparse = y.sub(&lowrank)?;
    Ok(TrpcagOutput { core, lowrank, sparse, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn basis(m: DMatrix<f64>) -> GraphBasis {
        let k = m.ncols();
        GraphBasis::new(m, (0..k).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn scalar_prox_matches_closed_form() {
        let one = basis(DMatrix::from_element(1, 1, 1.0));
        for &(x, y, a) in &[(3.0, 1.0, 0.5), (1.0, 3.0, 0.5), (1.2, 1.0, 0.5), (-2.0, 0.0, 5.0)] {
            let xt = DenseTensor::new(vec![1, 1, 1], vec![x]).unwrap();
            let yt = DenseTensor::new(vec![1, 1, 1], vec![y]).unwrap();
            let bases = vec![one.clone(), one.clone(), one.clone()];
            let out = prox_l1_dataterm(&xt, &yt, &bases, a).unwrap().data()[0];
            // argmin_u a|u - y| + (u - x)^2 / 2
            let expect = if x > y + a {
                x - a
            } else if x < y - a {
                x + a
            } else {
                y
            };
            assert!((out - expect).abs() < 1e-15, "{x} {y} {a}: {out} vs {expect}");
        }
    }

    #[test]
    fn prox_fixes_exact_reconstruction() {
        let p = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.6, 0.0, 0.8]);
        let bases = vec![basis(p.clone()), basis(p)];
        let x = DenseTensor::new(vec![2, 2], vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let y = multilinear_transform(&x, &basis_matrices(&bases), false).unwrap();
        let out = prox_l1_dataterm(&x, &y, &bases, 0.7).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn gctp_zero_weights_returns_input() {
        let x = DenseTensor::from_fn(vec![3, 3, 3], |i| (i[0] + 2 * i[1]) as f64 - i[2] as f64).unwrap();
        let w = vec![WeightVector::from_values(vec![0.0; 3]); 3];
        let (out, rep) = gctp(&x, &w, &SolverOptions::default()).unwrap();
        assert_eq!(out, x);
        assert!(rep.converged);
    }

    #[test]
    fn bad_weight_count() {
        let x = DenseTensor::zeros(vec![3, 3]).unwrap();
        let w = vec![WeightVector::from_values(vec![1.0; 3])];
        assert!(matches!(gctp(&x, &w, &SolverOptions::default()), Err(MlrtgError::Shape(_))));
    }
}
