//! The factorized graph-regularized problem for matrices,
//!
//! ```text
//! min_{V1,V2} ||V1 V2^T − Y||_F^2 + γ1 tr(V1^T g(L̃1) V1) + γ2 tr(V2^T g(L̃2) V2)
//! ```
//!
//! with `V_μ = P_μ A_μ` restricted to the span of `k` graph eigenvectors, and
//! the recovery bound it satisfies when the graphs have an eigen gap at `k*`.

use nalgebra::DMatrix;

use super::svt::weighted_svt;
use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;
use crate::linalg::{ensure_finite, thin_svd};

/// Kernel values at most this fraction of the largest count as exact zeros:
/// null-space eigenvalues come out of the eigensolver at roundoff level.
pub const ZERO_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationOptions {
    pub max_iters: usize,
    /// Relative primal and dual residual at which ADMM stops.
    pub tol: f64,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        Self { max_iters: 50_000, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct GraphRegularizedFactors {
    pub v: [DMatrix<f64>; 2],
    /// Coordinates of `v` in the eigenbases.
    pub a: [DMatrix<f64>; 2],
    /// `A1 A2^T`, the minimizer of the equivalent convex problem.
    pub product: DMatrix<f64>,
    /// Convex objective per ADMM iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `g(λ) = max(λ, 0)^α` per eigenvalue, with roundoff-level values set to 0.
pub fn kernel_weights(basis: &GraphBasis, alpha: f64) -> Vec<f64> {
    let g: Vec<f64> = basis.eigenvalues.iter().map(|&l| l.max(0.0).powf(alpha)).collect();
    let top = g.iter().copied().fold(0.0, f64::max);
    g.into_iter().map(|v| if v <= ZERO_WEIGHT * top { 0.0 } else { v }).collect()
}

fn penalty(a: &DMatrix<f64>, gamma: f64, g: &[f64]) -> f64 {
    gamma * a.row_iter().zip(g).map(|(row, gi)| gi * row.norm_squared()).sum::<f64>()
}

fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(crate::linalg::singular_values(m)?.sum())
}

/// `min_M ||M − B||^2 + 2 ||D1 M D2||_*` for positive diagonals `d1, d2`.
fn weighted_nuclear_admm(
    b: &DMatrix<f64>,
    d1: &[f64],
    d2: &[f64],
    opts: &FactorizationOptions,
) -> Result<(DMatrix<f64>, Vec<f64>, usize, bool)> {
    let dd = DMatrix::from_fn(d1.len(), d2.len(), |i, j| d1[i] * d2[j]);
    let rho = 2.0 / (dd.norm_squared() / dd.len() as f64);
    let objective = |m: &DMatrix<f64>| -> Result<f64> {
        Ok((m - b).norm_squared() + 2.0 * nuclear_norm(&dd.component_mul(m))?)
    };
    let thresholds = vec![2.0 / rho; d1.len().min(d2.len())];
    let mut w = dd.component_mul(b);
    let mut u = DMatrix::zeros(d1.len(), d2.len());
    let mut m = b.clone();
    let mut trace = vec![objective(&m)?];
    let scale = 1.0 + b.norm();
    for it in 1..=opts.max_iters {
        let target = &w - &u;
        m = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
            let d = dd[(i, j)];
            (2.0 * b[(i, j)] + rho * d * target[(i, j)]) / (2.0 + rho * d * d)
        });
        let q = dd.component_mul(&m);
        let w_next = weighted_svt(&(&q + &u), &thresholds)?;
        let primal = (&q - &w_next).norm();
        let dual = rho * (&w_next - &w).norm();
        u += &q - &w_next;
        w = w_next;
        trace.push(objective(&m)?);
        if primal <= opts.tol * scale * dd.max() && dual <= opts.tol * scale * rho * dd.max() {
            return Ok((m, trace, it, true));
        }
    }
    Ok((m, trace, opts.max_iters, false))
}

/// Solves the factorized problem through its convex equivalent
///
/// ```text
/// min_M ||M − X̂||_F^2 + 2 ||D1 M D2||_*,   D_μ = diag(sqrt(γ_μ g(λ_μ)))
/// ```
///
/// in eigen coordinates (`X̂ = P1^T Y P2`), using
/// `min_{A1 A2^T = M} ||D1 A1||^2 + ||D2 A2||^2 = 2 ||D1 M D2||_*`.
/// Entries of `M` in rows or columns with zero weight are unpenalized; the
/// factors carry them with a scale `t` chosen so that their leftover penalty
/// is below 1e-12 of the objective, since the infimum is not attained there.
pub fn graph_regularized_factorization(
    y: &DMatrix<f64>,
    bases: [&GraphBasis; 2],
    gammas: [f64; 2],
    alpha: f64,
    opts: &FactorizationOptions,
) -> Result<GraphRegularizedFactors> {
    ensure_finite(y, "data matrix")?;
    if bases[0].n() != y.nrows() || bases[1].n() != y.ncols() {
        return Err(MlrtgError::Shape(format!(
            "bases of sizes {}x{} for a {}x{} matrix",
            bases[0].n(),
            bases[1].n(),
            y.nrows(),
            y.ncols()
        )));
    }
    if gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(MlrtgError::Numeric(format!("gammas must be finite and nonnegative, got {gammas:?}")));
    }
    let p1 = &bases[0].eigenvectors;
    let p2 = &bases[1].eigenvectors;
    let x_hat = p1.tr_mul(y) * p2;
    let offset = (y.norm_squared() - x_hat.norm_squared()).max(0.0);
    let g = [kernel_weights(bases[0], alpha), kernel_weights(bases[1], alpha)];
    let d: [Vec<f64>; 2] = [0, 1].map(|m| g[m].iter().map(|gi| (gammas[m] * gi).sqrt()).collect());
    let free: [Vec<usize>; 2] = [0, 1].map(|m| (0..d[m].len()).filter(|&i| d[m][i] == 0.0).collect());
    let held: [Vec<usize>; 2] = [0, 1].map(|m| (0..d[m].len()).filter(|&i| d[m][i] > 0.0).collect());
    let (k1, k2) = x_hat.shape();

    let mut product = x_hat.clone();
    let mut trace = vec![offset];
    let (mut iterations, mut converged) = (0, true);
    let mut a_held = [DMatrix::zeros(k1, 0), DMatrix::zeros(k2, 0)];
    if !held[0].is_empty() && !held[1].is_empty() {
        let b = x_hat.select_rows(&held[0]).select_columns(&held[1]);
        let d1: Vec<f64> = held[0].iter().map(|&i| d[0][i]).collect();
        let d2: Vec<f64> = held[1].iter().map(|&j| d[1][j]).collect();
        let (m, t, it, conv) = weighted_nuclear_admm(&b, &d1, &d2, opts)?;
        trace = t.into_iter().map(|v| v + offset).collect();
        iterations = it;
        converged = conv;
        for (bi, &i) in held[0].iter().enumerate() {
            for (bj, &j) in held[1].iter().enumerate() {
                product[(i, j)] = m[(bi, bj)];
            }
        }
        // balanced factors of D1 M D2, mapped back through D^{-1}
        let w = DMatrix::from_fn(d1.len(), d2.len(), |i, j| d1[i] * m[(i, j)] * d2[j]);
        let svd = thin_svd(&w)?;
        let r = svd.singular_values.iter().filter(|&&s| s > 0.0).count();
        let root: Vec<f64> = svd.singular_values.iter().take(r).map(|s| s.sqrt()).collect();
        for (mode, (vecs, dm)) in [(svd.u.clone(), &d1), (svd.v_t.transpose(), &d2)].into_iter().enumerate() {
            let mut a = DMatrix::zeros([k1, k2][mode], r);
            for (bi, &i) in held[mode].iter().enumerate() {
                for c in 0..r {
                    a[(i, c)] = vecs[(bi, c)] * root[c] / dm[bi];
                }
            }
            a_held[mode] = a;
        }
    }

    // unpenalized rows of mode 1 (all columns), then unpenalized columns of
    // mode 2 restricted to penalized rows
    let leftover = penalty(&product.select_rows(&free[0]).transpose(), gammas[1], &g[1])
        + penalty(&product.select_columns(&free[1]), gammas[0], &g[0]);
    let base = trace.last().copied().unwrap_or(offset);
    let t = if leftover > 0.0 { (leftover / (1e-12 * (1.0 + base))).sqrt().max(1.0) } else { 1.0 };
    let (f1, f2) = (free[0].len(), free[1].len());
    let r = a_held[0].ncols();
    let mut a1 = DMatrix::zeros(k1, f1 + f2 + r);
    let mut a2 = DMatrix::zeros(k2, f1 + f2 + r);
    for (c, &i) in free[0].iter().enumerate() {
        a1[(i, c)] = t;
        for j in 0..k2 {
            a2[(j, c)] = product[(i, j)] / t;
        }
    }
    for (c, &j) in free[1].iter().enumerate() {
        a2[(j, f1 + c)] = t;
        for &i in &held[0] {
            a1[(i, f1 + c)] = product[(i, j)] / t;
        }
    }
    a1.columns_mut(f1 + f2, r).copy_from(&a_held[0]);
    a2.columns_mut(f1 + f2, r).copy_from(&a_held[1]);

    let v = [p1 * &a1, p2 * &a2];
    Ok(GraphRegularizedFactors { v, a: [a1, a2], product, objective_trace: trace, iterations, converged })
}

/// Both sides of the recovery bound with squared Frobenius fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerms {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; the bound holds when this is nonnegative.
    pub slack: f64,
    pub fit: f64,
    pub noise_energy: f64,
    /// `||P̄_{k*}^T V_μ||_F^2` per mode.
    pub complement_energy: [f64; 2],
    /// `g(λ_{k*}) / g(λ_{k*+1})` per mode.
    pub gap_ratio: [f64; 2],
}

/// A 2D instance `Y = Z1 Z2^T + E` with bases of `k > k*` eigenpairs.
#[derive(Debug, Clone, Copy)]
pub struct RecoveryProblem<'a> {
    pub y: &'a DMatrix<f64>,
    pub noise: &'a DMatrix<f64>,
    pub z: [&'a DMatrix<f64>; 2],
    pub bases: [&'a GraphBasis; 2],
    pub k_star: usize,
    pub gamma: f64,
    pub alpha: f64,
}

impl RecoveryProblem<'_> {
    fn check(&self) -> Result<()> {
        for b in self.bases {
            if self.k_star == 0 || self.k_star >= b.k() {
                return Err(MlrtgError::Rank { requested: self.k_star + 1, available: b.k() });
            }
        }
        Ok(())
    }

    fn kernels(&self) -> Result<[Vec<f64>; 2]> {
        self.check()?;
        let g = [kernel_weights(self.bases[0], self.alpha), kernel_weights(self.bases[1], self.alpha)];
        for (m, gm) in g.iter().enumerate() {
            if gm[self.k_star] <= 0.0 {
                return Err(MlrtgError::Numeric(format!("mode {m}: eigenvalue {} is zero, no gap", self.k_star + 1)));
            }
        }
        Ok(g)
    }

    /// `γ_μ = γ / g(λ_{μ,k*+1})`.
    pub fn gammas(&self) -> Result<[f64; 2]> {
        let g = self.kernels()?;
        Ok([self.gamma / g[0][self.k_star], self.gamma / g[1][self.k_star]])
    }

    pub fn solve(&self, opts: &FactorizationOptions) -> Result<GraphRegularizedFactors> {
        graph_regularized_factorization(self.y, self.bases, self.gammas()?, self.alpha, opts)
    }

    /// Objective of the factorized problem at `(V1, V2)`.
    pub fn objective(&self, v: [&DMatrix<f64>; 2]) -> Result<f64> {
        let gammas = self.gammas()?;
        let g = self.kernels()?;
        let mut total = (v[0] * v[1].transpose() - self.y).norm_squared();
        for m in 0..2 {
            total += penalty(&self.bases[m].eigenvectors.tr_mul(v[m]), gammas[m], &g[m]);
        }
        Ok(total)
    }

    pub fn bound(&self, v: [&DMatrix<f64>; 2]) -> Result<BoundTerms> {
        let g = self.kernels()?;
        let ks = self.k_star;
        let fit = (v[0] * v[1].transpose() - self.y).norm_squared();
        let noise_energy = self.noise.norm_squared();
        let mut complement_energy = [0.0; 2];
        let mut gap_ratio = [0.0; 2];
        let mut rhs_reg = 0.0;
        for m in 0..2 {
            let b = self.bases[m];
            let pbar = b.eigenvectors.columns(ks, b.k() - ks);
            complement_energy[m] = pbar.tr_mul(v[m]).norm_squared();
            gap_ratio[m] = g[m][ks - 1] / g[m][ks];
            rhs_reg += self.z[m].norm_squared() * gap_ratio[m];
        }
        let lhs = fit + self.gamma * (complement_energy[0] + complement_energy[1]);
        let rhs = noise_energy + self.gamma * rhs_reg;
        Ok(BoundTerms { lhs, rhs, slack: rhs - lhs, fit, noise_energy, complement_energy, gap_ratio })
    }
}
