//! Proximal solvers: weighted singular value thresholding, the parallel
//! proximal splitting engine behind GCTP and TRPCAG, MLSVD and GMLSVD, and
//! the factorized graph-regularized problem used for the recovery bound.

mod factorized;
mod mlsvd;
mod splitting;
mod svt;

use std::io::Write;
use std::time::Duration;

pub use factorized::{
    graph_regularized_factorization, kernel_weights, BoundTerms, FactorizationOptions, GraphRegularizedFactors,
    RecoveryProblem,
};
pub use mlsvd::{gmlsvd, mlsvd, SvdFactors};
pub use splitting::{gctp, gctp_objective, prox_l1_dataterm, trpcag, trpcag_objective, TrpcagOutput};
pub use svt::{weighted_nuclear_norm, weighted_svt, WeightVector};

use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative objective change over `window` iterations that counts as
    /// converged.
    pub tol: f64,
    pub window: usize,
    /// Relaxation, kept inside `[0.1, 1.9]`.
    pub beta: f64,
    /// Splitting step `τ`. `None` picks the solver default: `1/(2(d+1))`
    /// for GCTP, a tenth of the RMS entry of `y` for TRPCAG.
    pub step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-6, window: 5, beta: 1.0, step: None }
    }
}

impl SolverOptions {
    pub const BETA_EPS: f64 = 0.1;

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.window == 0 {
            return Err(MlrtgError::Numeric("max_iters and window must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MlrtgError::Numeric(format!("tol must be positive, got {}", self.tol)));
        }
        if !(Self::BETA_EPS..=2.0 - Self::BETA_EPS).contains(&self.beta) {
            return Err(MlrtgError::Numeric(format!("beta must lie in [0.1, 1.9], got {}", self.beta)));
        }
        if let Some(s) = self.step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(MlrtgError::Numeric(format!("step must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn resolved_step(&self, default: f64) -> f64 {
        self.step.unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub tolerance_used: f64,
    pub wall_time: Duration,
    /// Seconds spent in each iteration, aligned with `objective_trace`.
    pub iteration_times: Vec<f64>,
}

impl SolverReport {
    pub(crate) fn trivial(objective: f64) -> Self {
        Self {
            iterations: 0,
            objective_trace: vec![objective],
            converged: true,
            tolerance_used: 0.0,
            wall_time: Duration::ZERO,
            iteration_times: vec![0.0],
        }
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    pub fn mean_iteration_time(&self) -> f64 {
        let n = self.iteration_times.len().max(1);
        self.iteration_times.iter().sum::<f64>() / n as f64
    }

    /// `iteration,objective,time` rows, time cumulative in seconds.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,objective,time")?;
        let mut t = 0.0;
        for (i, (obj, dt)) in self.objective_trace.iter().zip(&self.iteration_times).enumerate() {
            t += dt;
            writeln!(w, "{i},{obj},{t}")?;
        }
        Ok(())
    }
}

/// `γ · λ^α` weights for every basis.
pub fn mode_weights(bases: &[GraphBasis], alpha: f64, gamma: f64) -> Result<Vec<WeightVector>> {
    bases.iter().map(|b| WeightVector::from_eigenvalues(&b.eigenvalues, alpha, gamma)).collect()
}

pub(crate) fn converged(trace: &[f64], window: usize, tol: f64) -> bool {
    if trace.len() <= window {
        return false;
    }
    let now = trace[trace.len() - 1];
    let then = trace[trace.len() - 1 - window];
    (now - then).abs() <= tol * then.abs().max(f64::MIN_POSITIVE)
}
