//! Experiment protocols for the artificial-data studies, shared by the
//! criterion benches and the acceptance suite.
//!
//! Every instance is a pure function of its seed. Graphs are built from the
//! rows of each flattened mode of the observed tensor unless a function says
//! otherwise.

use mlrtg::linalg::{thin_svd, truncated_svd};
use mlrtg::prox::SolverReport;
use mlrtg::synth::generating_bases;
use mlrtg::{
    add_gaussian_noise, add_sparse_noise, gmlsvd, method1, mode_weights, tensor_mode_bases, trpcag, DMatrix,
    DenseTensor, GraphBasis, Result, SolverOptions, SynthSpec, TrpcagOutput,
};

pub const SIZE: usize = 100;
pub const RANK: usize = 10;
pub const K_NN: usize = 10;

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: SynthSpec,
    pub y_star: DenseTensor,
    pub y: DenseTensor,
}

impl Instance {
    /// Bases of the graphs the clean tensor was generated from, `k` per mode.
    pub fn generating_bases(&self, k: usize) -> Result<Vec<GraphBasis>> {
        generating_bases(&self.spec, &vec![k; self.spec.shape.len()])
    }

    /// Bases of kNN graphs built on the observed tensor.
    pub fn data_bases(&self, k: usize, k_nn: usize) -> Result<Vec<GraphBasis>> {
        tensor_mode_bases(&self.y, &vec![k; self.y.order()], k_nn, None)
    }
}

/// Square `SIZE x SIZE` rank-`RANK` matrix with Gaussian noise at `snr_db`.
pub fn gaussian_instance(seed: u64, snr_db: f64) -> Result<Instance> {
    let spec = SynthSpec::new(vec![SIZE, SIZE], vec![RANK, RANK], seed);
    let y_star = method1(&spec)?.y_star;
    let y = add_gaussian_noise(&y_star, snr_db, seed)?;
    Ok(Instance { spec, y_star, y })
}

/// Same clean matrix with a `fraction` of entries hit by `N(0, std^2)`.
pub fn sparse_instance(seed: u64, fraction: f64, std: f64) -> Result<Instance> {
    sparse_instance_sized(SIZE, RANK, seed, fraction, std)
}

pub fn sparse_instance_sized(n: usize, rank: usize, seed: u64, fraction: f64, std: f64) -> Result<Instance> {
    let spec = SynthSpec::new(vec![n, n], vec![rank, rank], seed);
    let y_star = method1(&spec)?.y_star;
    let y = add_sparse_noise(&y_star, fraction, std, seed)?;
    Ok(Instance { spec, y_star, y })
}

/// Rank-`r` truncated SVD of an order-2 tensor.
pub fn svd_baseline(y: &DenseTensor, r: usize) -> Result<DenseTensor> {
    Ok(DenseTensor::from_matrix(&truncated_svd(&y.to_matrix()?, r)?))
}

/// GCTP-based GSVD: graphs on `y`, GMLSVD with `γ λ^α` weights, reconstruction.
pub fn gsvd_denoise(
    y: &DenseTensor,
    k: usize,
    k_nn: usize,
    gamma: f64,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<(DenseTensor, SolverReport)> {
    let bases = tensor_mode_bases(y, &vec![k; y.order()], k_nn, None)?;
    let weights = mode_weights(&bases, alpha, gamma)?;
    let (factors, report) = gmlsvd(y, &bases, &weights, opts)?;
    Ok((factors.reconstruct()?, report))
}

pub fn trpcag_recover(
    y: &DenseTensor,
    bases: &[GraphBasis],
    gamma: f64,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<TrpcagOutput> {
    let weights = mode_weights(bases, alpha, gamma)?;
    trpcag(y, bases, &weights, opts)
}

/// Leading `count` left singular vectors of the mode-0 unfolding.
pub fn leading_singular_vectors(t: &DenseTensor, count: usize) -> Result<DMatrix<f64>> {
    let svd = thin_svd(&t.to_matrix()?)?;
    Ok(svd.u.columns(0, count).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len(), "paired samples");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r_squared }
}

/// Index of the minimum when the first differences change sign exactly once,
/// from negative to positive, with the minimum strictly inside the grid.
pub fn single_interior_minimum(values: &[f64]) -> Option<usize> {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let turn = diffs.iter().position(|&d| d > 0.0)?;
    if turn == 0 || diffs[turn..].iter().any(|&d| d <= 0.0) {
        return None;
    }
    Some(turn)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
