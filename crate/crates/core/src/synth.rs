//! Artificial MLRTG tensors and noise injection.
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with `seed_from_u64(seed)`. Each purpose draws from its own ChaCha stream
//! id so adding draws for one purpose never shifts another:
//!
//! | stream | purpose                                   |
//! |--------|-------------------------------------------|
//! | 1      | random tensor the graphs are built from   |
//! | 2      | graph core tensor                         |
//! | 3      | Gaussian noise                            |
//! | 4      | sparse corruption support and values      |
//! | 5      | clustered point clouds                    |
//!
//! Within a stream, values are drawn in storage order (mode 0 fastest).

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{MlrtgError, Result};
use crate::graph::{graph_basis, tensor_mode_bases, GraphBasis};
use crate::spectral::{basis_matrices, expand_core};
use crate::tensor::{multilinear_transform, DenseTensor};

pub const STREAM_DATA: u64 = 1;
pub const STREAM_CORE: u64 = 2;
pub const STREAM_GAUSSIAN: u64 = 3;
pub const STREAM_SPARSE: u64 = 4;
pub const STREAM_CLUSTERS: u64 = 5;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_tensor(shape: Vec<usize>, rng: &mut ChaCha20Rng) -> Result<DenseTensor> {
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    DenseTensor::new(shape, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMethod {
    /// Method 1: expand a random core in graph eigenbases.
    DirectBasis,
    /// Method 2: filter a random tensor with rank-k graph projectors.
    LaplacianFilter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub shape: Vec<usize>,
    /// Graph multilinear rank per mode.
    pub ranks: Vec<usize>,
    pub k_nn: usize,
    pub kernel_width: Option<f64>,
    pub seed: u64,
    pub method: SynthMethod,
}

impl SynthSpec {
    pub fn new(shape: Vec<usize>, ranks: Vec<usize>, seed: u64) -> Self {
        Self { shape, ranks, k_nn: 10, kernel_width: None, seed, method: SynthMethod::DirectBasis }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranks.len() != self.shape.len() {
            return Err(MlrtgError::Shape(format!(
                "{} ranks for an order-{} shape",
                self.ranks.len(),
                self.shape.len()
            )));
        }
        for (&k, &n) in self.ranks.iter().zip(&self.shape) {
            if k == 0 || k > n {
                return Err(MlrtgError::Rank { requested: k, available: n });
            }
        }
        Ok(())
    }
}

/// Ground truth of a synthetic experiment.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub y_star: DenseTensor,
    pub bases: Vec<GraphBasis>,
    /// The random core for method 1, the projected core for method 2.
    pub core: DenseTensor,
}

fn random_graph_bases(spec: &SynthSpec) -> Result<(DenseTensor, Vec<GraphBasis>)> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, STREAM_DATA);
    let y = gaussian_tensor(spec.shape.clone(), &mut rng)?;
    let bases = tensor_mode_bases(&y, &spec.ranks, spec.k_nn, spec.kernel_width)?;
    Ok((y, bases))
}

/// Random Gaussian tensor → per-mode kNN graphs → first-k eigenbases →
/// random Gaussian core → `y* = core ×_1 P_1 .. ×_d P_d`.
pub fn method1(spec: &SynthSpec) -> Result<SynthOutput> {
    let (_, bases) = random_graph_bases(spec)?;
    let mut rng = rng_for(spec.seed, STREAM_CORE);
    let core = gaussian_tensor(spec.ranks.clone(), &mut rng)?;
    let y_star = expand_core(&core, &bases)?;
    Ok(SynthOutput { y_star, bases, core })
}

/// `y* = y ×_1 (P_1 P_1^T) .. ×_d (P_d P_d^T)` for the random tensor `y`
/// the graphs were built from.
pub fn method2(spec: &SynthSpec) -> Result<DenseTensor> {
    Ok(method2_with_bases(spec)?.y_star)
}

pub fn method2_with_bases(spec: &SynthSpec) -> Result<SynthOutput> {
    let (y, bases) = random_graph_bases(spec)?;
    let mats = basis_matrices(&bases);
    let core = multilinear_transform(&y, &mats, true)?;
    let y_star = multilinear_transform(&core, &mats, false)?;
    Ok(SynthOutput { y_star, bases, core })
}

/// Bases of the graphs `spec` generates from, with `sizes[m]` eigenpairs per
/// mode instead of the rank. Their leading `ranks[m]` columns are exactly the
/// bases returned by [`method1`] and [`method2_with_bases`].
pub fn generating_bases(spec: &SynthSpec, sizes: &[usize]) -> Result<Vec<GraphBasis>> {
    let sized = SynthSpec { ranks: sizes.to_vec(), ..spec.clone() };
    Ok(random_graph_bases(&sized)?.1)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    match spec.method {
        SynthMethod::DirectBasis => method1(spec),
        SynthMethod::LaplacianFilter => method2_with_bases(spec),
    }
}

/// `y + e`, with i.i.d. Gaussian `e` rescaled so that
/// `10 log10(||y||^2 / ||e||^2) = snr_db`.
pub fn add_gaussian_noise(y: &DenseTensor, snr_db: f64, seed: u64) -> Result<DenseTensor> {
    if !snr_db.is_finite() {
        return Err(MlrtgError::Numeric(format!("SNR must be finite, got {snr_db}")));
    }
    let signal = y.frobenius_norm();
    if signal == 0.0 {
        return Err(MlrtgError::ZeroInput("cannot set an SNR relative to a zero tensor"));
    }
    let mut rng = rng_for(seed, STREAM_GAUSSIAN);
    let e = gaussian_tensor(y.shape().to_vec(), &mut rng)?;
    let target = signal * 10f64.powf(-snr_db / 20.0);
    let e = e.scale(target / e.frobenius_norm());
    y.add(&e)
}

/// Adds `N(0, std^2)` to a uniformly random subset of `ceil(fraction · N)`
/// entries. Returns the corrupted tensor and the sorted corrupted offsets.
pub fn add_sparse_noise_with_support(
    y: &DenseTensor,
    fraction: f64,
    std: f64,
    seed: u64,
) -> Result<(DenseTensor, Vec<usize>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(MlrtgError::Numeric(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let normal = Normal::new(0.0, std).map_err(|e| MlrtgError::Numeric(e.to_string()))?;
    let n = y.len();
    let count = ((fraction * n as f64).ceil() as usize).min(n);
    let mut rng = rng_for(seed, STREAM_SPARSE);
    let mut support = sample(&mut rng, n, count).into_vec();
    support.sort_unstable();
    let mut out = y.clone();
    for &i in &support {
        out.data_mut()[i] += normal.sample(&mut rng);
    }
    Ok((out, support))
}

pub fn add_sparse_noise(y: &DenseTensor, fraction: f64, std: f64, seed: u64) -> Result<DenseTensor> {
    Ok(add_sparse_noise_with_support(y, fraction, std, seed)?.0)
}

/// `points` rows drawn around `clusters` well separated centres: the kNN
/// graph of such data (with `k_nn` below the cluster size) splits into
/// `clusters` components, giving a sharp eigen gap after `clusters`
/// eigenvalues.
pub fn clustered_points(points: usize, features: usize, clusters: usize, jitter: f64, seed: u64) -> Result<DMatrix<f64>> {
    if clusters == 0 || clusters > points {
        return Err(MlrtgError::Rank { requested: clusters, available: points });
    }
    let mut rng = rng_for(seed, STREAM_CLUSTERS);
    let centres = DMatrix::<f64>::from_fn(clusters, features, |_, _| {
        let c: f64 = StandardNormal.sample(&mut rng);
        10.0 * c
    });
    Ok(DMatrix::from_fn(points, features, |i, j| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        centres[(i % clusters, j)] + jitter * noise
    }))
}

/// A 2D instance `y = Z1 Z2^T + E` whose row and column graphs have an
/// exact eigen gap at `k_star`.
#[derive(Debug, Clone)]
pub struct EigenGapInstance {
    pub y: DMatrix<f64>,
    pub y_star: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub z1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    /// Bases with `k` eigenpairs (`k > k_star`).
    pub bases: [GraphBasis; 2],
    pub k_star: usize,
}

pub fn eigen_gap_instance(n1: usize, n2: usize, k_star: usize, k: usize, snr_db: f64, seed: u64) -> Result<EigenGapInstance> {
    if k <= k_star {
        return Err(MlrtgError::Rank { requested: k, available: k_star });
    }
    // kNN edges must stay inside clusters, and each cluster must stay connected
    let k_nn = (n1.min(n2) / k_star).saturating_sub(1).clamp(1, 7);
    let rows = clustered_points(n1, 8, k_star, 0.5, seed)?;
    let cols = clustered_points(n2, 8, k_star, 0.5, seed.wrapping_add(0x9e37_79b9))?;
    let b1 = graph_basis(&rows, k, k_nn, None)?;
    let b2 = graph_basis(&cols, k, k_nn, None)?;

    let mut rng = rng_for(seed, STREAM_CORE);
    let c = DMatrix::from_fn(k_star, k_star, |_, _| StandardNormal.sample(&mut rng));
    // balanced factorization C = B1 B2^T
    let svd = crate::linalg::thin_svd(&c)?;
    let root = svd.singular_values.map(f64::sqrt);
    let b1c = svd.u * DMatrix::from_diagonal(&root);
    let b2c = svd.v_t.transpose() * DMatrix::from_diagonal(&root);
    let z1 = b1.eigenvectors.columns(0, k_star) * b1c;
    let z2 = b2.eigenvectors.columns(0, k_star) * b2c;
    let y_star = &z1 * z2.transpose();

    let noisy = add_gaussian_noise(&DenseTensor::from_matrix(&y_star), snr_db, seed)?.to_matrix()?;
    let noise = &noisy - &y_star;
    Ok(EigenGapInstance { y: noisy, y_star, noise, z1, z2, bases: [b1, b2], k_star })
}
