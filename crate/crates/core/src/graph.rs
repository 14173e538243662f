//! k-nearest-neighbour graphs, combinatorial Laplacians and their low end of
//! the spectrum.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MlrtgError, Result};
use crate::linalg::{normalize_column_signs, symmetric_eigen_ascending};
use crate::tensor::{matricize, DenseTensor};

/// Largest vertex count handled by the dense symmetric eigensolver when the
/// method is [`EigenMethod::Auto`].
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Symmetric, non-negative, zero-diagonal weight matrix of an undirected graph.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub weights: DMatrix<f64>,
    pub k_nn: usize,
    pub kernel_width: f64,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.weights.row_iter().map(|r| r.sum()))
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.weights[(i, j)] > 0.0).count()
    }
}

/// Leading (lowest-frequency) Laplacian eigenpairs of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBasis {
    /// `n x k`, orthonormal columns.
    pub eigenvectors: DMatrix<f64>,
    /// `k` values, ascending.
    pub eigenvalues: Vec<f64>,
}

impl GraphBasis {
    pub fn new(eigenvectors: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(MlrtgError::Shape(format!(
                "{} eigenvector columns but {} eigenvalues",
                eigenvectors.ncols(),
                eigenvalues.len()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(MlrtgError::Numeric("eigenvalues must be ascending".into()));
        }
        Ok(Self { eigenvectors, eigenvalues })
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Number of eigenpairs held.
    pub fn k(&self) -> usize {
        self.eigenvectors.ncols()
    }

    /// The first `k` eigenpairs.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(MlrtgError::Rank { requested: k, available: self.k() });
        }
        Ok(Self {
            eigenvectors: self.eigenvectors.columns(0, k).into_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }
}

fn squared_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    // rows are vertices; work on the transpose so each point is contiguous
    let pts = points.transpose();
    let m = pts.ncols();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        let xi = pts.column(i);
        for j in i + 1..m {
            let xj = pts.column(j);
            let s: f64 = xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// Builds a symmetrized k-nearest-neighbour graph on the rows of `points`
/// with Gaussian weights `exp(-d^2 / sigma^2)`.
///
/// Neighbours are found by exhaustive search, ties broken by index. An edge
/// exists when either endpoint lists the other. Without an explicit
/// `kernel_width`, sigma is the mean distance to the `k_nn`-th neighbour
/// (falling back to 1 when that mean is zero, e.g. all points coincide).
pub fn knn_graph(points: &DMatrix<f64>, k_nn: usize, kernel_width: Option<f64>) -> Result<WeightedGraph> {
    let m = points.nrows();
    if k_nn == 0 || m <= k_nn {
        return Err(MlrtgError::TooFewPoints { points: m, k_nn });
    }
    if let Some(s) = kernel_width {
        if !(s.is_finite() && s > 0.0) {
            return Err(MlrtgError::Numeric(format!("kernel width must be positive, got {s}")));
        }
    }
    crate::linalg::ensure_finite(points, "points")?;
    let d2 = squared_distances(points);

    let mut neighbours = Vec::with_capacity(m);
    let mut kth = 0.0;
    for i in 0..m {
        let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| d2[(i, a)].total_cmp(&d2[(i, b)]).then(a.cmp(&b)));
        order.truncate(k_nn);
        kth += d2[(i, order[k_nn - 1])].sqrt();
        neighbours.push(order);
    }
    let sigma = match kernel_width {
        Some(s) => s,
        None => {
            let mean = kth / m as f64;
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        }
    };
    let denom = sigma * sigma;

    let mut w = DMatrix::zeros(m, m);
    for (i, nbrs) in neighbours.iter().enumerate() {
        for &j in nbrs {
            let v = (-d2[(i, j)] / denom).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(WeightedGraph { weights: w, k_nn, kernel_width: sigma })
}

/// `L = D - W`.
pub fn combinatorial_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = -g.weights.clone();
    for (i, d) in g.degrees().iter().enumerate() {
        l[(i, i)] = *d;
    }
    l
}

/// `L1 ⊗ I + I ⊗ L2`, the Laplacian of the Cartesian product graph.
pub fn cartesian_product_laplacian(l1: &DMatrix<f64>, l2: &DMatrix<f64>) -> DMatrix<f64> {
    let i1 = DMatrix::<f64>::identity(l1.nrows(), l1.nrows());
    let i2 = DMatrix::<f64>::identity(l2.nrows(), l2.nrows());
    l1.kronecker(&i2) + i1.kronecker(l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense for `n <= DENSE_EIGEN_LIMIT`, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// The `k` smallest eigenpairs of a symmetric PSD matrix.
///
/// Eigenvalues come back ascending and clamped at zero; each eigenvector is
/// signed so its largest-magnitude entry is positive.
pub fn smallest_eigs(l: &DMatrix<f64>, k: usize) -> Result<GraphBasis> {
    smallest_eigs_with(l, k, EigenMethod::Auto)
}

pub fn smallest_eigs_with(l: &DMatrix<f64>, k: usize, method: EigenMethod) -> Result<GraphBasis> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(MlrtgError::Shape(format!("Laplacian must be square, got {}x{}", n, l.ncols())));
    }
    if k == 0 || k > n {
        return Err(MlrtgError::Rank { requested: k, available: n });
    }
    let use_dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= DENSE_EIGEN_LIMIT,
    };
    let (values, mut vectors) = if use_dense {
        let (vals, vecs) = symmetric_eigen_ascending(l)?;
        (vals[..k].to_vec(), vecs.columns(0, k).into_owned())
    } else {
        lanczos_smallest(l, k)?
    };
    normalize_column_signs(&mut vectors);
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    GraphBasis::new(vectors, values)
}

/// Full-reorthogonalized Lanczos on the shifted operator `c I - L`, whose
/// largest eigenpairs are the smallest of `L`. The Krylov space grows until
/// every wanted Ritz pair has residual below `1e-10 ||L||_F`, or it spans
/// the whole space. Breakdowns restart from a fresh vector orthogonal to the
/// current basis so repeated eigenvalues are still found.
fn lanczos_smallest(l: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    crate::linalg::ensure_finite(l, "Laplacian")?;
    let n = l.nrows();
    let shift = l.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let lnorm = l.norm();
    let tol = 1e-10 * lnorm.max(f64::MIN_POSITIVE);
    let mut rng = ChaCha20Rng::seed_from_u64(0x4c61_6e63_7a6f_7321);

    let mut q: Vec<DVector<f64>> = Vec::with_capacity(n.min(4 * k + 64));
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let fresh = |q: &[DVector<f64>], rng: &mut ChaCha20Rng| -> Option<DVector<f64>> {
        for _ in 0..8 {
            let mut v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            for _ in 0..2 {
                for b in q {
                    let c = b.dot(&v);
                    v.axpy(-c, b, 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                return Some(v / norm);
            }
        }
        None
    };

    q.push(fresh(&q, &mut rng).expect("n >= 1"));
    let check_every = k.max(8);
    loop {
        let j = q.len() - 1;
        let qj = &q[j];
        let mut w = qj * shift - l * qj;
        let a = qj.dot(&w);
        alpha.push(a);
        w.axpy(-a, qj, 1.0);
        if j > 0 {
            w.axpy(-beta[j - 1], &q[j - 1], 1.0);
        }
        for _ in 0..2 {
            for b in &q {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b = w.norm();
        let m = q.len();

        if m >= k && (m % check_every == 0 || m == n) {
            let (vals, vecs) = ritz_pairs(&alpha, &beta, &q, k, shift)?;
            let converged = m == n
                || (0..k).all(|i| {
                    let v = vecs.column(i);
                    (l * v - v * vals[i]).norm() <= tol
                });
            if converged {
                return Ok((vals, vecs));
            }
        }
        if m == n {
            unreachable!("full Krylov space always converges");
        }
        if b > 1e-10 * shift.max(1.0) {
            beta.push(b);
            q.push(w / b);
        } else {
            beta.push(0.0);
            match fresh(&q, &mut rng) {
                Some(v) => q.push(v),
                None => {
                    // numerically exhausted the space
                    return ritz_pairs(&alpha, &beta[..alpha.len() - 1], &q, k, shift);
                }
            }
        }
    }
}

fn ritz_pairs(
    alpha: &[f64],
    beta: &[f64],
    q: &[DVector<f64>],
    k: usize,
    shift: f64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (theta, s) = symmetric_eigen_ascending(&t)?;
    let n = q[0].len();
    let mut vals = Vec::with_capacity(k);
    let mut vecs = DMatrix::zeros(n, k);
    // largest theta <-> smallest eigenvalue of L
    for i in 0..k {
        let col = m - 1 - i;
        vals.push(shift - theta[col]);
        let mut v = DVector::zeros(n);
        for (r, qr) in q.iter().enumerate().take(m) {
            v.axpy(s[(r, col)], qr, 1.0);
        }
        vecs.set_column(i, &v);
    }
    Ok((vals, vecs))
}

/// `λ_{k*} / λ_{k*+1}` (one-based, as in "the first k* eigenvalues").
/// Returns 0 when both are zero.
pub fn eigen_gap(basis: &GraphBasis, k_star: usize) -> Result<f64> {
    if k_star == 0 || k_star >= basis.k() {
        return Err(MlrtgError::Rank { requested: k_star + 1, available: basis.k() });
    }
    let lo = basis.eigenvalues[k_star - 1];
    let hi = basis.eigenvalues[k_star];
    if hi <= 0.0 {
        return Ok(0.0);
    }
    Ok(lo / hi)
}

/// Graph basis on the rows of `points`.
pub fn graph_basis(points: &DMatrix<f64>, k: usize, k_nn: usize, kernel_width: Option<f64>) -> Result<GraphBasis> {
    let g = knn_graph(points, k_nn, kernel_width)?;
    smallest_eigs(&combinatorial_laplacian(&g), k)
}

/// One graph basis per mode, each built on the rows of that mode's unfolding.
pub fn tensor_mode_bases(y: &DenseTensor, ranks: &[usize], k_nn: usize, kernel_width: Option<f64>) -> Result<Vec<GraphBasis>> {
    if ranks.len() != y.order() {
        return Err(MlrtgError::Shape(format!("need {} ranks, got {}", y.order(), ranks.len())));
    }
    ranks
        .iter()
        .enumerate()
        .map(|(mode, &k)| graph_basis(&matricize(y, mode)?.matrix, k, k_nn, kernel_width))
        .collect()
}
