#![allow(dead_code)]

use mlrtg::{DMatrix, DenseTensor, GraphBasis};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut StdRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_tensor(shape: &[usize], rng: &mut StdRng) -> DenseTensor {
    let len = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..len).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

/// `n x k` matrix with orthonormal columns, via QR of a Gaussian draw.
pub fn orthonormal(n: usize, k: usize, rng: &mut StdRng) -> DMatrix<f64> {
    gaussian_matrix(n, k, rng).qr().q().columns(0, k).into_owned()
}

pub fn basis_from(vectors: DMatrix<f64>) -> GraphBasis {
    let k = vectors.ncols();
    GraphBasis::new(vectors, (0..k).map(|i| i as f64).collect()).unwrap()
}

/// `A_{d-1} ⊗ .. ⊗ A_0`, the operator acting on mode-0-fastest vectorizations.
pub fn kron_chain(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut k = DMatrix::from_element(1, 1, 1.0);
    for a in mats {
        k = a.kronecker(&k);
    }
    k
}

/// Explicit Kronecker product applied to `vec(x)`.
pub fn kron_apply(x: &DenseTensor, mats: &[DMatrix<f64>]) -> DenseTensor {
    let v = mlrtg::DVector::from_column_slice(x.data());
    let out = kron_chain(mats) * v;
    let shape = mats.iter().map(|a| a.nrows()).collect();
    DenseTensor::new(shape, out.as_slice().to_vec()).unwrap()
}

pub fn rel_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Laplacian of a path on `n` vertices with unit weights.
pub fn path_laplacian(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        l[(i, i)] += 1.0;
        l[(i + 1, i + 1)] += 1.0;
        l[(i, i + 1)] = -1.0;
        l[(i + 1, i)] = -1.0;
    }
    l
}

pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}
