mod common;

use common::*;
use mlrtg::synth::{add_sparse_noise_with_support, generating_bases, method2_with_bases};
use mlrtg::{add_gaussian_noise, add_sparse_noise, matricize, method1, method2, DMatrix, SynthSpec};

fn spec() -> SynthSpec {
    SynthSpec::new(vec![30, 25, 20], vec![4, 3, 5], 7)
}

fn basis_mats(bases: &[mlrtg::GraphBasis]) -> Vec<DMatrix<f64>> {
    bases.iter().map(|b| b.eigenvectors.clone()).collect()
}

#[test]
fn method1_equals_kronecker_expansion_of_core() {
    let out = method1(&spec()).unwrap();
    let oracle = kron_apply(&out.core, &basis_mats(&out.bases));
    assert!(rel_diff(&out.y_star, &oracle) <= 1e-12);
}

#[test]
fn method1_unfoldings_have_the_requested_rank() {
    let s = spec();
    let out = method1(&s).unwrap();
    for (mode, &k) in s.ranks.iter().enumerate() {
        let sv = matricize(&out.y_star, mode).unwrap().matrix.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[k] / sv[0] <= 1e-10, "mode {mode}: {} / {}", sv[k], sv[0]);
        assert!(sv[k - 1] / sv[0] > 1e-6);
    }
}

#[test]
fn generating_bases_extend_the_method_bases() {
    let s = spec();
    let out = method1(&s).unwrap();
    let full = generating_bases(&s, &[30, 25, 20]).unwrap();
    for (b, f) in out.bases.iter().zip(&full) {
        let lead = f.eigenvectors.columns(0, b.k());
        assert!((lead - &b.eigenvectors).amax() <= 1e-10);
    }
}

#[test]
fn method2_output_is_a_fixed_point_of_the_projector() {
    let out = method2_with_bases(&spec()).unwrap();
    let mats = basis_mats(&out.bases);
    let core = mlrtg::multilinear_transform(&out.y_star, &mats, true).unwrap();
    let again = mlrtg::multilinear_transform(&core, &mats, false).unwrap();
    assert!(rel_diff(&again, &out.y_star) <= 1e-12);
    assert_eq!(method2(&spec()).unwrap().data(), out.y_star.data());
}

#[test]
fn generation_is_a_pure_function_of_the_seed() {
    let a = method1(&spec()).unwrap();
    let b = method1(&spec()).unwrap();
    assert_eq!(a.y_star.data(), b.y_star.data());
    let other = method1(&SynthSpec { seed: 8, ..spec() }).unwrap();
    assert_ne!(a.y_star.data(), other.y_star.data());
}

#[test]
fn gaussian_noise_hits_the_target_snr() {
    let y = method1(&spec()).unwrap().y_star;
    for snr in [-5.0, 0.0, 5.0, 20.0] {
        let noisy = add_gaussian_noise(&y, snr, 3).unwrap();
        let e = noisy.sub(&y).unwrap();
        let measured = 10.0 * (y.frobenius_norm().powi(2) / e.frobenius_norm().powi(2)).log10();
        assert!((measured - snr).abs() <= 1e-9, "{measured} vs {snr}");
    }
    let e1 = add_gaussian_noise(&y, 5.0, 3).unwrap().sub(&y).unwrap();
    let e2 = add_gaussian_noise(&y, 5.0, 4).unwrap().sub(&y).unwrap();
    assert_ne!(e1.data(), e2.data());
    assert!((e1.frobenius_norm() - e2.frobenius_norm()).abs() <= 1e-12 * e1.frobenius_norm());
}

#[test]
fn sparse_noise_touches_exactly_the_requested_count() {
    let y = method1(&spec()).unwrap().y_star;
    let n = y.len();
    for fraction in [0.0, 0.01, 0.1, 0.37, 1.0] {
        let (noisy, support) = add_sparse_noise_with_support(&y, fraction, 1.0, 5).unwrap();
        assert_eq!(support.len(), (fraction * n as f64).ceil() as usize);
        let changed = noisy.data().iter().zip(y.data()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, support.len());
    }
}

#[test]
fn sparse_noise_standard_deviation() {
    let y = mlrtg::DenseTensor::zeros(vec![120, 100]).unwrap();
    let noisy = add_sparse_noise(&y, 1.0, 2.5, 6).unwrap();
    let n = noisy.len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let var = noisy.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var.sqrt() - 2.5).abs() <= 0.1 * 2.5);
}
