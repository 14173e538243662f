mod common;

use common::*;
use mlrtg::{alignment_diag, recon_error, singular_value_error, subspace_angle, DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn recon_error_matches_explicit_sums() {
    let mut r = rng(30);
    let y = gaussian_tensor(&[4, 5, 6], &mut r);
    let s = gaussian_tensor(&[4, 5, 6], &mut r);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..4 {
        for j in 0..5 {
            for k in 0..6 {
                num += (y.get(&[i, j, k]) - s.get(&[i, j, k])).powi(2);
                den += s.get(&[i, j, k]).powi(2);
            }
        }
    }
    assert!((recon_error(&y, &s).unwrap() - (num / den).sqrt()).abs() <= 1e-14);
}

#[test]
fn singular_value_error_matches_direct_svd() {
    let mut r = rng(31);
    let y = gaussian_tensor(&[6, 4, 3], &mut r);
    let s = gaussian_tensor(&[6, 4, 3], &mut r);
    // mode-1 unfolding built entry by entry
    let unfold = |t: &mlrtg::DenseTensor| {
        DMatrix::from_fn(4, 18, |j, col| t.get(&[col % 6, j, col / 6]))
    };
    let sorted = |m: DMatrix<f64>| {
        let mut v: Vec<f64> = m.singular_values().iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        DVector::from_vec(v)
    };
    let (a, b) = (sorted(unfold(&y)), sorted(unfold(&s)));
    let k = 3;
    let oracle = (a.rows(0, k) - b.rows(0, k)).norm() / b.rows(0, k).norm();
    assert!((singular_value_error(&y, &s, 1, k).unwrap() - oracle).abs() <= 1e-12);
    for c in [0.5, 2.0, 3.25] {
        assert!((singular_value_error(&s.scale(c), &s, 0, 4).unwrap() - (c - 1.0f64).abs()).abs() <= 1e-12);
    }
}

#[test]
fn random_subspaces_are_poorly_aligned() {
    let mut r = rng(32);
    let mut total = 0.0;
    let trials = 20;
    for _ in 0..trials {
        let v = orthonormal(100, 10, &mut r);
        let u = orthonormal(100, 10, &mut r);
        total += alignment_diag(&v, &u, 10).unwrap().mean();
    }
    assert!(total / trials as f64 <= 0.3);
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn alignment_ignores_column_signs(n in 3usize..30, seed in any::<u64>(), flips in any::<u32>()) {
        let mut r = rng(seed);
        let k = 1 + seed as usize % n;
        let v = orthonormal(n, k, &mut r);
        let u = orthonormal(n, k, &mut r);
        let mut w = u.clone();
        for j in 0..k {
            if flips >> (j % 32) & 1 == 1 {
                w.column_mut(j).neg_mut();
            }
        }
        let a = alignment_diag(&v, &u, k).unwrap();
        let b = alignment_diag(&v, &w, k).unwrap();
        prop_assert!((a - b).amax() <= 1e-12);
        let (ta, tb) = (subspace_angle(&v, &u, k).unwrap(), subspace_angle(&v, &w, k).unwrap());
        prop_assert!((ta - tb).abs() <= 1e-12);
    }

    #[test]
    fn alignment_follows_a_joint_permutation(n in 3usize..30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = 2 + seed as usize % (n - 1);
        let k = k.min(n);
        let v = orthonormal(n, k, &mut r);
        let u = orthonormal(n, k, &mut r);
        let perm: Vec<usize> = (0..k).rev().collect();
        let vp = DMatrix::from_fn(n, k, |i, j| v[(i, perm[j])]);
        let up = DMatrix::from_fn(n, k, |i, j| u[(i, perm[j])]);
        let a = alignment_diag(&v, &u, k).unwrap();
        let b = alignment_diag(&vp, &up, k).unwrap();
        for j in 0..k {
            prop_assert!((b[j] - a[perm[j]]).abs() <= 1e-12);
        }
    }
}
