//! Dense tensors, matricization and mode products.
//!
//! Storage is column-major in the generalized sense: mode 0 varies fastest,
//! so the linear offset of index `(i_0, .., i_{d-1})` is
//! `i_0 + n_0 * (i_1 + n_1 * (i_2 + ...))`. `vec(T)` is simply `data`.
//!
//! The mode-`m` matricization puts `i_m` on the rows and enumerates the
//! remaining modes in ascending order on the columns, first-listed fastest.
//! Under this convention a sequence of mode products satisfies
//!
//! ```text
//! vec(X x_0 A_0 x_1 A_1 ... x_{d-1} A_{d-1}) = (A_{d-1} ⊗ ... ⊗ A_0) vec(X)
//! ```
//!
//! and `T_(m) = A_m X_(m) (A_{d-1} ⊗ .. ⊗ A_{m+1} ⊗ A_{m-1} ⊗ .. ⊗ A_0)^T`.
//!
//! Modes are zero-based throughout the library.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{shape_err, MlrtgError, Result};

/// Order-`d` (d ≥ 2) real tensor with contiguous mode-0-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// A mode-`mode` unfolding: `n_mode` rows, product of the other sizes as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatrix {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.len() < 2 {
        return shape_err(format!("tensor order must be at least 2, got {}", shape.len()));
    }
    if shape.iter().any(|&n| n == 0) {
        return shape_err(format!("all dimensions must be positive, got {shape:?}"));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return shape_err(format!(
                "data length {} does not match shape {:?} ({} elements)",
                data.len(),
                shape,
                len
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self { shape, data: vec![0.0; len] })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, n) in idx.iter_mut().zip(&shape) {
                *i += 1;
                if *i < *n {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { shape, data })
    }

    /// Views a matrix as an order-2 tensor (same column-major layout).
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self { shape: vec![m.nrows(), m.ncols()], data: m.as_slice().to_vec() }
    }

    /// The order-2 tensor as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order() != 2 {
            return shape_err(format!("expected an order-2 tensor, got shape {:?}", self.shape));
        }
        Ok(DMatrix::from_column_slice(self.shape[0], self.shape[1], &self.data))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut off = 0;
        for (i, n) in index.iter().zip(&self.shape).rev() {
            off = off * n + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Element-wise combination of two equally shaped tensors.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return shape_err(format!("shape mismatch {:?} vs {:?}", self.shape, other.shape));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return shape_err(format!("shape mismatch {:?} vs {:?}", self.shape, other.shape));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return shape_err(format!("shape mismatch {:?} vs {:?}", self.shape, other.shape));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(MlrtgError::InvalidMode { mode, order: self.order() });
        }
        Ok(())
    }

    /// `(left, n_mode, right)` block sizes around `mode`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.shape[..mode].iter().product();
        let right = self.shape[mode + 1..].iter().product();
        (left, self.shape[mode], right)
    }
}

/// Unfolds `t` along `mode`.
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<ModeMatrix> {
    t.check_mode(mode)?;
    let (left, n, right) = t.split(mode);
    let cols = left * right;
    let mut m = DMatrix::zeros(n, cols);
    if left == 1 {
        m.as_mut_slice().copy_from_slice(&t.data);
    } else {
        for r in 0..right {
            let block = &t.data[r * left * n..(r + 1) * left * n];
            for i in 0..n {
                for l in 0..left {
                    m[(i, l + r * left)] = block[l + i * left];
                }
            }
        }
    }
    Ok(ModeMatrix { mode, matrix: m })
}

/// Inverse of [`matricize`].
pub fn fold(m: &ModeMatrix, shape: &[usize]) -> Result<DenseTensor> {
    let len = check_shape(shape)?;
    let mode = m.mode;
    if mode >= shape.len() {
        return Err(MlrtgError::InvalidMode { mode, order: shape.len() });
    }
    let n = shape[mode];
    if m.matrix.nrows() != n || m.matrix.nrows() * m.matrix.ncols() != len {
        return shape_err(format!(
            "{}x{} matrix cannot be folded along mode {} into shape {:?}",
            m.matrix.nrows(),
            m.matrix.ncols(),
            mode,
            shape
        ));
    }
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    let mut data = vec![0.0; len];
    if left == 1 {
        data.copy_from_slice(m.matrix.as_slice());
    } else {
        for r in 0..right {
            let block = &mut data[r * left * n..(r + 1) * left * n];
            for i in 0..n {
                for l in 0..left {
                    block[l + i * left] = m.matrix[(i, l + r * left)];
                }
            }
        }
    }
    Ok(DenseTensor { shape: shape.to_vec(), data })
}

/// Applies `a` (or `a^T`) along `mode` without unfolding the tensor.
fn mode_apply(t: &DenseTensor, mode: usize, a: &DMatrix<f64>, transpose: bool) -> Result<DenseTensor> {
    t.check_mode(mode)?;
    let (left, n, right) = t.split(mode);
    let (inner, outer) = if transpose { (a.nrows(), a.ncols()) } else { (a.ncols(), a.nrows()) };
    if inner != n {
        return shape_err(format!(
            "mode-{mode} product needs {n} matrix {}, got {}x{}{}",
            if transpose { "rows" } else { "columns" },
            a.nrows(),
            a.ncols(),
            if transpose { " (transposed)" } else { "" }
        ));
    }
    let mut shape = t.shape.clone();
    shape[mode] = outer;
    let mut data = vec![0.0; left * outer * right];

    if left == 1 {
        let src = DMatrixView::from_slice(&t.data, n, right);
        let mut dst = DMatrixViewMut::from_slice(&mut data, outer, right);
        if transpose {
            dst.gemm_tr(1.0, a, &src, 0.0);
        } else {
            dst.gemm(1.0, a, &src, 0.0);
        }
    } else {
        // Each right-slice is a left x n column-major block; multiply it by A^T (or A).
        let at;
        let rhs = if transpose {
            a
        } else {
            at = a.transpose();
            &at
        };
        for r in 0..right {
            let src = DMatrixView::from_slice(&t.data[r * left * n..(r + 1) * left * n], left, n);
            let mut dst =
                DMatrixViewMut::from_slice(&mut data[r * left * outer..(r + 1) * left * outer], left, outer);
            dst.gemm(1.0, &src, rhs, 0.0);
        }
    }
    Ok(DenseTensor { shape, data })
}

/// `t ×_mode a`: replaces dimension `n_mode` by `a.nrows()`.
pub fn mode_product(t: &DenseTensor, mode: usize, a: &DMatrix<f64>) -> Result<DenseTensor> {
    mode_apply(t, mode, a, false)
}

/// `t ×_mode a^T`.
pub fn mode_product_transposed(t: &DenseTensor, mode: usize, a: &DMatrix<f64>) -> Result<DenseTensor> {
    mode_apply(t, mode, a, true)
}

/// Applies `mats[m]` (or its transpose) along every mode `m`.
///
/// Equivalent to multiplying `vec(x)` by the Kronecker product of all the
/// matrices, which is never formed.
pub fn multilinear_transform(x: &DenseTensor, mats: &[DMatrix<f64>], transpose: bool) -> Result<DenseTensor> {
    if mats.len() != x.order() {
        return shape_err(format!("need {} mode matrices, got {}", x.order(), mats.len()));
    }
    let mut out = mode_apply(x, 0, &mats[0], transpose)?;
    for (mode, a) in mats.iter().enumerate().skip(1) {
        out = mode_apply(&out, mode, a, transpose)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_tensor(shape: Vec<usize>) -> DenseTensor {
        let len = shape.iter().product::<usize>();
        DenseTensor::new(shape, (1..=len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn order_two_mode_zero_is_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let t = DenseTensor::from_matrix(&m);
        assert_eq!(matricize(&t, 0).unwrap().matrix, m);
        assert_eq!(matricize(&t, 1).unwrap().matrix, m.transpose());
    }

    #[test]
    fn matricize_matches_index_map() {
        // entries 1..8 of a 2x2x2 tensor, mode 1 (second mode)
        let t = seq_tensor(vec![2, 2, 2]);
        let m = matricize(&t, 1).unwrap().matrix;
        assert_eq!(m.shape(), (2, 4));
        for i0 in 0..2 {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    let col = i0 + 2 * i2;
                    assert_eq!(m[(i1, col)], t.get(&[i0, i1, i2]));
                }
            }
        }
        // explicit values: rows are i1, columns (i0, i2) with i0 fastest
        let expected = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0]);
        assert_eq!(m, expected);
    }

    #[test]
    fn invalid_mode_is_rejected() {
        let t = seq_tensor(vec![2, 3]);
        assert!(matches!(matricize(&t, 2), Err(MlrtgError::InvalidMode { mode: 2, order: 2 })));
    }

    #[test]
    fn fold_zero_matrix() {
        let m = ModeMatrix { mode: 2, matrix: DMatrix::zeros(4, 6) };
        let t = fold(&m, &[2, 3, 4]).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fold_dimension_mismatch() {
        let m = ModeMatrix { mode: 0, matrix: DMatrix::zeros(3, 5) };
        assert!(matches!(fold(&m, &[3, 4]), Err(MlrtgError::Shape(_))));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseTensor::zeros(vec![3]).is_err());
        assert!(DenseTensor::zeros(vec![3, 0]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn mode_product_identity() {
        let t = seq_tensor(vec![2, 3, 4]);
        for mode in 0..3 {
            let id = DMatrix::identity(t.shape()[mode], t.shape()[mode]);
            assert_eq!(mode_product(&t, mode, &id).unwrap(), t);
        }
    }

    #[test]
    fn mode_product_inner_mismatch() {
        let t = seq_tensor(vec![2, 3, 4]);
        let a = DMatrix::zeros(5, 2);
        assert!(matches!(mode_product(&t, 1, &a), Err(MlrtgError::Shape(_))));
    }

    #[test]
    fn mode_product_equals_unfolded_product() {
        let t = seq_tensor(vec![3, 4, 2]);
        let a = DMatrix::from_fn(5, 4, |i, j| (i as f64 + 1.0) * 0.5 - j as f64);
        let p = mode_product(&t, 1, &a).unwrap();
        let expected = fold(
            &ModeMatrix { mode: 1, matrix: &a * matricize(&t, 1).unwrap().matrix },
            &[3, 5, 2],
        )
        .unwrap();
        assert_eq!(p, expected);
    }
}
