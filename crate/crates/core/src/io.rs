//! `DTF1` binary tensors and plain CSV matrices.
//!
//! DTF1 layout (all little-endian):
//!
//! | bytes        | content                                  |
//! |--------------|------------------------------------------|
//! | 4            | magic `DTF1`                             |
//! | 4            | `u32` order `d`                          |
//! | 8 · d        | `u64` dimensions `n_0 .. n_{d-1}`        |
//! | 8 · ∏ n      | `f64` payload, mode 0 fastest            |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{MlrtgError, Result};
use crate::graph::GraphBasis;
use crate::tensor::DenseTensor;

pub const DTF1_MAGIC: &[u8; 4] = b"DTF1";

pub fn write_dtf1<W: Write>(mut w: W, t: &DenseTensor) -> Result<()> {
    w.write_all(DTF1_MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &n in t.shape() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dtf1<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DTF1_MAGIC {
        return Err(MlrtgError::Format(format!("bad magic {magic:?}, expected DTF1")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let order = u32::from_le_bytes(b4) as usize;
    if !(2..=64).contains(&order) {
        return Err(MlrtgError::Format(format!("unsupported tensor order {order}")));
    }
    let mut shape = Vec::with_capacity(order);
    let mut b8 = [0u8; 8];
    for _ in 0..order {
        r.read_exact(&mut b8)?;
        shape.push(u64::from_le_bytes(b8) as usize);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| MlrtgError::Format(format!("dimensions {shape:?} overflow")))?;
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    DenseTensor::new(shape, data)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dtf1(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_dtf1(BufReader::new(File::open(path)?))
}

pub fn save_matrix_dtf1(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    save_tensor(path, &DenseTensor::from_matrix(m))
}

pub fn load_matrix_dtf1(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    load_tensor(path)?.to_matrix()
}

/// Writes one matrix row per CSV record, no header. Values use Rust's
/// shortest round-trip float formatting.
pub fn write_matrix_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.row_iter() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| MlrtgError::Format(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MlrtgError::Format(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| MlrtgError::Format(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(MlrtgError::Format(format!(
                    "ragged CSV: row {} has {} fields, expected {}",
                    rows.len(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn save_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(path)?), m)
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    read_matrix_csv(BufReader::new(File::open(path)?))
}

/// Eigenvectors as a DTF1 matrix, eigenvalues as a one-column CSV.
pub fn save_basis(vectors: impl AsRef<Path>, values: impl AsRef<Path>, basis: &GraphBasis) -> Result<()> {
    save_matrix_dtf1(vectors, &basis.eigenvectors)?;
    let column = DMatrix::from_column_slice(basis.k(), 1, &basis.eigenvalues);
    save_matrix_csv(values, &column)
}

pub fn load_basis(vectors: impl AsRef<Path>, values: impl AsRef<Path>) -> Result<GraphBasis> {
    let p = load_matrix_dtf1(vectors)?;
    let v = load_matrix_csv(values)?;
    if v.ncols() != 1 {
        return Err(MlrtgError::Format(format!("eigenvalue file has {} columns, expected 1", v.ncols())));
    }
    GraphBasis::new(p, v.column(0).iter().copied().collect())
}
