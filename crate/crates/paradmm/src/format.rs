//! Binary matrix files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "JADM"
//! 4       4     format version, u32 LE
//! 8       8     rows, u64 LE
//! 16      8     cols, u64 LE
//! 24      8·r·c entries, column-major f64 LE
//! ```
//!
//! Vectors are stored as one-column matrices.

use std::fs;
use std::path::Path;

use paradmm_core::Matrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"JADM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.rows() * m.cols());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_col_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a matrix; `origin` only labels errors.
pub fn decode_matrix(bytes: &[u8], origin: &Path) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(origin, format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(origin, "bad magic, expected JADM"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::format(origin, format!("unsupported format version {version}")));
    }
    let (rows, cols) = (word(8), word(16));
    let n = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::format(origin, format!("{rows}×{cols} is too large")))?;
    let payload = &bytes[HEADER_LEN..];
    if Some(payload.len()) != n.checked_mul(8) {
        return Err(Error::format(
            origin,
            format!("{rows}×{cols} needs {} payload bytes, found {}", n * 8, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Matrix::from_col_major(rows as usize, cols as usize, data)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, path)
}

pub fn vector_matrix(v: &[f64]) -> Matrix {
    Matrix::from_col_major(v.len(), 1, v.to_vec()).expect("column vector")
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(Error::format(path, format!("expected a vector, found {} columns", m.cols())));
    }
    Ok(m.into_col_major())
}
