//! Binary matrix files: `"RKM1"`, little-endian `u32` rows and cols, then
//! row-major little-endian `f64` values.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RKM1";
const HEADER: usize = 12;

pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * m.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER {
        return Err(Error::Truncated {
            needed: HEADER,
            available: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            expected: u32::from_be_bytes(MAGIC),
            found: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let needed = HEADER + 8 * rows * cols;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes[HEADER..needed]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn empty_matrix_is_header_only() {
        assert_eq!(encode_matrix(&DMatrix::zeros(0, 0)).len(), 12);
        assert_eq!(
            decode_matrix(&encode_matrix(&DMatrix::zeros(0, 0))).unwrap().shape(),
            (0, 0)
        );
    }

    #[test]
    fn row_major_layout() {
        let b = encode_matrix(&dmatrix![1.0, 2.0; 3.0, 4.0]);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 2.0);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let mut b = encode_matrix(&dmatrix![1.0, 2.0, 3.0]);
        b.truncate(b.len() - 1);
        assert!(matches!(decode_matrix(&b), Err(Error::Truncated { .. })));
        b[0] = b'X';
        assert!(matches!(decode_matrix(&b), Err(Error::BadMagic { .. })));
    }
}
