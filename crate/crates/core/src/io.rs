//! Binary matrix files.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                         |
//! |--------------|---------------------------------|
//! | 0..8         | ASCII magic `SAPSMAT1`          |
//! | 8..12        | rows, `u32`                     |
//! | 12..16       | cols, `u32`                     |
//! | 16..         | `rows × cols` `f64`, row-major  |

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 8] = b"SAPSMAT1";
pub const HEADER_LEN: usize = 16;

pub fn encode_matrix(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows())
        .map_err(|_| Error::Format(format!("{} rows do not fit in u32", m.rows())))?;
    let cols = u32::try_from(m.cols())
        .map_err(|_| Error::Format(format!("{} cols do not fit in u32", m.cols())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic, expected SAPSMAT1".into()));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    // Compare against the bytes actually present before allocating anything.
    let expected = (rows as u128) * (cols as u128) * 8;
    if payload.len() as u128 != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes but a {rows}x{cols} matrix needs {expected}",
            payload.len()
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite value at ({}, {})",
            pos / cols,
            pos % cols
        )));
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    std::fs::write(path, encode_matrix(m)?)?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_matrix(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_matrix;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = gaussian_matrix(17, 5, 3);
        let back = decode_matrix(&encode_matrix(&m).unwrap()).unwrap();
        assert_eq!(
            back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_matrix_is_sixteen_bytes() {
        let bytes = encode_matrix(&Matrix::zeros(0, 0)).unwrap();
        assert_eq!(bytes.len(), 16);
        let back = decode_matrix(&bytes).unwrap();
        assert_eq!(back.shape(), (0, 0));
    }

    #[test]
    fn faults_are_reported() {
        let mut bytes = encode_matrix(&gaussian_matrix(2, 2, 1)).unwrap();
        assert!(matches!(decode_matrix(&bytes[..20]), Err(Error::Format(_))));
        assert!(matches!(decode_matrix(&bytes[..10]), Err(Error::Format(_))));
        bytes[16..24].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_matrix(&bytes), Err(Error::Validation(_))));
        bytes[0] = b'X';
        assert!(matches!(decode_matrix(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn huge_header_does_not_allocate() {
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode_matrix(&bytes), Err(Error::Format(_))));
    }
}
