//! Raw binary export of `Â`.
//!
//! Layout: a 16-byte header, the 8-byte magic `OTFSKAH1` followed by
//! `nrows` and `ncols` as little-endian `u32`, then `nrows·ncols`
//! little-endian `f64` values in column-major order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

pub const MAGIC: [u8; 8] = *b"OTFSKAH1";
pub const HEADER_LEN: usize = 16;

pub fn to_bytes(a: &DenseMatrix) -> Result<Vec<u8>> {
    let (m, n) = a.shape();
    let (m32, n32) = match (u32::try_from(m), u32::try_from(n)) {
        (Ok(m), Ok(n)) => (m, n),
        _ => return Err(Error::InvalidArgument(format!("{m}x{n} exceeds the u32 header fields"))),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m * n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&m32.to_le_bytes());
    out.extend_from_slice(&n32.to_le_bytes());
    for v in a.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<DenseMatrix> {
    let bad = |msg: &str| Error::InvalidArgument(format!("binary matrix: {msg}"));
    if bytes.len() < HEADER_LEN || bytes[..8] != MAGIC {
        return Err(bad("missing header"));
    }
    let m = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * m * n {
        return Err(bad("payload length does not match header"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix::from_col_major(m, n, values))
}

pub fn write_binary(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(a)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let a = DenseMatrix::from_col_major(2, 1, vec![1.0, -0.0]);
        let b = to_bytes(&a).unwrap();
        assert_eq!(&b[..8], b"OTFSKAH1");
        assert_eq!(&b[8..16], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(b.len(), 32);
        assert!(from_bytes(&b).unwrap().bit_eq(&a));
    }

    #[test]
    fn truncated_payload_rejected() {
        let b = to_bytes(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!(from_bytes(&b[..b.len() - 1]).is_err());
        assert!(from_bytes(&b[..10]).is_err());
    }
}
