//! Binary container for operators and states.
//!
//! Layout, all integers little-endian u64 and all floats little-endian f64:
//! the 8-byte magic `RCTKMAT1`, rows, cols, length of a UTF-8 JSON metadata
//! block, the block itself, then the entries column by column as (re, im).
//! The metadata always carries the tensor factors under `labels`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rctk_core::quantum::{CMatrix, HilbertSpace, OperatorMatrix};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"RCTKMAT1";

fn bad(msg: impl Into<String>) -> CliError {
    CliError::invalid(format!("matrix container: {}", msg.into()))
}

/// Writes `op` with `extra` merged into the metadata (e.g. β and the supersystem parameters).
pub fn write_matrix<W: Write>(mut w: W, op: &OperatorMatrix, extra: Value) -> std::io::Result<()> {
    let labels: Vec<Value> = op.space.factors().iter().map(|(n, d)| json!([n, d])).collect();
    let mut meta = serde_json::Map::new();
    if let Value::Object(m) = extra {
        meta.extend(m);
    }
    meta.insert("labels".into(), Value::Array(labels));
    let meta = serde_json::to_vec(&Value::Object(meta)).expect("metadata serializes");
    let m = &op.entries;
    w.write_all(MAGIC)?;
    for n in [m.nrows(), m.ncols(), meta.len()] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&meta)?;
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<(OperatorMatrix, Value)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic"));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let len = read_u64(&mut r)? as usize;
    if rows.checked_mul(cols).is_none_or(|n| n > 1 << 28) || len > 1 << 24 {
        return Err(bad("implausible sizes"));
    }
    let mut meta = vec![0u8; len];
    r.read_exact(&mut meta).map_err(|_| bad("truncated metadata"))?;
    let meta: Value = serde_json::from_slice(&meta).map_err(|e| bad(e.to_string()))?;
    let labels: Vec<(String, usize)> =
        serde_json::from_value(meta["labels"].clone()).map_err(|_| bad("metadata lacks tensor labels"))?;
    let space = HilbertSpace::new(&labels)?;
    if space.dim() != rows || rows != cols {
        return Err(bad("shape does not match the tensor labels"));
    }
    let mut buf = vec![0u8; rows * cols * 16];
    r.read_exact(&mut buf).map_err(|_| bad("truncated entries"))?;
    let vals: Vec<Complex64> = buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let op = OperatorMatrix::new(space, CMatrix::from_vec(rows, cols, vals))?;
    Ok((op, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rctk_core::quantum::{build_supersystem, gibbs, SupersystemSpec, SystemOperator, TlsRc};

    fn state() -> OperatorMatrix {
        let s = build_supersystem(&SupersystemSpec::TlsRc(TlsRc {
            mu: 1.0,
            lambda: 0.3,
            omega: 1.2,
            coupling: SystemOperator::SigmaX,
            n_max: 4,
            renormalize: false,
        }))
        .unwrap();
        gibbs(&s.hamiltonian, 0.7).unwrap().density
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let rho = state();
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &rho, json!({"beta": 0.7})).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let (back, meta) = read_matrix(bytes.as_slice()).unwrap();
        assert_eq!(back.entries, rho.entries);
        assert_eq!(back.space, rho.space);
        assert_eq!(meta["beta"], json!(0.7));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let rho = state();
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &rho, Value::Null).unwrap();
        assert!(read_matrix(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(read_matrix(wrong.as_slice()).is_err());
        let mut shape = bytes.clone();
        shape[8] = 3;
        assert!(read_matrix(shape.as_slice()).is_err());
    }
}
