//! SYNT sidecar holding the generator's ground truth. Little-endian:
//!
//! | content | encoding |
//! |---|---|
//! | magic `SYNT` | 4 bytes |
//! | format version | `u16` (currently 1) |
//! | `n1`, `n2`, `n3`, `r`, `T`, `q` | `u64` each, `q` = generator AR order |
//! | generator AR coefficients | `q` × `f64` |
//! | `u` (`n1 x r x n3`), then `v` (`n2 x r x n3`) | `f64`, slice-major like TSR3 |
//! | core diagonals | `T·n3·r` × `f64`, time-major, then slice `k`, then `j` |

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor3};

use super::{atomic_write, SynGroundTruth};

pub const TRUTH_MAGIC: &[u8; 4] = b"SYNT";
pub const TRUTH_VERSION: u16 = 1;

pub fn write_ground_truth<W: Write>(w: &mut W, truth: &SynGroundTruth) -> Result<()> {
    let ud = truth.u.dims();
    let (n1, r, n3) = (ud.n1, ud.n2, ud.n3);
    w.write_all(TRUTH_MAGIC)?;
    w.write_all(&TRUTH_VERSION.to_le_bytes())?;
    for v in [n1, truth.v.dims().n1, n3, r, truth.cores.len(), truth.ar_coeffs.len()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    let mut put = |v: f64| w.write_all(&v.to_le_bytes());
    for &a in &truth.ar_coeffs {
        put(a)?;
    }
    for &x in truth.u.real_part().iter().chain(truth.v.real_part()) {
        put(x)?;
    }
    for core in &truth.cores {
        let vals = core.real_part();
        for k in 0..n3 {
            for j in 0..r {
                put(vals[k * r * r + j * r + j])?;
            }
        }
    }
    Ok(())
}

pub fn save_ground_truth(truth: &SynGroundTruth, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_ground_truth(w, truth))
}

pub fn load_ground_truth(path: &Path) -> Result<SynGroundTruth> {
    parse(&std::fs::read(path)?)
}

fn parse(buf: &[u8]) -> Result<SynGroundTruth> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = pos + n;
        let out = buf.get(pos..end).ok_or(Error::Truncated { expected: end as u64, found: buf.len() as u64 })?;
        pos = end;
        Ok(out)
    };
    if take(4)? != TRUTH_MAGIC {
        return Err(Error::MalformedHeader("missing SYNT magic".into()));
    }
    let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
    if version != TRUTH_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: TRUTH_VERSION });
    }
    let mut header = [0usize; 6];
    for h in header.iter_mut() {
        let v = u64::from_le_bytes(take(8)?.try_into().unwrap());
        *h = usize::try_from(v).map_err(|_| Error::MalformedHeader(format!("count {v} too large")))?;
    }
    let [n1, n2, n3, r, len, q] = header;
    let bad = |e: Error| Error::MalformedHeader(e.to_string());
    let (ud, vd, cd) = (Dims::new(n1, r, n3).map_err(bad)?, Dims::new(n2, r, n3).map_err(bad)?, Dims::new(r, r, n3).map_err(bad)?);
    let count = [q, ud.len(), vd.len(), len.saturating_mul(n3 * r)]
        .iter()
        .try_fold(0usize, |acc, &c| acc.checked_add(c))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::MalformedHeader("payload size overflows".into()))?;
    let body = take(count)?;
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut next = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
    let ar_coeffs = next(q);
    let u = Tensor3::from_real(ud, next(ud.len()))?;
    let v = Tensor3::from_real(vd, next(vd.len()))?;
    let cores = (0..len)
        .map(|_| {
            let diag = next(n3 * r);
            let mut vals = vec![0.0; cd.len()];
            for k in 0..n3 {
                for j in 0..r {
                    vals[k * r * r + j * r + j] = diag[k * r + j];
                }
            }
            Tensor3::from_real(cd, vals)
        })
        .collect::<Result<_>>()?;
    if pos != buf.len() {
        return Err(Error::MalformedHeader("trailing bytes after ground truth".into()));
    }
    Ok(SynGroundTruth { u, v, cores, ar_coeffs })
}
