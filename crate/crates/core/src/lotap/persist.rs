//! LOTP binary model format. Everything is little-endian.
//!
//! | content | encoding |
//! |---|---|
//! | magic `LOTP` | 4 bytes |
//! | format version | `u16` (currently 1) |
//! | `n1`, `n2`, `n3`, `T`, `r`, `p` | `u64` each |
//! | `φ` | `f64` |
//! | diag mode | `u8`: 0 = full, 1 = relaxed |
//! | `u` (`n1 x r x n3`) | `(re, im)` `f64` pairs |
//! | `v` (`n2 x r x n3`) | `(re, im)` `f64` pairs |
//! | `Ŝ_1..Ŝ_T` (`r x r x n3` each) | `(re, im)` `f64` pairs |
//! | `a_1..a_p` | `(re, im)` `f64` pairs, `im = 0` |
//! | AR estimator | `u8`: 0 = least squares, 1 = Toeplitz |
//! | `max_iters` | `u64` |
//! | `rel_tol` | `f64` |
//! | `seed` | `u64` |
//! | coefficient flags | `u8`: bit 0 rank deficient, bit 1 stationary |
//! | iterations run `I` | `u64` |
//! | rel-change trace | `I` × `f64` |
//! | objective trace | `I` × `f64` |
//! | coefficient trace | `I·p` × `f64` |
//! | converged | `u8` |
//! | degenerate updates | `u64` |
//! | rejected core sweeps | `u64` |
//!
//! Wall-clock step timings are not stored, so identical fits give identical
//! files; a loaded model has an empty timing map.
//!
//! Tensors are stored slice-major: frontal slice `k`, then column `j`, then
//! row `i`. `u` and `v` are real, so their `im` entries are exactly zero.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::ar::{ArCoefficients, ArEstimator};
use crate::data::atomic_write;
use crate::error::{Error, Result};
use crate::tensor::{CMat, Dims, FourierTensor3, Tensor3};

use super::{DiagMode, FitConfig, FitReport, LotapModel};

pub const MODEL_MAGIC: &[u8; 4] = b"LOTP";
pub const MODEL_VERSION: u16 = 1;

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_complex<W: Write>(w: &mut W, values: impl Iterator<Item = Complex64>) -> Result<()> {
    for z in values {
        put_f64(w, z.re)?;
        put_f64(w, z.im)?;
    }
    Ok(())
}

pub fn write_model<W: Write>(w: &mut W, model: &LotapModel) -> Result<()> {
    let d = model.dims();
    let c = &model.config;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    for v in [d.n1, d.n2, d.n3, model.s_hat.len(), c.r, c.p] {
        put_u64(w, v as u64)?;
    }
    put_f64(w, c.phi)?;
    w.write_all(&[match c.diag_mode {
        DiagMode::Full => 0,
        DiagMode::Relaxed => 1,
    }])?;
    put_complex(w, model.u.to_complex_vec().into_iter())?;
    put_complex(w, model.v.to_complex_vec().into_iter())?;
    for s in &model.s_hat {
        for slice in s.slices() {
            put_complex(w, slice.iter().copied())?;
        }
    }
    put_complex(w, model.coeffs.a.iter().map(|&a| Complex64::new(a, 0.0)))?;

    w.write_all(&[match c.ar_estimator {
        ArEstimator::LeastSquares => 0,
        ArEstimator::Toeplitz => 1,
    }])?;
    put_u64(w, c.max_iters as u64)?;
    put_f64(w, c.rel_tol)?;
    put_u64(w, c.seed)?;
    w.write_all(&[model.coeffs.rank_deficient as u8 | (model.coeffs.stationary as u8) << 1])?;

    let rep = &model.report;
    put_u64(w, rep.iterations_run as u64)?;
    for &v in rep.rel_change_trace.iter().chain(&rep.objective_trace) {
        put_f64(w, v)?;
    }
    for a in &rep.coeff_trace {
        for &v in a {
            put_f64(w, v)?;
        }
    }
    w.write_all(&[rep.converged as u8])?;
    put_u64(w, rep.degenerate_updates as u64)?;
    put_u64(w, rep.rejected_core_sweeps as u64)?;
    Ok(())
}

pub fn save_model(model: &LotapModel, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_model(w, model))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(Error::Truncated {
            expected: self.pos as u64 + n as u64,
            found: self.buf.len() as u64,
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::MalformedHeader(format!("count {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        self.check_remaining(n, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        self.check_remaining(n, 16)?;
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }

    /// Fails before allocating when `n` items of `size` bytes cannot fit.
    fn check_remaining(&self, n: usize, size: usize) -> Result<()> {
        let need = (n as u64).saturating_mul(size as u64);
        let left = (self.buf.len() - self.pos) as u64;
        if need > left {
            return Err(Error::Truncated { expected: self.pos as u64 + need, found: self.buf.len() as u64 });
        }
        Ok(())
    }
}

fn real_tensor(dims: Dims, values: &[Complex64], what: &str) -> Result<Tensor3> {
    if values.iter().any(|z| z.im != 0.0) {
        return Err(Error::MalformedHeader(format!("{what} has a nonzero imaginary part")));
    }
    Tensor3::from_real(dims, values.iter().map(|z| z.re).collect())
}

fn flag(v: u8, what: &str) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::MalformedHeader(format!("bad {what} flag {v}"))),
    }
}

pub fn read_model<R: Read>(r: &mut R) -> Result<LotapModel> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse(&buf)
}

pub fn load_model(path: &Path) -> Result<LotapModel> {
    let bytes = std::fs::read(path)?;
    parse(&bytes)
}

fn parse(buf: &[u8]) -> Result<LotapModel> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4).map_err(|_| Error::MalformedHeader("file too short".into()))? != MODEL_MAGIC {
        return Err(Error::MalformedHeader("missing LOTP magic".into()));
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: MODEL_VERSION });
    }
    let (n1, n2, n3, t_len, r, p) = (c.usize()?, c.usize()?, c.usize()?, c.usize()?, c.usize()?, c.usize()?);
    let bad = |e: Error| Error::MalformedHeader(e.to_string());
    let u_dims = Dims::new(n1, r, n3).map_err(bad)?;
    let v_dims = Dims::new(n2, r, n3).map_err(bad)?;
    let s_dims = Dims::new(r, r, n3).map_err(bad)?;
    if p == 0 || t_len == 0 {
        return Err(Error::MalformedHeader("zero AR order or series length".into()));
    }
    let phi = c.f64()?;
    let diag_mode = match c.u8()? {
        0 => DiagMode::Full,
        1 => DiagMode::Relaxed,
        v => return Err(Error::MalformedHeader(format!("bad diag mode {v}"))),
    };
    let u = real_tensor(u_dims, &c.complex(u_dims.len())?, "u")?;
    let v = real_tensor(v_dims, &c.complex(v_dims.len())?, "v")?;
    c.check_remaining(t_len, 16 * s_dims.len())?;
    let mut s_hat = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        let vals = c.complex(s_dims.len())?;
        let slices = vals.chunks(r * r).map(|ch| CMat::from_column_slice(r, r, ch)).collect();
        s_hat.push(FourierTensor3::from_slices(slices)?);
    }
    let a: Vec<f64> = c.complex(p)?.iter().map(|z| z.re).collect();

    let ar_estimator = match c.u8()? {
        0 => ArEstimator::LeastSquares,
        1 => ArEstimator::Toeplitz,
        v => return Err(Error::MalformedHeader(format!("bad estimator {v}"))),
    };
    let max_iters = c.usize()?;
    let rel_tol = c.f64()?;
    let seed = c.u64()?;
    let flags = c.u8()?;
    let coeffs = ArCoefficients { a, rank_deficient: flags & 1 != 0, stationary: flags & 2 != 0 };

    let iterations_run = c.usize()?;
    let rel_change_trace = c.f64s(iterations_run)?;
    let objective_trace = c.f64s(iterations_run)?;
    c.check_remaining(iterations_run, 8 * p)?;
    let coeff_trace = (0..iterations_run).map(|_| c.f64s(p)).collect::<Result<_>>()?;
    let converged = flag(c.u8()?, "converged")?;
    let degenerate_updates = c.usize()?;
    let rejected_core_sweeps = c.usize()?;
    if c.pos != buf.len() {
        return Err(Error::MalformedHeader("trailing bytes after model".into()));
    }
    Ok(LotapModel {
        u,
        v,
        s_hat,
        coeffs,
        config: FitConfig { r, p, phi, diag_mode, max_iters, rel_tol, seed, ar_estimator },
        report: FitReport {
            iterations_run,
            rel_change_trace,
            objective_trace,
            coeff_trace,
            per_step_timings: Default::default(),
            converged,
            degenerate_updates,
            rejected_core_sweeps,
        },
    })
}
