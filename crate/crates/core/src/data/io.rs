//! TSR3 binary series format and CSV import/export.
//!
//! TSR3 layout (all integers and floats little-endian):
//!
//! | bytes        | content                                          |
//! |--------------|--------------------------------------------------|
//! | 4            | magic `TSR3`                                     |
//! | 2            | format version, `u16` (currently 1)              |
//! | 4 × 8        | `n1`, `n2`, `n3`, `T` as `u64`                   |
//! | 8·T·n1·n2·n3 | `f64` values: time-major, then frontal slice `k`, then column `j`, then row `i` |
//! | optional     | label block: magic `LBLS`, `u64` count (= T), then per label a `u32` byte length and UTF-8 bytes |
//!
//! CSV layout: first line `dims,n1,n2,n3`; then one line per time point,
//! `label,v_0,...,v_{N-1}` with the values in the same order as TSR3.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor3};

use super::TensorSeries;

pub const TSR3_MAGIC: &[u8; 4] = b"TSR3";
pub const TSR3_VERSION: u16 = 1;
const LABEL_MAGIC: &[u8; 4] = b"LBLS";
const HEADER_LEN: u64 = 4 + 2 + 4 * 8;

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed write never leaves a partial file behind.
pub fn atomic_write<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_series<W: Write>(w: &mut W, series: &TensorSeries) -> Result<()> {
    let d = series.dims();
    w.write_all(TSR3_MAGIC)?;
    w.write_all(&TSR3_VERSION.to_le_bytes())?;
    for v in [d.n1, d.n2, d.n3, series.len()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for slice in series.slices() {
        for v in slice.real_part() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    if let Some(labels) = series.labels() {
        w.write_all(LABEL_MAGIC)?;
        w.write_all(&(labels.len() as u64).to_le_bytes())?;
        for l in labels {
            w.write_all(&(l.len() as u32).to_le_bytes())?;
            w.write_all(l.as_bytes())?;
        }
    }
    Ok(())
}

pub fn save_series(series: &TensorSeries, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_series(w, series))
}

fn read_u64(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes.try_into().expect("8-byte field"))
}

/// Reads a TSR3 stream of `available` bytes.
pub fn read_series<R: Read>(r: &mut R, available: u64) -> Result<TensorSeries> {
    if available < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "{available} bytes is shorter than the {HEADER_LEN}-byte header"
        )));
    }
    let mut header = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut header)?;
    if &header[..4] != TSR3_MAGIC {
        return Err(Error::MalformedHeader("missing TSR3 magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != TSR3_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: TSR3_VERSION });
    }
    let field = |i: usize| read_u64(&header[6 + 8 * i..14 + 8 * i]);
    let (n1, n2, n3, len) = (field(0), field(1), field(2), field(3));
    let to_usize = |v: u64| {
        usize::try_from(v).map_err(|_| Error::MalformedHeader(format!("dimension {v} too large")))
    };
    let dims = Dims::new(to_usize(n1)?, to_usize(n2)?, to_usize(n3)?)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let len = to_usize(len)?;
    if len == 0 {
        return Err(Error::MalformedHeader("series length is zero".into()));
    }
    let payload = (dims.len() as u64)
        .checked_mul(len as u64)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::MalformedHeader("payload size overflows".into()))?;
    if available - HEADER_LEN < payload {
        return Err(Error::Truncated { expected: HEADER_LEN + payload, found: available });
    }
    let mut slices = Vec::with_capacity(len);
    let mut buf = vec![0u8; dims.len() * 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        slices.push(Tensor3::from_real(dims, values)?);
    }
    let series = TensorSeries::new(slices)?;
    let rest = available - HEADER_LEN - payload;
    if rest == 0 {
        return Ok(series);
    }
    let mut tail = Vec::with_capacity(rest as usize);
    r.take(rest).read_to_end(&mut tail)?;
    if (tail.len() as u64) < rest {
        return Err(Error::Truncated { expected: available, found: HEADER_LEN + payload + tail.len() as u64 });
    }
    series.with_labels(parse_labels(&tail, len)?)
}

fn parse_labels(tail: &[u8], len: usize) -> Result<Vec<String>> {
    let bad = |m: &str| Error::MalformedHeader(format!("label block: {m}"));
    if tail.len() < 12 || &tail[..4] != LABEL_MAGIC {
        return Err(bad("missing LBLS magic"));
    }
    let count = read_u64(&tail[4..12]) as usize;
    if count != len {
        return Err(bad(&format!("{count} labels for {len} time points")));
    }
    let mut pos = 12;
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let n = tail
            .get(pos..pos + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
            .ok_or(Error::Truncated { expected: (pos + 4) as u64, found: tail.len() as u64 })?;
        pos += 4;
        let bytes = tail
            .get(pos..pos + n)
            .ok_or(Error::Truncated { expected: (pos + n) as u64, found: tail.len() as u64 })?;
        labels.push(String::from_utf8(bytes.to_vec()).map_err(|_| bad("label is not UTF-8"))?);
        pos += n;
    }
    if pos != tail.len() {
        return Err(bad("trailing bytes after labels"));
    }
    Ok(labels)
}

pub fn load_series(path: &Path) -> Result<TensorSeries> {
    let file = File::open(path)?;
    let available = file.metadata()?.len();
    read_series(&mut BufReader::new(file), available)
}

pub fn save_series_csv(series: &TensorSeries, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        let d = series.dims();
        writeln!(w, "dims,{},{},{}", d.n1, d.n2, d.n3)?;
        for (t, slice) in series.slices().iter().enumerate() {
            let label = series.labels().map_or(String::new(), |l| l[t].clone());
            if label.contains([',', '\n', '"']) {
                return Err(Error::Csv(format!("label {label:?} needs quoting")));
            }
            write!(w, "{label}")?;
            for v in slice.real_part() {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn load_series_csv(path: &Path) -> Result<TensorSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv(e.to_string()))?;
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Csv("empty file".into()))?
        .map_err(|e| Error::Csv(e.to_string()))?;
    if header.len() != 4 || &header[0] != "dims" {
        return Err(Error::Csv("first line must be `dims,n1,n2,n3`".into()));
    }
    let parse_dim = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Csv(format!("bad dimension {s:?}")));
    let dims = Dims::new(parse_dim(&header[1])?, parse_dim(&header[2])?, parse_dim(&header[3])?)?;
    let mut slices = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != dims.len() + 1 {
            return Err(Error::Csv(format!(
                "row {} has {} values, expected {}",
                line + 1,
                rec.len().saturating_sub(1),
                dims.len()
            )));
        }
        labels.push(rec[0].to_string());
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Csv(format!("bad value {s:?} in row {}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        slices.push(Tensor3::from_real(dims, values)?);
    }
    let series = TensorSeries::new(slices)?;
    if labels.iter().all(String::is_empty) {
        Ok(series)
    } else {
        series.with_labels(labels)
    }
}
