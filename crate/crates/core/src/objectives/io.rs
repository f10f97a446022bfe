//! Dataset persistence.
//!
//! CSV: a header row `x0,...,x{d-1},y`, then one row per sample with the `d`
//! features followed by the response. Values use the shortest decimal form
//! that round-trips exactly.
//!
//! Binary container (little-endian):
//!
//! ```text
//! magic    4 bytes  "SPDS"
//! version  u32      1
//! n        u64
//! d        u64
//! family   u8       0 = linear, 1 = logistic
//! seed     u64
//! X        n*d f64  row-major
//! y        n f64
//! ```

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::{Dataset, Family, ObjectiveModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPDS";
const VERSION: u32 = 1;

pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.d()).map(|j| format!("x{j}")).collect();
    header.push("y".to_string());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(data.d() + 1);
    for (row, y) in data.x().rows().into_iter().zip(data.y().iter()) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(y.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::Format("need at least one feature column and a response".into()));
    }
    let d = width - 1;
    let mut features = Vec::new();
    let mut responses = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!("row {}, column {col}: cannot parse {field:?}", line + 1))
            })?;
            if col < d {
                features.push(v);
            } else {
                responses.push(v);
            }
        }
    }
    let n = responses.len();
    let x = Array2::from_shape_vec((n, d), features).map_err(|e| Error::Format(e.to_string()))?;
    Dataset::new(x, Array1::from(responses))
}

pub fn write_binary<W: Write>(mut w: W, model: &ObjectiveModel, seed: u64) -> Result<()> {
    let data = model.data();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(data.n() as u64).to_le_bytes())?;
    w.write_all(&(data.d() as u64).to_le_bytes())?;
    let family: u8 = match model.family() {
        Family::Linear => 0,
        Family::Logistic => 1,
    };
    w.write_all(&[family])?;
    w.write_all(&seed.to_le_bytes())?;
    for v in data.x().iter().chain(data.y().iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary container back into a model and the seed it was built from.
pub fn read_binary<R: Read>(mut r: R) -> Result<(ObjectiveModel, u64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dataset container (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let d = read_u64(&mut r)? as usize;
    let mut family = [0u8; 1];
    r.read_exact(&mut family)?;
    let family = match family[0] {
        0 => Family::Linear,
        1 => Family::Logistic,
        other => return Err(Error::Format(format!("unknown family tag {other}"))),
    };
    let seed = read_u64(&mut r)?;
    let total = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("dataset shape overflows".into()))?;
    let x = read_f64s(&mut r, total)?;
    let y = read_f64s(&mut r, n)?;
    let x = Array2::from_shape_vec((n, d), x).map_err(|e| Error::Format(e.to_string()))?;
    let model = ObjectiveModel::new(family, Dataset::new(x, Array1::from(y))?)?;
    Ok((model, seed))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}
