//! CSV tables and a compact binary format for sampled paths.
//!
//! Binary layout: 32-byte header (`b"LVYFLD01"`, metadata length, value count, reserved zero,
//! all `u64` little-endian), UTF-8 JSON metadata, then the values as little-endian `f64`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, ScaleTag};

pub const MAGIC: &[u8; 8] = b"LVYFLD01";

/// Writes rows with a header taken from the field names.
pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(|e| Error::Io(e.to_string()))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub origin: f64,
    pub spacing: f64,
    pub tag: ScaleTag,
    pub anchored: bool,
}

pub fn write_path<W: Write>(mut w: W, f: &GridField<f64>) -> Result<()> {
    let meta = PathMetadata { origin: f.origin, spacing: f.spacing, tag: f.tag, anchored: f.anchored };
    let json = serde_json::to_vec(&meta)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&(f.values.len() as u64).to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    w.write_all(&json)?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path<R: Read>(mut r: R) -> Result<GridField<f64>> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        return Err(Error::Io("not a path file (bad magic)".into()));
    }
    let word = |k: usize| u64::from_le_bytes(head[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (json_len, n) = (word(1) as usize, word(2) as usize);
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json)?;
    let meta: PathMetadata = serde_json::from_slice(&json)?;
    let mut raw = vec![0u8; 8 * n];
    r.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let mut f = GridField::new(meta.origin, meta.spacing, values)?;
    f.tag = meta.tag;
    f.anchored = meta.anchored;
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub value: f64,
}

/// CSV `(t, value)` for small paths.
pub fn write_path_csv<W: Write>(w: W, f: &GridField<f64>) -> Result<()> {
    let rows: Vec<PathRow> = (0..f.len()).map(|i| PathRow { t: f.time(i), value: f.values[i] }).collect();
    write_csv(w, &rows)
}
