//! Update streams as JSON lines: `{"t": 1, "idx": [0, 4], "val": [0.5, -1.0]}`.
//!
//! `t` counts from 1 and must be consecutive; indices are 0-based.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dynev_core::SparseVector;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, DynevError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    t: u64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

pub fn read_stream(path: impl AsRef<Path>, n: usize) -> Result<Vec<SparseVector>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_stream(BufReader::new(file), n, path)
}

pub fn parse_stream<R: BufRead>(reader: R, n: usize, path: &Path) -> Result<Vec<SparseVector>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| DynevError::Parse { path: path.to_path_buf(), line: lineno, msg };
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let expected = out.len() as u64 + 1;
        if rec.t != expected {
            return Err(err(format!("expected t = {expected}, found {}", rec.t)));
        }
        let v = SparseVector::from_unsorted(n, &rec.idx, &rec.val).map_err(|e| err(e.to_string()))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_stream(path: impl AsRef<Path>, updates: &[SparseVector]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    format_stream(&mut w, updates)?;
    w.flush().map_err(io_err(path))
}

pub fn format_stream<W: Write>(w: &mut W, updates: &[SparseVector]) -> Result<()> {
    for (t, v) in updates.iter().enumerate() {
        let rec = Record { t: t as u64 + 1, idx: v.indices().to_vec(), val: v.values().to_vec() };
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n").map_err(io_err(Path::new("<stream>")))?;
    }
    Ok(())
}
