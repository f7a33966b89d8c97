//! Matrix Market I/O: coordinate symmetric real matrices in, coordinate
//! symmetric or dense array matrices out.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dynev_core::SparseSymMatrix;

use crate::error::{io_err, DynevError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    Symmetric,
    General,
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseSymMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_matrix(BufReader::new(file), path)
}

/// Parses a `coordinate real|integer symmetric|general` matrix. General
/// matrices must be exactly symmetric; symmetric ones may list either triangle.
pub fn parse_matrix<R: BufRead>(reader: R, path: &Path) -> Result<SparseSymMatrix> {
    let err = |line: usize, msg: String| DynevError::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header.map_err(io_err(path))?;
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(1, format!("not a Matrix Market header: {header:?}")));
    }
    if words[2] != "coordinate" {
        return Err(err(1, format!("unsupported format {:?}; expected coordinate", words[2])));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(err(1, format!("unsupported field {:?}; expected real or integer", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(io_err(path))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let mut next_usize = |name: &str| -> Result<usize> {
            fields
                .next()
                .ok_or_else(|| err(lineno, format!("missing {name}")))?
                .parse::<usize>()
                .map_err(|e| err(lineno, format!("bad {name}: {e}")))
        };
        match size {
            None => {
                let rows = next_usize("row count")?;
                let cols = next_usize("column count")?;
                let nnz = next_usize("entry count")?;
                if rows != cols || rows == 0 {
                    return Err(err(lineno, format!("matrix must be square and non-empty, got {rows}x{cols}")));
                }
                size = Some((rows, nnz));
                entries.reserve(nnz);
            }
            Some((n, _)) => {
                let i = next_usize("row")?;
                let j = next_usize("column")?;
                let v: f64 = fields
                    .next()
                    .ok_or_else(|| err(lineno, "missing value".into()))?
                    .parse()
                    .map_err(|e| err(lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(err(lineno, format!("index ({i}, {j}) outside 1..={n}")));
                }
                if !v.is_finite() {
                    return Err(err(lineno, "non-finite value".into()));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(err(1, format!("size line promises {nnz} entries, found {}", entries.len())));
    }

    let triplets: Vec<(usize, usize, f64)> = match symmetry {
        Symmetry::Symmetric => entries,
        Symmetry::General => {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for &(i, j, v) in &entries {
                if i >= j {
                    lower.push((i, j, v));
                } else {
                    upper.push((j, i, v));
                }
            }
            lower.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            upper.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            let off_lower: Vec<_> = lower.iter().filter(|e| e.0 != e.1).copied().collect();
            if off_lower != upper {
                return Err(err(1, "general matrix is not symmetric".into()));
            }
            lower
        }
    };
    Ok(SparseSymMatrix::from_sym_triplets(n, &triplets)?)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &SparseSymMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    format_matrix(&mut w, a).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Lower triangle, 1-based, shortest round-trip floats.
pub fn format_matrix<W: Write>(w: &mut W, a: &SparseSymMatrix) -> std::io::Result<()> {
    let lower: Vec<_> = a.lower_triplets().collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Dense `rows × columns.len()` matrix whose columns are given, in array format.
pub fn write_dense_columns(path: impl AsRef<Path>, rows: usize, columns: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix array real general")?;
        writeln!(w, "{} {}", rows, columns.len())?;
        for c in columns {
            for x in c {
                writeln!(w, "{x:e}")?;
            }
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

/// Reads an `array real general` matrix back as its columns.
pub fn read_dense_columns(path: impl AsRef<Path>) -> Result<(usize, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let err = |line: usize, msg: String| DynevError::Parse { path: path.to_path_buf(), line, msg };
    let mut values = Vec::new();
    let mut size: Option<(usize, usize)> = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(io_err(path))?;
        let t = line.trim();
        if lineno == 1 {
            if !t.to_ascii_lowercase().starts_with("%%matrixmarket matrix array real") {
                return Err(err(1, "expected an array real header".into()));
            }
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if size.is_none() {
            let dims: Vec<usize> = t
                .split_whitespace()
                .map(|s| s.parse::<usize>().map_err(|e| err(lineno, format!("bad size: {e}"))))
                .collect::<Result<_>>()?;
            if dims.len() != 2 {
                return Err(err(lineno, "size line needs rows and columns".into()));
            }
            size = Some((dims[0], dims[1]));
        } else {
            values.push(t.parse::<f64>().map_err(|e| err(lineno, format!("bad value: {e}")))?);
        }
    }
    let (rows, cols) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    if values.len() != rows * cols {
        return Err(err(1, format!("expected {} values, found {}", rows * cols, values.len())));
    }
    Ok((rows, values.chunks(rows.max(1)).map(|c| c.to_vec()).collect()))
}
