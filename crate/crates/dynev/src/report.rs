//! CSV and JSON emitters. CSV output carries no timing so repeated runs with
//! the same seed are byte-identical.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{io_err, Result};
use crate::run::ProfileEvent;

pub fn write_csv<T: Serialize, W: Write>(w: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(io_err("<csv>"))?;
    Ok(())
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_csv_to<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    match path {
        Some(p) => write_csv(File::create(p).map_err(io_err(p))?, rows),
        None => write_csv(io::stdout().lock(), rows),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialRow {
    pub event: usize,
    pub t: usize,
    pub j: usize,
    #[serde(rename = "Phi_j")]
    pub phi: usize,
}

pub fn potential_rows(events: &[ProfileEvent]) -> Vec<PotentialRow> {
    events
        .iter()
        .flat_map(|e| {
            e.profile
                .potentials
                .iter()
                .enumerate()
                .map(move |(j, &phi)| PotentialRow { event: e.event, t: e.t, j, phi })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::StepRow;

    #[test]
    fn csv_schema_and_empty_options() {
        let rows = vec![StepRow {
            t: 0,
            lambda: 0.5,
            oracle_lambda_max: None,
            witness_quality: Some(1.0),
            recompute: 1,
            epoch: 0,
            touched_nnz: 12,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,lambda,oracle_lambda_max,witness_quality,recompute,epoch,touched_nnz\n0,0.5,,1.0,1,0,12\n"
        );
    }
}
