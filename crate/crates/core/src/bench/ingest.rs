//! Performance CSV: `fid,iid,dim,algo_id,run,budget,precision`, one row per
//! run. Lines starting with `#` are metadata comments.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProblemId;
use crate::error::{Error, Result};
use crate::modcma::PerformanceRecord;
use crate::Real;

pub const PERFORMANCE_HEADER: [&str; 7] = ["fid", "iid", "dim", "algo_id", "run", "budget", "precision"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRun {
    pub fid: u32,
    pub iid: u32,
    pub dim: usize,
    pub algo_id: String,
    pub run: u32,
    pub budget: u64,
    pub precision: f64,
}

impl PerformanceRun {
    pub fn problem(&self) -> ProblemId {
        ProblemId::new(self.fid, self.iid, self.dim)
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        kind => Error::Parse { line, message: format!("{kind:?}") },
    }
}

/// Parses and validates per-run rows from any reader.
pub fn parse_performance_runs<R: Read>(reader: R) -> Result<Vec<PerformanceRun>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(PERFORMANCE_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", PERFORMANCE_HEADER, headers),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: PerformanceRun = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if !(row.precision.is_finite() && row.precision > 0.0) {
            return Err(Error::validation(format!(
                "line {line}: precision must be positive and finite, got {}",
                row.precision
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_performance_runs(path: impl AsRef<Path>) -> Result<Vec<PerformanceRun>> {
    parse_performance_runs(std::fs::File::open(path)?)
}

/// Reads per-run rows and aggregates them into one record per
/// `(fid, iid, dim, algo_id)`, in sorted key order.
pub fn ingest_performance<T: Real>(path: impl AsRef<Path>) -> Result<Vec<PerformanceRecord<T>>> {
    Ok(aggregate_runs(&read_performance_runs(path)?))
}

pub fn aggregate_runs<T: Real>(rows: &[PerformanceRun]) -> Vec<PerformanceRecord<T>> {
    let mut groups: BTreeMap<(ProblemId, &str), Vec<(u32, T)>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.problem(), r.algo_id.as_str()))
            .or_default()
            .push((r.run, T::of(r.precision)));
    }
    groups
        .into_iter()
        .map(|((problem, algo), mut runs)| {
            runs.sort_by_key(|&(run, _)| run);
            PerformanceRecord::from_runs(problem, algo, runs.into_iter().map(|(_, p)| p).collect())
        })
        .collect()
}

/// Writes rows with optional `#` comment lines ahead of the header.
pub fn write_performance_runs<W: Write>(mut out: W, comments: &[String], rows: &[PerformanceRun]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", PERFORMANCE_HEADER.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:e}",
            r.fid, r.iid, r.dim, r.algo_id, r.run, r.budget, r.precision
        )?;
    }
    Ok(())
}
