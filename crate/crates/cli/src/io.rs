//! Artifact files: `#` metadata lines followed by a CSV table or a JSON body.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use elasel::bench::ProblemId;
use elasel::ela::FeatureVector;
use elasel::selector::{CvRow, PerformanceMatrix, PredictionMatrix};
use elasel::stats::median_in_place;
use elasel::{Error, Result};

/// Shortest round-trip text for a float; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) { format!("{x}") } else { format!("{x:e}") }
}

/// Writes `body` after `# key=value` lines, replacing any previous file.
pub fn write_with_meta(path: &Path, meta: &[(String, String)], body: &[u8]) -> Result<()> {
    let mut buf = Vec::with_capacity(body.len() + 128);
    for (k, v) in meta {
        writeln!(buf, "# {k}={v}")?;
    }
    buf.extend_from_slice(body);
    fs::write(path, buf)?;
    Ok(())
}

pub fn csv_body(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line, message: format!("{other:?}") },
    }
}

/// Rows of a commented CSV as header-keyed string maps.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<(u64, Vec<String>)>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::validation(format!("{} has no column {name:?}", path.display())))
}

fn parse<V: std::str::FromStr>(s: &str, line: u64, what: &str) -> Result<V> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("bad {what} {s:?}") })
}

/// Reads `# key=value` metadata lines.
pub fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect())
}

pub const FEATURE_KEY_COLUMNS: [&str; 5] = ["fid", "iid", "dim", "n_samples", "n_reps"];

pub fn features_csv(vectors: &[FeatureVector<f64>]) -> Result<Vec<u8>> {
    let names = vectors.first().map(|v| v.names.clone()).unwrap_or_default();
    let mut header: Vec<&str> = FEATURE_KEY_COLUMNS.to_vec();
    header.extend(names.iter().map(String::as_str));
    csv_body(
        &header,
        vectors.iter().map(|v| {
            let p = v.problem;
            let mut row = vec![p.fid.to_string(), p.iid.to_string(), p.dim.to_string(), v.n_samples.to_string(), v.n_reps.to_string()];
            row.extend(v.values.iter().map(|&x| fmt_f64(x)));
            row
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector<f64>>> {
    let (header, rows) = read_table(path)?;
    if header.len() <= FEATURE_KEY_COLUMNS.len() || header[..5] != FEATURE_KEY_COLUMNS {
        return Err(Error::validation(format!("{} is not a features file", path.display())));
    }
    let names: Vec<String> = header[5..].to_vec();
    rows.into_iter()
        .map(|(line, r)| {
            if r.len() != header.len() {
                return Err(Error::Parse { line, message: format!("expected {} fields, found {}", header.len(), r.len()) });
            }
            Ok(FeatureVector {
                problem: ProblemId::new(parse(&r[0], line, "fid")?, parse(&r[1], line, "iid")?, parse(&r[2], line, "dim")?),
                n_samples: parse(&r[3], line, "n_samples")?,
                n_reps: parse(&r[4], line, "n_reps")?,
                names: names.clone(),
                values: r[5..].iter().map(|s| parse(s, line, "feature value")).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub const PREDICTION_HEADER: [&str; 8] =
    ["fold", "rep", "fid", "iid", "algo_id", "pred_unscaled", "pred_log10", "true_precision"];

pub fn predictions_csv(rows: &[CvRow<f64>]) -> Result<Vec<u8>> {
    csv_body(
        &PREDICTION_HEADER,
        rows.iter().map(|r| {
            vec![
                r.fold.to_string(),
                r.rep.to_string(),
                r.fid.to_string(),
                r.iid.to_string(),
                r.algo_id.clone(),
                fmt_f64(r.pred_unscaled),
                fmt_f64(r.pred_log10),
                fmt_f64(r.true_precision),
            ]
        }),
    )
}

pub fn read_predictions(path: &Path) -> Result<(Vec<CvRow<f64>>, usize)> {
    let (header, rows) = read_table(path)?;
    let idx: Vec<usize> = PREDICTION_HEADER.iter().map(|c| column(&header, c, path)).collect::<Result<_>>()?;
    let dim = read_meta(path)?.get("dim").and_then(|d| d.parse().ok()).unwrap_or(0);
    let rows = rows
        .into_iter()
        .map(|(line, r)| {
            Ok(CvRow {
                fold: parse(&r[idx[0]], line, "fold")?,
                rep: parse(&r[idx[1]], line, "rep")?,
                fid: parse(&r[idx[2]], line, "fid")?,
                iid: parse(&r[idx[3]], line, "iid")?,
                algo_id: r[idx[4]].clone(),
                pred_unscaled: parse(&r[idx[5]], line, "prediction")?,
                pred_log10: parse(&r[idx[6]], line, "prediction")?,
                true_precision: parse(&r[idx[7]], line, "precision")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, dim))
}

/// Rebuilds the median prediction matrix and the true-precision matrix
/// from per-replication prediction rows.
pub fn matrices_from_rows(rows: &[CvRow<f64>], dim: usize) -> Result<(PredictionMatrix<f64>, PerformanceMatrix<f64>)> {
    let mut algos: Vec<String> = Vec::new();
    type Cell = (Vec<f64>, Vec<f64>, f64, usize);
    let mut cells: BTreeMap<(u32, u32), BTreeMap<usize, Cell>> = BTreeMap::new();
    for r in rows {
        let a = match algos.iter().position(|x| *x == r.algo_id) {
            Some(a) => a,
            None => {
                algos.push(r.algo_id.clone());
                algos.len() - 1
            }
        };
        let cell = cells.entry((r.fid, r.iid)).or_default().entry(a).or_insert((Vec::new(), Vec::new(), r.true_precision, r.fold));
        cell.0.push(r.pred_unscaled);
        cell.1.push(r.pred_log10);
    }
    let mut instances = Vec::new();
    let (mut pu, mut pl, mut truth, mut folds) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for ((fid, iid), row) in cells {
        if row.len() != algos.len() {
            return Err(Error::validation(format!("predictions for (fid {fid}, iid {iid}) miss some algorithms")));
        }
        instances.push(ProblemId::new(fid, iid, dim));
        let mut u = Vec::new();
        let mut l = Vec::new();
        let mut t = Vec::new();
        let mut fold = 0;
        for (_, (mut cu, mut cl, tp, f)) in row {
            u.push(median_in_place(&mut cu));
            l.push(median_in_place(&mut cl));
            t.push(tp);
            fold = f;
        }
        pu.push(u);
        pl.push(l);
        truth.push(t);
        folds.push(fold);
    }
    let perf = PerformanceMatrix::new(instances.clone(), algos.clone(), truth)?;
    let pred = PredictionMatrix::new(instances, algos, pu, pl, folds)?;
    Ok((pred, perf))
}
