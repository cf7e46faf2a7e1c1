use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use elasel::bench::{aggregate_runs, read_performance_runs, write_performance_runs, PerformanceRun, ProblemId};
use elasel::ela::{compute_features, select_features, FeatureVector};
use elasel::modcma::{
    enumerate_variants, parse_portfolio, run_portfolio_detailed, select_portfolio, ModuleConfig, PerformanceRecord,
    RunOutcome, VariantFilter,
};
use elasel::selector::{
    default_threshold_grid, evaluate, log_choices, run_cv, selector_metric, threshold_table, tune_threshold,
    unscaled_choices, vbs, EvalReport, Metric, PerformanceMatrix, ThresholdRow, TunedThreshold,
};
use elasel::{seed, Error, Result};

use crate::config::PipelineConfig;
use crate::io::*;

/// Eight variants spanning the module families; used when no portfolio
/// file is configured.
pub const DEFAULT_PORTFOLIO: [&str; 8] = [
    "00000000000",
    "10000000002",
    "01000000000",
    "00110000010",
    "00001010000",
    "00000100001",
    "00100001020",
    "11000000001",
];

/// A validated configuration bound to an output directory.
pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
    hash: String,
}

impl Context {
    pub fn new(config: PipelineConfig, out: PathBuf) -> Result<Self> {
        config.validate()?;
        fs::create_dir_all(&out).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("cannot create output directory {}: {e}", out.display())))
        })?;
        let hash = config.hash();
        Ok(Context { config, out, hash })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn meta(&self, command: &str) -> Vec<(String, String)> {
        vec![
            ("command".into(), command.into()),
            ("config_hash".into(), self.hash.clone()),
            ("seed".into(), self.config.seed.to_string()),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&self, configured: &Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
        let p = configured.clone().unwrap_or_else(|| self.path(default_name));
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::validation(format!("missing input {}", p.display())))
        }
    }

    fn problems(&self) -> Vec<ProblemId> {
        let s = &self.config.suite;
        s.functions.iter().flat_map(|&f| s.instances.iter().map(move |&i| ProblemId::new(f, i, s.dim))).collect()
    }

    fn write_json<V: Serialize>(&self, name: &str, command: &str, value: &V) -> Result<PathBuf> {
        let path = self.path(name);
        let doc = serde_json::json!({
            "command": command,
            "config_hash": self.hash,
            "seed": self.config.seed,
            "config": self.config,
            "result": value,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn outcome_rows(outcomes: &[RunOutcome<f64>]) -> Result<Vec<PerformanceRun>> {
    outcomes
        .iter()
        .map(|o| {
            if o.evals_used > o.budget {
                return Err(Error::validation(format!("{} on {} used {} > {} evaluations", o.algo_id, o.problem, o.evals_used, o.budget)));
            }
            Ok(PerformanceRun {
                fid: o.problem.fid,
                iid: o.problem.iid,
                dim: o.problem.dim,
                algo_id: o.algo_id.clone(),
                run: o.run,
                budget: o.budget,
                precision: o.precision,
            })
        })
        .collect()
}

fn write_runs(ctx: &Context, name: &str, command: &str, rows: &[PerformanceRun]) -> Result<PathBuf> {
    let path = ctx.path(name);
    let comments: Vec<String> = ctx.meta(command).into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut buf = Vec::new();
    write_performance_runs(&mut buf, &comments, rows)?;
    fs::write(&path, buf)?;
    Ok(path)
}

fn write_medians(ctx: &Context, name: &str, command: &str, records: &[PerformanceRecord<f64>]) -> Result<PathBuf> {
    let body = csv_body(
        &["fid", "iid", "dim", "algo_id", "runs", "median_precision"],
        records.iter().map(|r| {
            vec![
                r.problem.fid.to_string(),
                r.problem.iid.to_string(),
                r.problem.dim.to_string(),
                r.algo_id.clone(),
                r.runs.to_string(),
                format!("{:e}", r.median_precision),
            ]
        }),
    )?;
    let path = ctx.path(name);
    write_with_meta(&path, &ctx.meta(command), &body)?;
    Ok(path)
}

fn resolve_portfolio(ctx: &Context) -> Result<Vec<ModuleConfig>> {
    let text = match ctx.config.portfolio.file.as_str() {
        "default" => DEFAULT_PORTFOLIO.join("\n"),
        "auto-select" => {
            let p = ctx.path("portfolio.txt");
            fs::read_to_string(&p).map_err(|_| {
                Error::validation(format!("auto-select needs {}; run select-portfolio first", p.display()))
            })?
        }
        file => fs::read_to_string(file)?,
    };
    let portfolio = parse_portfolio(&text)?;
    if portfolio.is_empty() {
        return Err(Error::validation("portfolio is empty"));
    }
    Ok(portfolio)
}

/// Runs the portfolio on the suite; writes per-run and median tables.
pub fn run_portfolio(ctx: &Context) -> Result<Vec<PathBuf>> {
    let portfolio = resolve_portfolio(ctx)?;
    let p = &ctx.config.portfolio;
    let outcomes = run_portfolio_detailed::<f64>(&ctx.problems(), &portfolio, p.budget, p.runs, ctx.config.seed)?;
    let rows = outcome_rows(&outcomes)?;
    let records = aggregate_runs::<f64>(&rows);
    Ok(vec![
        write_runs(ctx, "performance_runs.csv", "run-portfolio", &rows)?,
        write_medians(ctx, "performance_median.csv", "run-portfolio", &records)?,
    ])
}

/// Runs candidate variants and keeps the per-function winners.
pub fn select_portfolio_cmd(ctx: &Context) -> Result<Vec<PathBuf>> {
    let p = &ctx.config.portfolio;
    let filter: Option<VariantFilter> = p.filter.as_deref().map(str::parse).transpose()?;
    let pool = enumerate_variants(filter.as_ref());
    if pool.is_empty() {
        return Err(Error::validation("variant filter matches no configuration"));
    }
    let candidates: Vec<ModuleConfig> = if pool.len() <= p.candidates {
        pool
    } else {
        let mut rng = seed::rng(seed::derive_labeled(ctx.config.seed, "candidates", &[]));
        let mut idx = sample(&mut rng, pool.len(), p.candidates).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i]).collect()
    };
    let outcomes = run_portfolio_detailed::<f64>(&ctx.problems(), &candidates, p.budget, p.runs, ctx.config.seed)?;
    let rows = outcome_rows(&outcomes)?;
    let records = aggregate_runs::<f64>(&rows);
    let winners = select_portfolio(&records, p.size)?;
    let mut text = String::new();
    for (k, v) in ctx.meta("select-portfolio") {
        text.push_str(&format!("# {k}={v}\n"));
    }
    for w in &winners {
        text.push_str(w);
        text.push('\n');
    }
    let portfolio_path = ctx.path("portfolio.txt");
    fs::write(&portfolio_path, text)?;
    Ok(vec![write_runs(ctx, "candidate_runs.csv", "select-portfolio", &rows)?, portfolio_path])
}

/// Column-wise min-max scaling to `[0, 1]`; constant columns map to 0.
pub fn normalize(vectors: &[FeatureVector<f64>]) -> Vec<FeatureVector<f64>> {
    let p = vectors.first().map_or(0, |v| v.values.len());
    let bounds: Vec<(f64, f64)> = (0..p)
        .map(|k| vectors.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.values[k]), hi.max(v.values[k]))))
        .collect();
    vectors
        .iter()
        .map(|v| {
            let values = v
                .values
                .iter()
                .zip(&bounds)
                .map(|(&x, &(lo, hi))| if hi > lo { ((x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 })
                .collect();
            FeatureVector { values, ..v.clone() }
        })
        .collect()
}

pub fn extract_features(ctx: &Context, report_normalized: bool) -> Result<Vec<PathBuf>> {
    let f = &ctx.config.features;
    let names = ctx.config.feature_subset()?;
    let seed = seed::derive_labeled(ctx.config.seed, "features", &[]);
    let vectors = ctx
        .problems()
        .par_iter()
        .map(|id| {
            let problem = elasel::bench::make_problem::<f64>(id.fid, id.iid, id.dim)?;
            let full = compute_features(&problem, f.n_samples, f.reps, seed)?;
            select_features(&full, &names)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut meta = ctx.meta("extract-features");
    meta.push(("n_samples".into(), f.n_samples.to_string()));
    meta.push(("n_reps".into(), f.reps.to_string()));
    let path = ctx.path("features.csv");
    write_with_meta(&path, &meta, &features_csv(&vectors)?)?;
    let mut out = vec![path];
    if report_normalized {
        let path = ctx.path("features_normalized.csv");
        write_with_meta(&path, &meta, &features_csv(&normalize(&vectors))?)?;
        out.push(path);
    }
    Ok(out)
}

fn load_performance(ctx: &Context) -> Result<PerformanceMatrix<f64>> {
    let path = ctx.input(&ctx.config.inputs.performance, "performance_runs.csv")?;
    let records = aggregate_runs::<f64>(&read_performance_runs(&path)?);
    PerformanceMatrix::from_records(&records)
}

fn grid(ctx: &Context) -> Vec<f64> {
    ctx.config.selection.grid.clone().unwrap_or_else(default_threshold_grid)
}

pub fn train_eval(ctx: &Context) -> Result<Vec<PathBuf>> {
    let perf = load_performance(ctx)?;
    let features = read_features(&ctx.input(&ctx.config.inputs.features, "features.csv")?)?;
    let seed = seed::derive_labeled(ctx.config.seed, "train-eval", &[]);
    let cv = run_cv(&features, &perf, &ctx.config.cv, &ctx.config.forest, seed)?;
    let report = evaluate(&cv.predictions, &perf, &grid(ctx))?;
    let pred_path = ctx.path("predictions.csv");
    let mut meta = ctx.meta("train-eval");
    meta.push(("dim".into(), ctx.config.suite.dim.to_string()));
    write_with_meta(&pred_path, &meta, &predictions_csv(&cv.rows)?)?;
    Ok(vec![pred_path, ctx.write_json("report.json", "train-eval", &report)?])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdFile {
    pub tuned: TunedThreshold<f64>,
    pub unscaled: f64,
    pub log: f64,
    pub table: Vec<ThresholdRow<f64>>,
    pub tuning: String,
}

pub fn tune_threshold_cmd(ctx: &Context) -> Result<Vec<PathBuf>> {
    let path = ctx.input(&ctx.config.inputs.predictions, "predictions.csv")?;
    let (rows, dim) = read_predictions(&path)?;
    let (pred, perf) = matrices_from_rows(&rows, dim)?;
    let metric = ctx.config.selection.metric;
    let g = grid(ctx);
    let file = ThresholdFile {
        tuned: tune_threshold(&pred, &perf, &g, metric)?,
        unscaled: selector_metric(&unscaled_choices(&pred), &perf, metric)?,
        log: selector_metric(&log_choices(&pred), &perf, metric)?,
        table: threshold_table(&pred, &perf, &g)?,
        tuning: "in-sample".into(),
    };
    Ok(vec![ctx.write_json("threshold.json", "tune-threshold", &file)?])
}

#[derive(Deserialize)]
struct ReportDoc {
    result: EvalReport<f64>,
}

pub fn load_report(path: &Path) -> Result<EvalReport<f64>> {
    let text = fs::read_to_string(path)?;
    let doc: ReportDoc =
        serde_json::from_str(&text).map_err(|e| Error::validation(format!("report {}: {e}", path.display())))?;
    Ok(doc.result)
}

/// Plot-ready CSVs for the five figures.
pub fn report_figures(ctx: &Context) -> Result<Vec<PathBuf>> {
    let report = load_report(&ctx.input(&ctx.config.inputs.report, "report.json")?)?;
    let (rows, dim) = read_predictions(&ctx.input(&ctx.config.inputs.predictions, "predictions.csv")?)?;
    let (pred, perf) = matrices_from_rows(&rows, dim)?;
    let meta = ctx.meta("report-figures");
    let mut out = Vec::new();
    let mut emit = |name: &str, header: &[&str], body: Vec<Vec<String>>| -> Result<()> {
        let path = ctx.path(name);
        write_with_meta(&path, &meta, &csv_body(header, body)?)?;
        out.push(path);
        Ok(())
    };

    let mut fig1 = Vec::new();
    for (i, id) in perf.instances.iter().enumerate() {
        for (a, algo) in perf.algos.iter().enumerate() {
            let p = perf.precision[i][a];
            fig1.push(vec![id.fid.to_string(), id.iid.to_string(), algo.clone(), fmt_f64(p), fmt_f64(p.log10())]);
        }
    }
    emit("fig1_performance.csv", &["fid", "iid", "algo_id", "median_precision", "log10_precision"], fig1)?;

    let mut wins = vec![0usize; perf.n_algos()];
    for (a, _) in vbs(&perf) {
        wins[a] += 1;
    }
    emit(
        "fig2_winners.csv",
        &["algo_id", "wins"],
        perf.algos.iter().zip(&wins).map(|(a, w)| vec![a.clone(), w.to_string()]).collect(),
    )?;

    let features_path = ctx.input(&ctx.config.inputs.features, "features.csv")?;
    let mut fig3 = Vec::new();
    for v in normalize(&read_features(&features_path)?) {
        for (name, x) in v.names.iter().zip(&v.values) {
            fig3.push(vec![v.problem.fid.to_string(), v.problem.iid.to_string(), name.clone(), fmt_f64(*x)]);
        }
    }
    emit("fig3_features.csv", &["fid", "iid", "feature", "normalized_value"], fig3)?;

    let mut fig4 = Vec::new();
    for (i, id) in pred.instances.iter().enumerate() {
        for (a, algo) in pred.algos.iter().enumerate() {
            fig4.push(vec![
                id.fid.to_string(),
                id.iid.to_string(),
                algo.clone(),
                fmt_f64(perf.precision[i][a]),
                fmt_f64(pred.pred_unscaled[i][a]),
                fmt_f64(pred.pred_log[i][a]),
            ]);
        }
    }
    emit("fig4_predictions.csv", &["fid", "iid", "algo_id", "true_precision", "pred_unscaled", "pred_log10"], fig4)?;

    let mut fig5 = Vec::new();
    for (a, algo) in perf.algos.iter().enumerate() {
        let choices = vec![a; perf.n_instances()];
        fig5.push(vec![
            "config".into(),
            algo.clone(),
            fmt_f64(selector_metric(&choices, &perf, Metric::Rmse)?),
            fmt_f64(selector_metric(&choices, &perf, Metric::LogRmse)?),
        ]);
    }
    for s in &report.selectors {
        fig5.push(vec!["selector".into(), s.name.clone(), fmt_f64(s.rmse), fmt_f64(s.log_rmse)]);
    }
    emit("fig5_quality.csv", &["kind", "name", "rmse", "log_rmse"], fig5)?;
    Ok(out)
}

/// Per-algorithm table of the report, keyed by algorithm id.
pub fn model_table(report: &EvalReport<f64>) -> BTreeMap<String, (f64, f64, f64, f64)> {
    report
        .models
        .iter()
        .map(|m| (m.algo_id.clone(), (m.unscaled_rmse, m.log_rmse, m.unscaled_log_rmse, m.log_log_rmse)))
        .collect()
}
