use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cmaes::{run, CmaParams};
use super::config::ModuleConfig;
use crate::bench::{make_problem, ProblemId};
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::median;
use crate::Real;

/// Median fixed-budget precision of one algorithm on one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PerformanceRecord<T> {
    pub problem: ProblemId,
    pub algo_id: String,
    pub median_precision: T,
    pub runs: usize,
    pub run_precisions: Vec<T>,
}

impl<T: Real> PerformanceRecord<T> {
    pub fn from_runs(problem: ProblemId, algo_id: impl Into<String>, run_precisions: Vec<T>) -> Self {
        PerformanceRecord {
            problem,
            algo_id: algo_id.into(),
            median_precision: median(&run_precisions),
            runs: run_precisions.len(),
            run_precisions,
        }
    }
}

/// One finished run of the portfolio sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RunOutcome<T> {
    pub problem: ProblemId,
    pub algo_id: String,
    pub run: u32,
    pub budget: u64,
    pub precision: T,
    pub evals_used: u64,
}

/// Parses a portfolio file: one config code per line, `#` starts a comment.
pub fn parse_portfolio(text: &str) -> Result<Vec<ModuleConfig>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| {
                body.parse::<ModuleConfig>().map_err(|e| Error::Parse { line: i as u64 + 1, message: e.to_string() })
            })
        })
        .collect()
}

/// Runs every `(problem, config, run)` task. Output is ordered by problem,
/// then portfolio position, then run index, whatever the thread count.
pub fn run_portfolio_detailed<T: Real>(
    problems: &[ProblemId],
    portfolio: &[ModuleConfig],
    budget: u64,
    runs: u32,
    master_seed: u64,
) -> Result<Vec<RunOutcome<T>>> {
    if runs < 1 {
        return Err(Error::argument("runs must be >= 1"));
    }
    let tasks: Vec<(ProblemId, ModuleConfig, u32)> = problems
        .iter()
        .flat_map(|&p| portfolio.iter().flat_map(move |&c| (0..runs).map(move |r| (p, c, r))))
        .collect();
    tasks
        .into_par_iter()
        .map(|(pid, config, r)| {
            let mut problem = make_problem::<T>(pid.fid, pid.iid, pid.dim)?;
            let params = CmaParams::defaults(pid.dim);
            let seed = seed::derive_labeled(
                master_seed,
                "modcma",
                &[pid.fid as u64, pid.iid as u64, pid.dim as u64, config.index() as u64, r as u64],
            );
            let result = run(&mut problem, &config, &params, budget, seed)?;
            Ok(RunOutcome {
                problem: pid,
                algo_id: config.code(),
                run: r,
                budget,
                precision: result.best_precision,
                evals_used: result.evals_used,
            })
        })
        .collect()
}

/// One median record per `(problem, config)`, in the task order of
/// [`run_portfolio_detailed`].
pub fn run_portfolio<T: Real>(
    problems: &[ProblemId],
    portfolio: &[ModuleConfig],
    budget: u64,
    runs: u32,
    master_seed: u64,
) -> Result<Vec<PerformanceRecord<T>>> {
    let outcomes = run_portfolio_detailed::<T>(problems, portfolio, budget, runs, master_seed)?;
    Ok(outcomes
        .chunks(runs as usize)
        .map(|chunk| {
            PerformanceRecord::from_runs(chunk[0].problem, chunk[0].algo_id.clone(), chunk.iter().map(|o| o.precision).collect())
        })
        .collect())
}

/// Per function, the algorithm with the lowest median (over instances) of
/// its per-instance medians; returns the deduplicated winners in function
/// order, at most `k` of them. Ties go to the algorithm seen first.
pub fn select_portfolio<T: Real>(records: &[PerformanceRecord<T>], k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::argument("k must be >= 1"));
    }
    let mut algos: Vec<&str> = Vec::new();
    let mut algo_pos: HashMap<&str, usize> = HashMap::new();
    for r in records {
        algo_pos.entry(r.algo_id.as_str()).or_insert_with(|| {
            algos.push(r.algo_id.as_str());
            algos.len() - 1
        });
    }
    // function (fid, dim) -> instance -> algo -> precision
    let mut table: BTreeMap<(u32, usize), BTreeMap<u32, HashMap<usize, T>>> = BTreeMap::new();
    for r in records {
        table
            .entry((r.problem.fid, r.problem.dim))
            .or_default()
            .entry(r.problem.iid)
            .or_default()
            .insert(algo_pos[r.algo_id.as_str()], r.median_precision);
    }
    let mut winners: Vec<String> = Vec::new();
    for (&(fid, dim), instances) in &table {
        let mut best: Option<(usize, T)> = None;
        for (a, name) in algos.iter().enumerate() {
            let mut per_instance = Vec::with_capacity(instances.len());
            for (&iid, row) in instances {
                match row.get(&a) {
                    Some(&p) => per_instance.push(p),
                    None => {
                        return Err(Error::validation(format!(
                            "no record for algorithm {name} on (fid={fid}, iid={iid}, dim={dim})"
                        )))
                    }
                }
            }
            let m = median(&per_instance);
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((a, m));
            }
        }
        if let Some((a, _)) = best {
            let name = algos[a].to_string();
            if !winners.contains(&name) {
                winners.push(name);
            }
        }
    }
    winners.truncate(k);
    Ok(winners)
}
