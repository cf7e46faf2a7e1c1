//! Pipeline behind the `elasel` binary: one function per subcommand, each
//! reading and writing files in an output directory.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

pub use commands::Context;
pub use config::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RunPortfolio,
    SelectPortfolio,
    ExtractFeatures { report_normalized: bool },
    TrainEval,
    TuneThreshold,
    ReportFigures,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

/// Loads and validates the configuration, then runs `command` on a pool of
/// `opts.jobs` threads. Returns the files written.
pub fn execute(command: Command, opts: &Options) -> elasel::Result<Vec<PathBuf>> {
    let mut config = match &opts.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    let ctx = Context::new(config, opts.out.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| elasel::Error::Io(std::io::Error::other(e)))?;
    pool.install(|| match command {
        Command::RunPortfolio => commands::run_portfolio(&ctx),
        Command::SelectPortfolio => commands::select_portfolio_cmd(&ctx),
        Command::ExtractFeatures { report_normalized } => commands::extract_features(&ctx, report_normalized),
        Command::TrainEval => commands::train_eval(&ctx),
        Command::TuneThreshold => commands::tune_threshold_cmd(&ctx),
        Command::ReportFigures => commands::report_figures(&ctx),
    })
}
