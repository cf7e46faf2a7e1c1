use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elasel_cli::{execute, Command, Options};

#[derive(Parser)]
#[command(name = "elasel", version, about = "Landscape-aware algorithm selection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the file
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the portfolio on the suite and record fixed-budget precisions
    RunPortfolio(Common),
    /// Run candidate variants and keep the per-function winners
    SelectPortfolio(Common),
    /// Compute landscape features per problem instance
    ExtractFeatures {
        #[command(flatten)]
        common: Common,
        /// Also write min-max normalized features
        #[arg(long)]
        report_normalized: bool,
    },
    /// Cross-validate the regression models and evaluate the selectors
    TrainEval(Common),
    /// Tune the combined selector's threshold on stored predictions
    TuneThreshold(Common),
    /// Write plot-ready CSVs from a report
    ReportFigures(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::RunPortfolio(c) => (Command::RunPortfolio, c),
        Cmd::SelectPortfolio(c) => (Command::SelectPortfolio, c),
        Cmd::ExtractFeatures { common, report_normalized } => (Command::ExtractFeatures { report_normalized }, common),
        Cmd::TrainEval(c) => (Command::TrainEval, c),
        Cmd::TuneThreshold(c) => (Command::TuneThreshold, c),
        Cmd::ReportFigures(c) => (Command::ReportFigures, c),
    };
    let opts = Options { config: common.config, seed: common.seed, out: common.out, jobs: common.jobs };
    match execute(command, &opts) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
