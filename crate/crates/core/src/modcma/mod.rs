//! Modular CMA-ES: eleven switchable modules, a fixed-budget runner and a
//! portfolio executor.

mod cmaes;
mod config;
mod portfolio;
mod sampler;

pub use cmaes::{run, CmaParams, GenerationTrace, RunResult};
pub use config::{enumerate_variants, BaseSampler, ModuleConfig, RestartStrategy, VariantFilter, SLOT_NAMES};
pub use portfolio::{
    parse_portfolio, run_portfolio, run_portfolio_detailed, select_portfolio, PerformanceRecord, RunOutcome,
};
pub use sampler::OffspringSampler;
