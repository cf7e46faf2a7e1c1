//! Landscape-aware fixed-budget performance regression and per-instance
//! algorithm selection for modular CMA-ES variants.
//!
//! The pipeline: run a portfolio of [`modcma`] variants on [`bench`]
//! problems under a fixed evaluation budget, describe each problem instance
//! with [`ela`] landscape features, fit unscaled and log10 random forests
//! ([`forest`]) per variant, and combine their predictions into selectors
//! evaluated against virtual-best and single-best baselines ([`selector`]).
//!
//! All numerical code is generic over a [`Real`] scalar; the aliases below
//! fix it to `f64`, which is what the command-line pipeline uses.

pub mod bench;
pub mod ela;
pub mod error;
pub mod forest;
pub mod linalg;
pub mod modcma;
mod scalar;
pub mod seed;
pub mod selector;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Problem = bench::ProblemInstance<f64>;
pub type Record = modcma::PerformanceRecord<f64>;
pub type Features = ela::FeatureVector<f64>;
pub type Samples = ela::SampleSet<f64>;
pub type RandomForest = forest::Forest<f64>;
pub type Performance = selector::PerformanceMatrix<f64>;
pub type Predictions = selector::PredictionMatrix<f64>;
pub type Report = selector::EvalReport<f64>;
