//! BBOB-style benchmark suite: a ten-function catalog with seeded instance
//! transforms on the box `[-5, 5]^d`, plus the performance-data CSV schema.

mod functions;
mod ingest;
mod problem;

pub use functions::{Function, CATALOG};
pub use ingest::{
    aggregate_runs, ingest_performance, parse_performance_runs, read_performance_runs, write_performance_runs,
    PerformanceRun, PERFORMANCE_HEADER,
};
pub use problem::{make_problem, InstanceTransform, ProblemId, ProblemInstance, DOMAIN_BOUND, PRECISION_FLOOR};
