//! Synthetic sparse-recovery experiments: seeded instance generation,
//! solver batteries, sparsity metrics and CSV/JSON export.

mod experiment;
mod generate;
mod metrics;

pub use experiment::{
    aggregate, run_experiment, run_single, run_sweep, Battery, ExperimentSpec, RunOutcome, RunSummary,
    SolverAggregate, Stat, SweepParam, SUMMARY_SCHEMA,
};
pub use generate::{
    generate_instance, GeneratedInstance, GeneratorSpec, DEFAULT_LAMBDA, DEFAULT_NOISE_STD, X_TRUE_FILE,
};
pub use metrics::{sparsity_metrics, SparsityMetrics, NONZERO_THRESHOLD};
