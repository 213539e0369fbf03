//! Experiment harness: training loop, configuration, sweeps, metrics, the
//! theoretical schedule, and the synthetic convergence experiment.

mod config;
mod convergence;
mod csvio;
mod metrics;
mod schedule;
mod svg;
mod sweep;
mod train;

pub use config::{
    ArchitectureKind, EasyFirstSettings, HardFirstSettings, LearnerConfig, Method,
    ReferenceConfig, RunConfig, SamplerConfig,
};
pub use convergence::{
    grid_search_min_max, ogd_regret_constant, synthetic_convergence_experiment,
    CappedQuadraticGame, ConvergenceReport,
};
pub use csvio::{parse_runs_csv, rows_from_run, write_runs_csv, CsvRow, RUNS_CSV_HEADER};
pub use metrics::{bootstrap_ci, normalized_return};
pub use schedule::{theory_schedule, TheorySchedule};
pub use svg::{line_chart, success_curves_svg, Series};
pub use sweep::{
    aggregate_rows, paired_steps_difference_ci, run_sweep, write_summary_csv, MethodCurve,
    MethodSummary, SeedMetric, SweepConfig, SweepOutput,
};
pub use train::{
    apply_objective_weights, run_training, steps_to_threshold, RunRecord, RunResult,
    TaskIterationRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sampler(#[from] crate::samplers::SamplerError),
    #[error(transparent)]
    Gap(#[from] crate::gap::GapError),
    #[error(transparent)]
    Env(#[from] crate::envs::EnvError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Simplex(#[from] crate::simplex::SimplexError),
    #[error("I/O: {0}")]
    Io(String),
}
