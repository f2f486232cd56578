//! Config-driven ensembles: sampling, per-orbit dispatch, the aggregate
//! reduction and report files.

mod config;
mod report;
mod runner;
mod sampler;

pub use config::{Check, EnsembleConfig, ExperimentConfig, Format, Horizons, OutputConfig};
pub use report::{
    aggregate, emit_report, to_csv, to_json, write_atomic, Aggregate, ChainAggregate, CheckError,
    ConjugacyRecord, EnsembleReport, GrowthAggregate, LevelFraction, LevelSetRecord, Meta,
    OrbitRecord, OrbitStatus, RigidityAggregate, Tolerances, CSV_HEADER, GROWTH_SLACK_TOL,
};
pub use runner::{analyze_one, config_hash, resolve_jobs, run_experiment, GENERATOR};
pub use sampler::{sample_unit_tangent, Sampler};
