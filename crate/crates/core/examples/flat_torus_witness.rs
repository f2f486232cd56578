//! Flat torus ensemble: every sampled orbit has zero exponent and every
//! sampled base point zero curvature.

use std::time::Instant;

use riccati_lab::experiment::{
    run_experiment, Check, EnsembleConfig, ExperimentConfig, Horizons, Sampler,
};
use riccati_lab::models::MetricModel;

fn main() -> riccati_lab::Result<()> {
    let cfg = ExperimentConfig {
        model: MetricModel::flat_torus(2),
        ensemble: EnsembleConfig {
            size: 1000,
            seed: 2024,
            sampler: Sampler::TorusUniform,
        },
        horizons: Horizons {
            t: 100.0,
            dt: 1e-2,
            tol: 1e-2,
            limit_tol: 1e-2,
            limit_t_max: 32768.0,
            equality_tol: 1e-4,
            scalar_tol: 1e-3,
        },
        checks: vec![Check::LevelSet { alpha: 0.0 }],
        output: None,
    };
    let start = Instant::now();
    let report = run_experiment(&cfg, 0)?;
    let level = &report.aggregate.level_sets[0];
    let max_k = report
        .orbits
        .iter()
        .filter_map(|o| o.ricci_at_start)
        .fold(0.0f64, |a, k| a.max(k.abs()));
    println!(
        "{} of {} orbits in level set 0, max |K| = {max_k:e}, {:.2?}",
        level.members,
        report.aggregate.orbits,
        start.elapsed()
    );
    Ok(())
}
