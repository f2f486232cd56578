use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::conformal::{growth_estimate_check, homothety_conjugacy_residual, unstable_vector};
use crate::error::{Error, Result};
use crate::lyapunov::{
    analyze_orbit, classify_level_set, periodic_orbit_analysis, PeriodicProfile,
};
use crate::models::TangentVector;

use super::config::{Check, ExperimentConfig};
use super::report::{
    aggregate, to_json, CheckError, ConjugacyRecord, EnsembleReport, LevelSetRecord, Meta,
    OrbitRecord, OrbitStatus, Tolerances,
};
use super::sampler::{sample_unit_tangent, Sampler};

pub const GENERATOR: &str = "ChaCha8 (rand_chacha), seed_from_u64(seed), stream i for sample i";

fn check_name(check: &Check) -> &'static str {
    match check {
        Check::Chain => "chain",
        Check::Rigidity => "rigidity",
        Check::LevelSet { .. } => "level_set",
        Check::Spectrum => "spectrum",
        Check::Conjugacy { .. } => "conjugacy",
        Check::Growth { .. } => "growth",
        Check::Periodic { .. } => "periodic",
    }
}

/// Runs the configured checks on one initial condition. Errors are recorded,
/// never propagated.
pub fn analyze_one(cfg: &ExperimentConfig, index: usize, theta: TangentVector) -> OrbitRecord {
    let model = &cfg.model;
    let integrator = cfg.integrator();
    let mut rec = OrbitRecord {
        index,
        ricci_at_start: model.ricci_along(&theta).ok(),
        theta,
        status: OrbitStatus::Ok,
        error: None,
        error_kind: None,
        report: None,
        level_sets: Vec::new(),
        conjugacy: None,
        growth: None,
        periodic: None,
        check_errors: Vec::new(),
    };
    let mut non_converged = false;
    if cfg.checks.iter().any(Check::needs_analysis) {
        match analyze_orbit(model, &rec.theta, &cfg.analysis_options()) {
            Ok(report) => {
                for alpha in cfg.level_alphas() {
                    rec.level_sets.push(LevelSetRecord {
                        alpha,
                        member: classify_level_set(&report, alpha, cfg.horizons.tol).ok(),
                    });
                }
                rec.report = Some(report);
            }
            Err(e) => {
                non_converged |= e.is_non_convergence();
                rec.status = OrbitStatus::Failed;
                rec.error_kind = Some(e.kind().into());
                rec.error = Some(e.to_string());
            }
        }
    }
    for check in &cfg.checks {
        let outcome: Result<()> = match check {
            Check::Conjugacy { r, t_max } => {
                let grid: Vec<f64> = (1..=t_max.floor() as usize).map(|t| t as f64).collect();
                homothety_conjugacy_residual(model, *r, &rec.theta, &grid, &integrator).map(
                    |residual| {
                        rec.conjugacy = Some(ConjugacyRecord {
                            r: *r,
                            t_max: *t_max,
                            residual,
                        })
                    },
                )
            }
            Check::Growth {
                c_const,
                lambda,
                horizon,
            } => {
                let mut x = DVector::zeros(model.normal_dim());
                x[0] = 1.0;
                unstable_vector(model, &rec.theta, &x, &integrator)
                    .and_then(|(j, jp)| {
                        growth_estimate_check(
                            model,
                            &rec.theta,
                            (&j, &jp),
                            *horizon,
                            *c_const,
                            *lambda,
                            &integrator,
                        )
                    })
                    .map(|g| rec.growth = Some(g))
            }
            Check::Periodic {
                tau,
                long_horizon,
                tol,
            } => PeriodicProfile::new(model.clone(), *tau)
                .and_then(|p| {
                    let p = p.with_phase(rec.theta.phase_value());
                    periodic_orbit_analysis(
                        &p,
                        *tol,
                        long_horizon.unwrap_or(cfg.horizons.t),
                        &integrator,
                    )
                })
                .map(|p| rec.periodic = Some(p)),
            _ => Ok(()),
        };
        if let Err(e) = outcome {
            non_converged |= e.is_non_convergence();
            if rec.status == OrbitStatus::Ok {
                rec.status = OrbitStatus::CheckError;
            }
            rec.check_errors.push(CheckError {
                check: check_name(check).into(),
                kind: e.kind().into(),
                message: e.to_string(),
            });
        }
    }
    if non_converged {
        rec.status = OrbitStatus::NonConverged;
    }
    rec
}

/// Worker count: explicit value, else `RICCATI_LAB_JOBS`, else all cores.
pub fn resolve_jobs(jobs: Option<usize>) -> usize {
    jobs.or_else(|| std::env::var("RICCATI_LAB_JOBS").ok()?.parse().ok())
        .unwrap_or(0)
}

fn ensemble_label(cfg: &ExperimentConfig) -> &'static str {
    match &cfg.ensemble.sampler {
        s if s.window_restricted(&cfg.model) => "window-restricted ensemble",
        Sampler::WindowUniform { .. } => "phase-window ensemble",
        Sampler::TorusUniform => "full ensemble",
        Sampler::Explicit { .. } => "explicit initial conditions",
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = to_json(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Samples the ensemble, analyzes every orbit on a pool of `jobs` workers
/// (0 = all cores) and reduces the records in sample order.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<EnsembleReport> {
    cfg.validate()?;
    let thetas = sample_unit_tangent(
        &cfg.model,
        cfg.ensemble.size,
        cfg.ensemble.seed,
        &cfg.ensemble.sampler,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let orbits: Vec<OrbitRecord> = pool.install(|| {
        thetas
            .into_par_iter()
            .enumerate()
            .map(|(i, theta)| analyze_one(cfg, i, theta))
            .collect()
    });
    let h = &cfg.horizons;
    let meta = Meta {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(cfg),
        seed: cfg.ensemble.seed,
        sample_size: cfg.ensemble.size,
        model: cfg.model.to_string(),
        sampler: cfg.ensemble.sampler.name().into(),
        ensemble_label: ensemble_label(cfg).into(),
        generator: GENERATOR.into(),
        tolerances: Tolerances {
            t: h.t,
            dt: h.dt,
            tol: h.tol,
            limit_tol: h.limit_tol,
            equality_tol: h.equality_tol,
            scalar_tol: h.scalar_tol,
        },
        config: cfg.clone(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        determinism_hash: String::new(),
    };
    let mut report = EnsembleReport {
        meta,
        aggregate: aggregate(&orbits, &cfg.checks),
        orbits,
    };
    report.seal();
    Ok(report)
}
