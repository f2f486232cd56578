use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::track::{CurvatureStream, Track};
use crate::integrator::{run_riccati, IntegratorConfig, RiccatiRun, RiccatiStart};
use crate::linalg;
use crate::models::{MetricModel, TangentVector};

use super::{forward_pass, unstable_start, SCALAR_TOL};

const MAX_ITERATIONS: usize = 200;

/// Frame-only curvature profile with a declared period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProfile {
    pub model: MetricModel,
    pub tau: f64,
    /// Profile time at which the orbit starts.
    pub phase: f64,
}

impl PeriodicProfile {
    /// Checks `|R(t + tau) - R(t)| < 1e-12` on a sample grid.
    pub fn new(model: MetricModel, tau: f64) -> Result<Self> {
        if model.is_chart() {
            return Err(Error::UnsupportedModel {
                model: model.to_string(),
                op: "periodic_orbit_analysis",
            });
        }
        if !(tau > 0.0) {
            return Err(Error::DegenerateInput("period must be positive".into()));
        }
        let m = model.normal_dim();
        let (mut a, mut b) = (vec![0.0; m * m], vec![0.0; m * m]);
        for k in 0..64 {
            let t = tau * k as f64 / 16.0 - 2.0 * tau;
            model.frame_endomorphism_into(t, &mut a);
            model.frame_endomorphism_into(t + tau, &mut b);
            let diff = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if diff >= 1e-12 {
                return Err(Error::DegenerateInput(format!(
                    "profile is not {tau}-periodic: |R(t+tau) - R(t)| = {diff:.3e} at t = {t}"
                )));
            }
        }
        Ok(PeriodicProfile {
            model,
            tau,
            phase: 0.0,
        })
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Integrator settings whose step divides the period exactly.
    fn stepping(&self, cfg: &IntegratorConfig) -> (IntegratorConfig, usize) {
        let n = (self.tau / cfg.dt).ceil().max(1.0) as usize;
        let mut c = cfg.clone();
        c.dt = self.tau / n as f64;
        (c, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicRecord {
    pub tau: f64,
    /// Fixed point of the period map (row-major).
    pub u_periodic: Vec<f64>,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    /// `(1/tau) int_0^tau tr U`.
    pub chi_per_period: f64,
    pub chi_long_horizon: f64,
    pub long_horizon: f64,
    pub discrepancy: f64,
}

/// Periodic unstable solution as the fixed point of `U -> P(U)`, started at
/// `c I`, and its per-period exponent compared with a long-horizon average
/// over a whole number of periods.
pub fn periodic_orbit_analysis(
    profile: &PeriodicProfile,
    tol: f64,
    long_horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<PeriodicRecord> {
    let model = &profile.model;
    let m = model.normal_dim();
    let (pcfg, n) = profile.stepping(cfg);
    let c = model.curvature_bounds().c();
    let mut u: Vec<f64> = linalg::identity(m).iter().map(|x| x * c).collect();
    let mut last_step = f64::INFINITY;
    let mut per_period = f64::NAN;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut stream = CurvatureStream::new(Track::clock(model, profile.phase, 1.0, 0.0));
        let end = match run_riccati(&mut stream, RiccatiStart::Value(&u), n, &pcfg, |_| {})? {
            RiccatiRun::Done(end) => end,
            RiccatiRun::Conjugate(_) => {
                return Err(Error::PeriodMapDivergence {
                    iterations,
                    last_step: f64::INFINITY,
                })
            }
        };
        let step: Vec<f64> = end.u.iter().zip(&u).map(|(a, b)| a - b).collect();
        last_step = linalg::frobenius(&step);
        per_period = end.int_tr_u / profile.tau;
        u = end.u;
        if last_step < tol {
            break;
        }
    }
    if !(last_step < tol) {
        return Err(Error::PeriodMapDivergence {
            iterations,
            last_step,
        });
    }
    let periods = (long_horizon / profile.tau).round().max(1.0);
    let theta = TangentVector::phase(profile.phase);
    let start = unstable_start(model, &theta, 1e-10, &pcfg)?;
    let pass = forward_pass(
        model,
        &theta,
        &start.u0,
        periods * profile.tau,
        tol,
        SCALAR_TOL,
        &pcfg,
    )?;
    Ok(PeriodicRecord {
        tau: profile.tau,
        u_periodic: u,
        iterations,
        fixed_point_residual: last_step,
        chi_per_period: per_period,
        chi_long_horizon: pass.chi.value,
        long_horizon: pass.chi.horizon,
        discrepancy: (per_period - pass.chi.value).abs(),
    })
}
