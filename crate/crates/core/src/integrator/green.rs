//! Unstable and stable Riccati solutions as limits of focal seeds in the
//! far past (future): `Y(-T) = 0, Y'(-T) = I`, `T` doubled until the value
//! at time 0 stops moving.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{MetricModel, TangentVector};

use super::riccati::{run_riccati, RiccatiRun, RiccatiStart};
use super::track::{CurvatureStream, Past, Track};
use super::{start_track, IntegratorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    UnstableLimit { t_final: f64, residual: f64 },
    StableLimit { t_final: f64, residual: f64 },
    InitialValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub u0: DMatrix<f64>,
    pub provenance: Provenance,
    /// Fitted slope of `log residual` against `log T`; about `-1` when the
    /// limit is only approached polynomially.
    pub decay_exponent: f64,
}

/// Slope of `log residual` against `log T` over the last (up to) four horizons.
fn decay_exponent(history: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .rev()
        .take(4)
        .filter(|(_, r)| *r > 0.0)
        .map(|&(t, r)| (t.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Curvature source for the past of `forward`, the track through `theta`
/// in the direction whose past is wanted.
enum PastSource<'a> {
    /// Frame-only models: the clock can simply start at `-T`.
    Clock(Track<'a>),
    /// Flat torus: `R = 0`, re-integration from `-T` is harmless.
    Straight(Track<'a>),
    Recorded(Past<'a>),
}

impl<'a> PastSource<'a> {
    fn new(forward: Track<'a>, cfg: &IntegratorConfig, seg_steps: usize) -> Self {
        if !forward.is_chart() {
            PastSource::Clock(forward)
        } else if forward.model.is_flat_torus() {
            PastSource::Straight(forward)
        } else {
            let mut backward = forward;
            backward.reverse();
            PastSource::Recorded(Past::new(backward, seg_steps, cfg.dt))
        }
    }
}

fn limit(
    model: &MetricModel,
    forward: Track,
    cfg: &IntegratorConfig,
    tol: f64,
    stable: bool,
) -> Result<RiccatiSolution> {
    if !(tol > 0.0) {
        return Err(Error::DegenerateInput("tolerance must be positive".into()));
    }
    cfg.validate()?;
    let m = model.normal_dim();
    let seg_steps = cfg.steps_for(cfg.limit_t_start).max(1);
    let seg_len = seg_steps as f64 * cfg.dt;
    let mut source = PastSource::new(forward, cfg, seg_steps);
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut segments = 1usize;
    loop {
        let horizon = segments as f64 * seg_len;
        let steps = segments * seg_steps;
        let mut stream = match &mut source {
            PastSource::Clock(tr) => {
                CurvatureStream::new(Track::clock(model, tr.origin, tr.sign, -horizon))
            }
            PastSource::Straight(tr) => {
                let mut back = tr.clone();
                back.reverse();
                back.advance(horizon)?;
                back.reverse();
                back.t = -horizon;
                CurvatureStream::new(back)
            }
            PastSource::Recorded(past) => {
                past.extend_to(segments)?;
                CurvatureStream::replay(past, segments, m)
            }
        };
        let u = match run_riccati(&mut stream, RiccatiStart::Focal, steps, cfg, |_| {})? {
            RiccatiRun::Done(end) => end.u,
            RiccatiRun::Conjugate(t) => {
                return Err(Error::ConjugatePointDetected {
                    t_star: if stable { -t } else { t },
                })
            }
        };
        if let Some(p) = &prev {
            let diff: Vec<f64> = u.iter().zip(p).map(|(a, b)| a - b).collect();
            let residual = linalg::frobenius(&diff);
            history.push((horizon, residual));
            if residual < tol {
                let sign = if stable { -1.0 } else { 1.0 };
                let u0 = linalg::to_dmatrix(&u, m, m) * sign;
                let provenance = if stable {
                    Provenance::StableLimit {
                        t_final: horizon,
                        residual,
                    }
                } else {
                    Provenance::UnstableLimit {
                        t_final: horizon,
                        residual,
                    }
                };
                return Ok(RiccatiSolution {
                    u0,
                    provenance,
                    decay_exponent: decay_exponent(&history),
                });
            }
        }
        if 2.0 * horizon > cfg.limit_t_max * (1.0 + 1e-12) {
            let sign = if stable { -1.0 } else { 1.0 };
            return Err(Error::NoConvergence {
                t_max: horizon,
                residual: history.last().map_or(f64::NAN, |h| h.1),
                decay_exponent: decay_exponent(&history),
                last_estimate: u.iter().map(|x| sign * x).collect(),
            });
        }
        prev = Some(u);
        segments *= 2;
    }
}

/// `U_u(0) = lim Y'(0) Y(0)^{-1}` for `Y(-T) = 0, Y'(-T) = I`.
pub fn unstable_riccati(
    model: &MetricModel,
    theta: &TangentVector,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<RiccatiSolution> {
    let forward = start_track(model, theta, cfg)?;
    limit(model, forward, cfg, tol, false)
}

/// `U_s(0)`, computed as minus the unstable solution of the reversed orbit.
pub fn stable_riccati(
    model: &MetricModel,
    theta: &TangentVector,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<RiccatiSolution> {
    let mut reversed = start_track(model, theta, cfg)?;
    reversed.reverse();
    limit(model, reversed, cfg, tol, true)
}
