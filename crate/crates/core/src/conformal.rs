//! Homothetic rescaling `g_r = e^{2r} g`, the conjugacy `h(x, v) = (x, e^{-r} v)`
//! with `s(t) = e^r t`, reparametrization ratios and uniform growth estimates.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::track::{jacobi_rhs, CurvatureStream, Rk4};
use crate::integrator::{start_track, unstable_riccati, IntegratorConfig, OrbitState};
use crate::models::{ChartPoint, MetricModel, TangentVector};

/// A chart model with its metric multiplied by `e^{2r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledModel {
    pub base: MetricModel,
    pub r: f64,
    scaled: MetricModel,
}

impl ScaledModel {
    pub fn model(&self) -> &MetricModel {
        &self.scaled
    }

    /// `max |K_r e^{2r} - K|` over random points and planes of the chart.
    pub fn curvature_scaling_residual<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        samples: usize,
    ) -> Result<f64> {
        let n = self.base.dim();
        let factor = (2.0 * self.r).exp();
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < samples {
            let p = ChartPoint::new(random_chart_point(&self.base, rng));
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (k, kr) = match (
                self.base.sectional_curvature(&p, &v, &w),
                self.scaled.sectional_curvature(&p, &v, &w),
            ) {
                (Ok(k), Ok(kr)) => (k, kr),
                (Err(Error::DegenerateInput(_)), _) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            worst = worst.max((kr * factor - k).abs());
            done += 1;
        }
        Ok(worst)
    }
}

fn random_chart_point<R: Rng + ?Sized>(model: &MetricModel, rng: &mut R) -> Vec<f64> {
    use crate::models::ModelKind;
    use std::f64::consts::{PI, TAU};
    match &model.kind {
        ModelKind::FlatTorus { dim } => (0..*dim).map(|_| rng.random_range(0.0..1.0)).collect(),
        ModelKind::HyperbolicPlane => {
            vec![rng.random_range(-5.0..5.0), rng.random_range(0.05..5.0)]
        }
        ModelKind::RoundSphere { .. } => {
            vec![rng.random_range(0.1..PI - 0.1), rng.random_range(0.0..TAU)]
        }
        ModelKind::SurfaceOfRevolution(p) => {
            let lo = p.u_bounds.0.max(-5.0);
            let hi = p.u_bounds.1.min(5.0);
            vec![rng.random_range(lo..hi), rng.random_range(0.0..TAU)]
        }
        _ => Vec::new(),
    }
}

/// `g_r = e^{2r} g` on a chart model.
pub fn scale_metric(model: &MetricModel, r: f64) -> Result<ScaledModel> {
    if !model.is_chart() {
        return Err(Error::UnsupportedModel {
            model: model.to_string(),
            op: "scale_metric (use scale_frame_model)",
        });
    }
    Ok(ScaledModel {
        base: model.clone(),
        r,
        scaled: model.with_log_scale(r),
    })
}

/// Homothety acting on a frame-only model: `R_r(t) = e^{-2r} R(e^{-r} t)`.
pub fn scale_frame_model(model: &MetricModel, r: f64) -> Result<MetricModel> {
    if model.is_chart() {
        return Err(Error::UnsupportedModel {
            model: model.to_string(),
            op: "scale_frame_model (use scale_metric)",
        });
    }
    Ok(model.with_log_scale(r))
}

/// Residual of `h(phi^t theta) = phi_r^{e^r t}(h theta)` on `t_grid`.
///
/// The scaled flow is stepped with `e^r dt`, so both sides take the same
/// number of steps. The residual at a grid point is the chart distance plus
/// the velocity difference (chart components).
pub fn homothety_conjugacy_residual(
    model: &MetricModel,
    r: f64,
    theta: &TangentVector,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let scaled = scale_metric(model, r)?;
    let a = r.exp();
    let unit = model.unit_tangent(&theta.base, &theta.v)?;
    let h_theta = TangentVector {
        base: unit.base.clone(),
        v: unit.v.iter().map(|c| c / a).collect(),
    };
    let cfg_r = IntegratorConfig {
        dt: cfg.dt * a,
        ..cfg.clone()
    };
    let mut left = start_track(model, &unit, cfg)?;
    let mut right = start_track(scaled.model(), &h_theta, &cfg_r)?;
    let mut done = 0usize;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let target = cfg.steps_for(t);
        if target < done {
            return Err(Error::DegenerateInput("t_grid must be increasing".into()));
        }
        for _ in done..target {
            left.advance(0.5 * cfg.dt)?;
            left.advance(0.5 * cfg.dt)?;
            right.advance(0.5 * cfg_r.dt)?;
            right.advance(0.5 * cfg_r.dt)?;
        }
        done = target;
        let dx = model.chart_difference(left.x(), right.x());
        let dv: Vec<f64> = left
            .v()
            .iter()
            .zip(right.v())
            .map(|(l, w)| l / a - w)
            .collect();
        let norm = |d: &[f64]| d.iter().map(|c| c * c).sum::<f64>().sqrt();
        worst = worst.max(norm(&dx) + norm(&dv));
    }
    Ok(worst)
}

/// Samples `(t, s(t))` of a time change, with a claimed slope `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparametrizationProbe {
    pub samples: Vec<(f64, f64)>,
    pub a: f64,
}

impl ReparametrizationProbe {
    pub fn new(samples: Vec<(f64, f64)>, a: f64) -> Result<Self> {
        let increasing = samples.windows(2).all(|w| w[1].0 > w[0].0);
        let monotone = samples.windows(2).all(|w| w[1].1 >= w[0].1);
        if !increasing || !monotone {
            return Err(Error::DegenerateInput(
                "probe needs strictly increasing t and monotone s".into(),
            ));
        }
        Ok(ReparametrizationProbe { samples, a })
    }

    pub fn from_fn(grid: &[f64], s: impl Fn(f64) -> f64, a: f64) -> Result<Self> {
        Self::new(grid.iter().map(|&t| (t, s(t))).collect(), a)
    }
}

/// `per_decade` points per decade from `t0` to `t1`, both included.
pub fn geometric_grid(t0: f64, t1: f64, per_decade: usize) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && per_decade > 0);
    let count = ((t1 / t0).log10() * per_decade as f64).ceil() as usize;
    (0..=count)
        .map(|k| t0 * (t1 / t0).powf(k as f64 / count as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub liminf: f64,
    pub limsup: f64,
    /// `s(t) >= a t - tol` on every sample.
    pub e_a_holds: bool,
}

/// Extremes of `s(t)/t` on the trailing half of the samples.
pub fn reparametrization_ratio(probe: &ReparametrizationProbe, tol: f64) -> Result<RatioEstimate> {
    let n = probe.samples.len();
    if n < 10 {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples, need at least 10"
        )));
    }
    let (t_first, t_last) = (probe.samples[0].0, probe.samples[n - 1].0);
    if !(t_first > 0.0) || t_last < 10.0 * t_first * (1.0 - 1e-12) {
        return Err(Error::InsufficientSamples(
            "samples must span a decade of positive t".into(),
        ));
    }
    let tail = &probe.samples[n / 2..];
    let ratios = tail.iter().map(|(t, s)| s / t);
    let liminf = ratios.clone().fold(f64::INFINITY, f64::min);
    let limsup = ratios.fold(f64::NEG_INFINITY, f64::max);
    let e_a_holds = probe.samples.iter().all(|(t, s)| *s >= probe.a * t - tol);
    Ok(RatioEstimate {
        liminf,
        limsup,
        e_a_holds,
    })
}

/// `u(s(t))` with `u(t) = e^{r0} t`; the claimed slope becomes `e^{r0} a`.
pub fn compose_with_homothety(probe: &ReparametrizationProbe, r0: f64) -> ReparametrizationProbe {
    let k = r0.exp();
    ReparametrizationProbe {
        samples: probe.samples.iter().map(|&(t, s)| (t, k * s)).collect(),
        a: k * probe.a,
    }
}

/// Measures the time change of the homothety: the `g_r`-length of the base
/// geodesic up to each grid time.
pub fn homothety_probe(
    model: &MetricModel,
    r: f64,
    theta: &TangentVector,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ReparametrizationProbe> {
    let scaled = scale_metric(model, r)?;
    let mut state = OrbitState::new(model, theta)?;
    let speed = |st: &OrbitState| -> f64 {
        let g = scaled
            .model()
            .metric_tensor(&st.point)
            .expect("orbit stays in the chart");
        let v = DVector::from_column_slice(&st.velocity);
        (v.transpose() * g * &v)[(0, 0)].sqrt()
    };
    let mut length = 0.0;
    let mut done = 0usize;
    let mut samples = Vec::with_capacity(grid.len());
    let mut f0 = speed(&state);
    for &t in grid {
        let target = (t / cfg.dt).floor().max(0.0) as usize;
        for _ in done..target.max(done) {
            state = crate::integrator::advance_orbit(model, &state, cfg.dt, cfg)?;
            let f1 = speed(&state);
            length += 0.5 * cfg.dt * (f0 + f1);
            f0 = f1;
        }
        done = done.max(target);
        let rest = t - state.t;
        let partial = if rest > 0.0 {
            let end = crate::integrator::advance_orbit(model, &state, rest, cfg)?;
            0.5 * rest * (f0 + speed(&end))
        } else {
            0.0
        };
        samples.push((t, length + partial));
    }
    ReparametrizationProbe::new(samples, r.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub c: f64,
    pub c_const: f64,
    pub lambda: f64,
    pub samples: Vec<GrowthSample>,
    /// `min (|d phi^t eta| - lower) / |d phi^t eta|` over the grid.
    pub lower_slack: f64,
    /// `min (upper - |d phi^t eta|) / |d phi^t eta|` over the grid.
    pub upper_slack: f64,
    /// Log-slope of `|d phi^t eta|` over the second half of the horizon.
    pub measured_exponent: f64,
    /// `c + ln lambda`: zero when the two envelopes grow at the same rate.
    pub pinch_gap: f64,
}

/// Unstable pair `(x, U_u x)` at `theta`.
pub fn unstable_vector(
    model: &MetricModel,
    theta: &TangentVector,
    x: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let u = unstable_riccati(model, theta, 1e-10, cfg)?.u0;
    Ok((x.clone(), u * x))
}

/// Checks `C lambda^{-t} |eta| <= |d phi^t eta| <= e^{ct} |eta| sqrt(1+c^2)` on
/// a grid of step `0.1` over `[0, T]`. `C` defaults to `1/sqrt(1+c^2)`.
#[allow(clippy::too_many_arguments)]
pub fn growth_estimate_check(
    model: &MetricModel,
    theta: &TangentVector,
    eta: (&DVector<f64>, &DVector<f64>),
    horizon: f64,
    c_const: Option<f64>,
    lambda: f64,
    cfg: &IntegratorConfig,
) -> Result<GrowthRecord> {
    let m = model.normal_dim();
    let (j0, jp0) = eta;
    if j0.len() != m || jp0.len() != m {
        return Err(Error::DegenerateInput(format!(
            "eta must have two {m}-vectors"
        )));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::DegenerateInput("lambda must lie in (0, 1)".into()));
    }
    let u = unstable_riccati(model, theta, 1e-10, cfg)?.u0;
    let deviation = (jp0 - &u * j0).norm() / j0.norm().max(f64::MIN_POSITIVE);
    if deviation > 1e-6 {
        return Err(Error::NotUnstable { deviation });
    }
    let c = model.curvature_bounds().c();
    let c_const = c_const.unwrap_or(1.0 / (1.0 + c * c).sqrt());
    let eta_norm = (j0.norm_squared() + jp0.norm_squared()).sqrt();

    let mut state: Vec<f64> = j0.iter().chain(jp0.iter()).copied().collect();
    state.push(0.0);
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    let mut rk = Rk4::new(state.len());
    let per_sample = cfg.steps_for(0.1).max(1);
    let count = (cfg.steps_for(horizon) / per_sample).max(2);
    let sample_dt = per_sample as f64 * cfg.dt;
    let mut samples = Vec::with_capacity(count + 1);
    let record = |t: f64, s: &[f64]| {
        let norm = s[..2 * m].iter().map(|c| c * c).sum::<f64>().sqrt();
        GrowthSample {
            t,
            norm,
            lower: c_const * lambda.powf(-t) * eta_norm,
            upper: (c * t).exp() * eta_norm * (1.0 + c * c).sqrt(),
        }
    };
    samples.push(record(0.0, &state));
    for k in 1..=count {
        for _ in 0..per_sample {
            stream.advance(cfg.dt)?;
            rk.step(&mut state, cfg.dt, &stream, |r, s, out| {
                jacobi_rhs(m, 1, r, s, out)
            });
            stream.commit();
        }
        samples.push(record(k as f64 * sample_dt, &state));
    }
    let lower_slack = samples
        .iter()
        .map(|s| (s.norm - s.lower) / s.norm)
        .fold(f64::INFINITY, f64::min);
    let upper_slack = samples
        .iter()
        .map(|s| (s.upper - s.norm) / s.norm)
        .fold(f64::INFINITY, f64::min);
    let mid = &samples[count / 2];
    let last = &samples[count];
    let measured_exponent = (last.norm.ln() - mid.norm.ln()) / (last.t - mid.t);
    Ok(GrowthRecord {
        c,
        c_const,
        lambda,
        samples,
        lower_slack,
        upper_slack,
        measured_exponent,
        pinch_gap: c + lambda.ln(),
    })
}
