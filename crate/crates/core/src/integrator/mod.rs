//! Geodesic flow, parallel frames, Jacobi fields and Riccati solutions.

mod green;
mod riccati;
pub(crate) mod track;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use green::{stable_riccati, unstable_riccati, Provenance, RiccatiSolution};
pub(crate) use riccati::{run_riccati, NodeView, RiccatiRun, RiccatiStart};

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{ChartPoint, MetricModel, TangentVector};
use track::{jacobi_rhs, CurvatureStream, Rk4, Track};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub method: Method,
    pub frame_reortho_every: usize,
    pub blowup_threshold: f64,
    pub symmetrize_each_step: bool,
    /// First horizon of the Green-bundle doubling schedule.
    pub limit_t_start: f64,
    /// Largest horizon of the doubling schedule.
    pub limit_t_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            method: Method::Rk4,
            frame_reortho_every: 100,
            blowup_threshold: 1e6,
            symmetrize_each_step: true,
            limit_t_start: 8.0,
            limit_t_max: 32768.0,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: path.into(),
                message: message.into(),
            })
        };
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("integrator.dt", "must be > 0");
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("integrator.blowup_threshold", "must be > 0");
        }
        if !(self.limit_t_start > 0.0) || self.limit_t_max < self.limit_t_start {
            return bad(
                "integrator.limit_t_max",
                "need 0 < limit_t_start <= limit_t_max",
            );
        }
        Ok(())
    }

    pub(crate) fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt).round().max(0.0) as usize
    }
}

/// Geodesic point with unit velocity, parallel normal frame, and optional
/// Jacobi / Riccati payloads. Frame-only models leave the chart fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitState {
    pub t: f64,
    pub point: ChartPoint,
    pub velocity: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    /// `(Y, Y')`, each `(n-1) x k`.
    pub jacobi: Option<(DMatrix<f64>, DMatrix<f64>)>,
    pub riccati: Option<DMatrix<f64>>,
    pub(crate) origin: f64,
    pub(crate) sign: f64,
    pub(crate) steps_since_reortho: usize,
}

impl OrbitState {
    pub fn new(model: &MetricModel, theta: &TangentVector) -> Result<Self> {
        if model.is_chart() {
            let unit = model.unit_tangent(&theta.base, &theta.v)?;
            let frame = model.orthonormal_frame(&unit.base.coords, &unit.v);
            let n = model.dim();
            Ok(OrbitState {
                t: 0.0,
                point: unit.base,
                velocity: unit.v,
                frame: frame.chunks(n).map(|c| c.to_vec()).collect(),
                jacobi: None,
                riccati: None,
                origin: 0.0,
                sign: 1.0,
                steps_since_reortho: 0,
            })
        } else {
            Ok(OrbitState {
                t: 0.0,
                point: ChartPoint::new(Vec::new()),
                velocity: Vec::new(),
                frame: Vec::new(),
                jacobi: None,
                riccati: None,
                origin: theta.phase_value(),
                sign: 1.0,
                steps_since_reortho: 0,
            })
        }
    }

    pub fn with_jacobi(mut self, y: DMatrix<f64>, yp: DMatrix<f64>) -> Self {
        self.jacobi = Some((y, yp));
        self
    }

    pub fn with_riccati(mut self, u: DMatrix<f64>) -> Self {
        self.riccati = Some(u);
        self
    }

    /// Time at which a frame-only model is sampled.
    pub(crate) fn curvature_time(&self) -> f64 {
        self.origin + self.sign * self.t
    }

    /// `max |<e_a, e_b> - delta_ab|` over `{velocity, frame}`.
    pub fn frame_deviation(&self, model: &MetricModel) -> f64 {
        if !model.is_chart() {
            return 0.0;
        }
        let n = model.dim();
        let mut g = vec![0.0; n];
        model.metric_diag_into(&self.point.coords, &mut g);
        let mut all: Vec<&[f64]> = vec![&self.velocity];
        all.extend(self.frame.iter().map(|f| f.as_slice()));
        let mut worst: f64 = 0.0;
        for (a, ea) in all.iter().enumerate() {
            for (b, eb) in all.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((model.inner(&g, ea, eb) - target).abs());
            }
        }
        worst
    }

    /// `|g(v, v) - 1|`.
    pub fn speed_defect(&self, model: &MetricModel) -> f64 {
        if !model.is_chart() {
            return 0.0;
        }
        let mut g = vec![0.0; model.dim()];
        model.metric_diag_into(&self.point.coords, &mut g);
        (model.inner(&g, &self.velocity, &self.velocity) - 1.0).abs()
    }

    pub(crate) fn track<'a>(&self, model: &'a MetricModel, cfg: &IntegratorConfig) -> Track<'a> {
        if model.is_chart() {
            let frame: Vec<f64> = self.frame.iter().flatten().copied().collect();
            let mut tr = Track::chart(
                model,
                &self.point.coords,
                &self.velocity,
                &frame,
                self.t,
                cfg,
            );
            tr.steps_since_reortho = self.steps_since_reortho;
            tr
        } else {
            Track::clock(model, self.origin, self.sign, self.t)
        }
    }

    fn absorb(&mut self, track: &Track) {
        self.t = track.t;
        self.steps_since_reortho = track.steps_since_reortho;
        if track.is_chart() {
            let n = track.n;
            self.point = ChartPoint::new(track.x().to_vec());
            self.velocity = track.v().to_vec();
            self.frame = track.frame().chunks(n).map(|c| c.to_vec()).collect();
        }
    }
}

/// Track positioned at `theta`, at orbit time 0.
pub(crate) fn start_track<'a>(
    model: &'a MetricModel,
    theta: &TangentVector,
    cfg: &IntegratorConfig,
) -> Result<Track<'a>> {
    let state = OrbitState::new(model, theta)?;
    Ok(state.track(model, cfg))
}

/// One RK4 step of the geodesic, its frame and any attached payloads.
pub fn advance_orbit(
    model: &MetricModel,
    state: &OrbitState,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<OrbitState> {
    let m = model.normal_dim();
    let mut stream = CurvatureStream::new(state.track(model, cfg));
    stream.advance(dt)?;
    let mut next = state.clone();
    if let Some((y, yp)) = &state.jacobi {
        let cols = y.ncols();
        let mut buf = linalg::from_dmatrix(y);
        buf.extend(linalg::from_dmatrix(yp));
        buf.push(0.0);
        Rk4::new(buf.len()).step(&mut buf, dt, &stream, |r, s, out| {
            jacobi_rhs(m, cols, r, s, out)
        });
        next.jacobi = Some((
            linalg::to_dmatrix(&buf[..m * cols], m, cols),
            linalg::to_dmatrix(&buf[m * cols..2 * m * cols], m, cols),
        ));
    }
    if let Some(u) = &state.riccati {
        let mut buf = linalg::from_dmatrix(u);
        buf.extend([0.0, 0.0]);
        Rk4::new(buf.len()).step(&mut buf, dt, &stream, |r, s, out| {
            track::riccati_rhs(m, r, s, out)
        });
        if cfg.symmetrize_each_step {
            linalg::symmetrize(&mut buf[..m * m], m);
        }
        next.riccati = Some(linalg::to_dmatrix(&buf[..m * m], m, m));
    }
    next.absorb(stream.live_track().expect("live stream"));
    Ok(next)
}

/// Result of a matrix Jacobi integration.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSolution {
    pub y: DMatrix<f64>,
    pub yp: DMatrix<f64>,
    /// `Y^T Y' - Y'^T Y` at the start and at the end.
    pub wronskian_start: DMatrix<f64>,
    pub wronskian_end: DMatrix<f64>,
}

fn wronskian(y: &DMatrix<f64>, yp: &DMatrix<f64>) -> DMatrix<f64> {
    y.transpose() * yp - yp.transpose() * y
}

/// Integrates `Y'' + R(t) Y = 0` from `(Y0, Y0')` over `[0, T]` along `theta`.
pub fn integrate_jacobi(
    model: &MetricModel,
    theta: &TangentVector,
    y0: &DMatrix<f64>,
    yp0: &DMatrix<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<JacobiSolution> {
    let m = model.normal_dim();
    if y0.nrows() != m || yp0.shape() != y0.shape() {
        return Err(Error::DegenerateInput(format!(
            "Jacobi data must be {m} x k with matching shapes"
        )));
    }
    let cols = y0.ncols();
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    let mut state = linalg::from_dmatrix(y0);
    state.extend(linalg::from_dmatrix(yp0));
    state.push(0.0);
    let mut rk = Rk4::new(state.len());
    for _ in 0..cfg.steps_for(horizon) {
        stream.advance(cfg.dt)?;
        rk.step(&mut state, cfg.dt, &stream, |r, s, out| {
            jacobi_rhs(m, cols, r, s, out)
        });
        stream.commit();
    }
    let y = linalg::to_dmatrix(&state[..m * cols], m, cols);
    let yp = linalg::to_dmatrix(&state[m * cols..2 * m * cols], m, cols);
    Ok(JacobiSolution {
        wronskian_start: wronskian(y0, yp0),
        wronskian_end: wronskian(&y, &yp),
        y,
        yp,
    })
}

/// Outcome of a Riccati integration: a regular endpoint or a blow-up.
#[derive(Debug, Clone, PartialEq)]
pub enum RiccatiOutcome {
    Regular(DMatrix<f64>),
    /// `U` blew up at `t_star` (orbit time): a conjugate point.
    ConjugatePointDetected {
        t_star: f64,
    },
}

/// Initial data for [`integrate_riccati`].
#[derive(Debug, Clone, PartialEq)]
pub enum RiccatiInit {
    Matrix(DMatrix<f64>),
    /// Seed from `Y(0) = 0, Y'(0) = I` (formally `U(0) = +infinity`).
    FocalSeed,
}

/// Integrates `U' + U^2 + R = 0` over `[0, T]`.
pub fn integrate_riccati(
    model: &MetricModel,
    theta: &TangentVector,
    init: &RiccatiInit,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<RiccatiOutcome> {
    let m = model.normal_dim();
    let u0;
    let start = match init {
        RiccatiInit::Matrix(u) => {
            if u.shape() != (m, m) {
                return Err(Error::DegenerateInput(format!("U0 must be {m} x {m}")));
            }
            if (u - u.transpose()).abs().max() > 1e-10 {
                return Err(Error::DegenerateInput("U0 must be symmetric".into()));
            }
            u0 = linalg::from_dmatrix(u);
            RiccatiStart::Value(&u0)
        }
        RiccatiInit::FocalSeed => RiccatiStart::Focal,
    };
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    match run_riccati(&mut stream, start, cfg.steps_for(horizon), cfg, |_| {})? {
        RiccatiRun::Done(end) => Ok(RiccatiOutcome::Regular(linalg::to_dmatrix(&end.u, m, m))),
        RiccatiRun::Conjugate(t_star) => Ok(RiccatiOutcome::ConjugatePointDetected { t_star }),
    }
}

/// Pushed tangent vector `d phi^T (J0, J0')` and its Sasaki norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PushedTangent {
    pub j: DVector<f64>,
    pub jp: DVector<f64>,
    pub sasaki_norm: f64,
}

pub fn push_tangent(
    model: &MetricModel,
    theta: &TangentVector,
    j0: &DVector<f64>,
    jp0: &DVector<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<PushedTangent> {
    let sol = integrate_jacobi(
        model,
        theta,
        &DMatrix::from_column_slice(j0.len(), 1, j0.as_slice()),
        &DMatrix::from_column_slice(jp0.len(), 1, jp0.as_slice()),
        horizon,
        cfg,
    )?;
    let j = sol.y.column(0).into_owned();
    let jp = sol.yp.column(0).into_owned();
    let sasaki_norm = (j.norm_squared() + jp.norm_squared()).sqrt();
    Ok(PushedTangent { j, jp, sasaki_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_orbit_moves_straight() {
        let model = MetricModel::flat_torus(2);
        let cfg = IntegratorConfig::default();
        let s =
            OrbitState::new(&model, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0])).unwrap();
        let s = advance_orbit(&model, &s, 0.25, &cfg).unwrap();
        assert!((s.point.coords[0] - 0.25).abs() < 1e-15);
        assert_eq!(s.point.coords[1], 0.0);
    }

    #[test]
    fn vertical_hyperbolic_geodesic() {
        let model = MetricModel::hyperbolic_plane();
        let cfg = IntegratorConfig::default();
        let mut s =
            OrbitState::new(&model, &TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0])).unwrap();
        for _ in 0..1000 {
            s = advance_orbit(&model, &s, 1e-3, &cfg).unwrap();
        }
        assert!((s.point.coords[1] - 1f64.exp()).abs() < 1e-8);
        assert!(s.point.coords[0].abs() < 1e-12);
    }

    #[test]
    fn sphere_equator_reaches_antipode() {
        let model = MetricModel::round_sphere(1.0);
        let cfg = IntegratorConfig::default();
        let mut s = OrbitState::new(
            &model,
            &TangentVector::new(vec![PI / 2.0, 0.0], vec![0.0, 1.0]),
        )
        .unwrap();
        let steps = 3142;
        let h = PI / steps as f64;
        for _ in 0..steps {
            s = advance_orbit(&model, &s, h, &cfg).unwrap();
        }
        assert!((s.point.coords[0] - PI / 2.0).abs() < 1e-6);
        assert!((s.point.coords[1] - PI).abs() < 1e-6);
    }

    #[test]
    fn riccati_payload_fixed_point() {
        let model = MetricModel::hyperbolic_plane();
        let cfg = IntegratorConfig::default();
        let s = OrbitState::new(&model, &TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]))
            .unwrap()
            .with_riccati(DMatrix::from_element(1, 1, 1.0));
        let s = advance_orbit(&model, &s, 0.01, &cfg).unwrap();
        assert!((s.riccati.unwrap()[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn surface_edge_is_domain_exit() {
        let mut profile =
            crate::models::RevolutionProfile::new(crate::models::ProfileShape::Cosh {
                offset: 0.0,
            });
        profile.u_bounds = (-1.0, 1.0);
        let model = MetricModel::new(crate::models::ModelKind::SurfaceOfRevolution(profile));
        let cfg = IntegratorConfig::default();
        let mut s =
            OrbitState::new(&model, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0])).unwrap();
        let mut result = Ok(());
        for _ in 0..2000 {
            match advance_orbit(&model, &s, 1e-3, &cfg) {
                Ok(next) => s = next,
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        assert!(matches!(result, Err(Error::DomainExit { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig::with_dt(-1.0).validate().is_err());
    }
}
