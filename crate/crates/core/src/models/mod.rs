//! Catalog of Riemannian models and synthetic curvature profiles.
//!
//! Chart models (flat torus, hyperbolic half-plane, round sphere, surfaces of
//! revolution) carry a diagonal metric and analytic Christoffel symbols.
//! Frame-only models (constant-curvature spaces in any dimension and
//! synthetic profiles) are described purely by the curvature endomorphism
//! `R(t)` along the orbit, which is all the Jacobi and Riccati machinery needs.
//!
//! Every model carries a log scale `r`; the metric is `e^{2r} g`.

mod profile;

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use profile::{Mode, ProfileShape, RevolutionProfile, SyntheticProfile};

use crate::error::{Error, Result};
use crate::integrator::OrbitState;
use crate::linalg;

/// Gram determinant tolerance below which two vectors count as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;
/// Orthonormality tolerance required of an orbit frame.
pub const FRAME_TOL: f64 = 1e-8;

/// The hyperbolic chart is re-centred by an isometry once `y` leaves this band.
const HALF_PLANE_BAND: (f64, f64) = (1e-4, 1e4);
/// Minimal `sin(colatitude)` before the sphere chart is considered exited.
const POLE_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        ChartPoint {
            coords: coords.into(),
        }
    }
}

/// A tangent vector `(x, v)` in chart components.
///
/// For frame-only models there is no chart: `base.coords` holds a single
/// orbit phase `t0` (the orbit sees `R(t0 + t)`) and `v` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub v: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: impl Into<Vec<f64>>, v: impl Into<Vec<f64>>) -> Self {
        TangentVector {
            base: ChartPoint::new(base),
            v: v.into(),
        }
    }

    /// Initial condition for a frame-only model.
    pub fn phase(t0: f64) -> Self {
        TangentVector {
            base: ChartPoint::new(vec![t0]),
            v: Vec::new(),
        }
    }

    pub fn phase_value(&self) -> f64 {
        self.base.coords.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelKind {
    FlatTorus { dim: usize },
    HyperbolicPlane,
    RoundSphere { radius: f64 },
    ConstantCurvature { dim: usize, curvature: f64 },
    SurfaceOfRevolution(RevolutionProfile),
    Synthetic(SyntheticProfile),
}

/// A model together with its homothety scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Log scale `r` of the homothety `g_r = e^{2r} g`.
    #[serde(default)]
    pub log_scale: f64,
    #[serde(skip)]
    bounds: OnceLock<CurvatureBounds>,
}

impl PartialEq for MetricModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.log_scale == other.log_scale
    }
}

/// `inf K <= K <= sup K` over the model (or over sampled `R(t)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub inf: f64,
    pub sup: f64,
}

impl CurvatureBounds {
    /// `c` with `-c^2 <= K`.
    pub fn c(&self) -> f64 {
        (-self.inf).max(0.0).sqrt()
    }
    /// `b` with `K <= -b^2` (zero when `sup K >= 0`).
    pub fn b(&self) -> f64 {
        (-self.sup).max(0.0).sqrt()
    }
}

/// Christoffel symbols `Gamma^k_{ij}` stored at `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }
}

/// `R_ij = <R(gamma', V_i) gamma', V_j>` in the parallel normal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEndomorphism {
    pub matrix: DMatrix<f64>,
    pub t: f64,
}

impl fmt::Display for MetricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::FlatTorus { dim } => write!(f, "FlatTorus({dim})")?,
            ModelKind::HyperbolicPlane => write!(f, "HyperbolicPlane")?,
            ModelKind::RoundSphere { radius } => write!(f, "RoundSphere({radius})")?,
            ModelKind::ConstantCurvature { dim, curvature } => {
                write!(f, "ConstantCurvatureSpace({dim}, {curvature})")?
            }
            ModelKind::SurfaceOfRevolution(p) => write!(f, "SurfaceOfRevolution({:?})", p.shape)?,
            ModelKind::Synthetic(p) => write!(f, "SyntheticProfile(n={})", p.dim)?,
        }
        if self.log_scale != 0.0 {
            write!(f, "[r={}]", self.log_scale)?;
        }
        Ok(())
    }
}

impl MetricModel {
    pub fn new(kind: ModelKind) -> Self {
        MetricModel {
            kind,
            log_scale: 0.0,
            bounds: OnceLock::new(),
        }
    }

    pub fn flat_torus(dim: usize) -> Self {
        Self::new(ModelKind::FlatTorus { dim })
    }

    pub fn hyperbolic_plane() -> Self {
        Self::new(ModelKind::HyperbolicPlane)
    }

    pub fn round_sphere(radius: f64) -> Self {
        Self::new(ModelKind::RoundSphere { radius })
    }

    pub fn constant_curvature(dim: usize, curvature: f64) -> Self {
        Self::new(ModelKind::ConstantCurvature { dim, curvature })
    }

    pub fn surface_of_revolution(shape: ProfileShape) -> Self {
        Self::new(ModelKind::SurfaceOfRevolution(RevolutionProfile::new(
            shape,
        )))
    }

    pub fn synthetic(profile: SyntheticProfile) -> Self {
        Self::new(ModelKind::Synthetic(profile))
    }

    /// Same model with the log scale shifted by `r`.
    pub fn with_log_scale(&self, r: f64) -> Self {
        MetricModel {
            kind: self.kind.clone(),
            log_scale: self.log_scale + r,
            bounds: OnceLock::new(),
        }
    }

    /// Checks parameter sanity; used by config validation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::Config {
                path: "model".into(),
                message: msg.into(),
            })
        };
        if !self.log_scale.is_finite() {
            return bad("log_scale must be finite");
        }
        match &self.kind {
            ModelKind::FlatTorus { dim } if *dim < 2 => bad("flat torus needs dim >= 2"),
            ModelKind::RoundSphere { radius } if !(*radius > 0.0) => bad("radius must be > 0"),
            ModelKind::ConstantCurvature { dim, curvature }
                if *dim < 2 || !curvature.is_finite() =>
            {
                bad("constant curvature needs dim >= 2 and finite curvature")
            }
            ModelKind::SurfaceOfRevolution(p)
                if !p.shape.is_valid() || !(p.u_bounds.0 < p.u_bounds.1) =>
            {
                bad("invalid surface-of-revolution profile")
            }
            ModelKind::Synthetic(p) if !p.is_valid() => bad("invalid synthetic profile"),
            _ => Ok(()),
        }
    }

    /// Manifold dimension `n`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::FlatTorus { dim } | ModelKind::ConstantCurvature { dim, .. } => *dim,
            ModelKind::Synthetic(p) => p.dim,
            _ => 2,
        }
    }

    /// Size `n - 1` of the normal bundle.
    pub fn normal_dim(&self) -> usize {
        self.dim() - 1
    }

    pub fn is_chart(&self) -> bool {
        !matches!(
            self.kind,
            ModelKind::ConstantCurvature { .. } | ModelKind::Synthetic(_)
        )
    }

    pub(crate) fn is_flat_torus(&self) -> bool {
        matches!(self.kind, ModelKind::FlatTorus { .. })
    }

    fn scale2(&self) -> f64 {
        (2.0 * self.log_scale).exp()
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::UnsupportedModel {
            model: self.to_string(),
            op,
        }
    }

    fn domain_error(&self, coords: &[f64]) -> Error {
        Error::Domain {
            model: self.to_string(),
            coords: coords.to_vec(),
        }
    }

    /// Whether `x` lies in the chart domain.
    pub(crate) fn in_domain(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match &self.kind {
            ModelKind::HyperbolicPlane => x[1] > 0.0,
            ModelKind::RoundSphere { .. } => {
                x[0].sin() > POLE_GUARD && x[0] > 0.0 && x[0] < std::f64::consts::PI
            }
            ModelKind::SurfaceOfRevolution(p) => x[0] > p.u_bounds.0 && x[0] < p.u_bounds.1,
            _ => true,
        }
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if !self.is_chart() {
            return Err(self.unsupported("chart evaluation"));
        }
        if !self.in_domain(&p.coords) {
            return Err(self.domain_error(&p.coords));
        }
        Ok(())
    }

    /// Diagonal of the metric at `x` (all chart models are diagonal).
    #[inline]
    pub(crate) fn metric_diag_into(&self, x: &[f64], out: &mut [f64]) {
        let s = self.scale2();
        match &self.kind {
            ModelKind::FlatTorus { .. } => out.iter_mut().for_each(|g| *g = s),
            ModelKind::HyperbolicPlane => {
                let g = s / (x[1] * x[1]);
                out[0] = g;
                out[1] = g;
            }
            ModelKind::RoundSphere { radius } => {
                let r2 = radius * radius * s;
                let st = x[0].sin();
                out[0] = r2;
                out[1] = r2 * st * st;
            }
            ModelKind::SurfaceOfRevolution(p) => {
                let (f, _, _) = p.shape.eval(x[0]);
                out[0] = s;
                out[1] = s * f * f;
            }
            _ => unreachable!("frame-only models have no metric"),
        }
    }

    /// `Gamma^k_{ij}` at `x`, layout `[k][i][j]`. Homothety leaves these unchanged.
    #[inline]
    pub(crate) fn christoffel_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        match &self.kind {
            ModelKind::FlatTorus { .. } => {}
            ModelKind::HyperbolicPlane => {
                let iy = 1.0 / x[1];
                // [k][i][j] with n = 2: index 4k + 2i + j
                out[1] = -iy; // x_xy
                out[2] = -iy; // x_yx
                out[4] = iy; // y_xx
                out[7] = -iy; // y_yy
            }
            ModelKind::RoundSphere { .. } => {
                let (st, ct) = x[0].sin_cos();
                out[3] = -st * ct; // theta_phiphi
                let cot = ct / st;
                out[5] = cot; // phi_thetaphi
                out[6] = cot; // phi_phitheta
            }
            ModelKind::SurfaceOfRevolution(p) => {
                let (f, fp, _) = p.shape.eval(x[0]);
                out[3] = -f * fp; // u_vv
                out[5] = fp / f; // v_uv
                out[6] = fp / f; // v_vu
            }
            _ => unreachable!("frame-only models have no chart"),
        }
    }

    /// Gaussian curvature at `x` for two-dimensional charts; zero for the flat torus.
    #[inline]
    pub(crate) fn chart_curvature(&self, x: &[f64]) -> f64 {
        let k = match &self.kind {
            ModelKind::FlatTorus { .. } => 0.0,
            ModelKind::HyperbolicPlane => -1.0,
            ModelKind::RoundSphere { radius } => 1.0 / (radius * radius),
            ModelKind::SurfaceOfRevolution(p) => p.shape.curvature(x[0]),
            _ => unreachable!("frame-only models have no chart"),
        };
        k / self.scale2()
    }

    #[inline]
    pub(crate) fn inner(&self, gdiag: &[f64], a: &[f64], b: &[f64]) -> f64 {
        gdiag
            .iter()
            .zip(a.iter().zip(b))
            .map(|(g, (x, y))| g * (x * y))
            .sum()
    }

    /// `Rm(a, b, c, d) = <R(a, b) c, d>` with the sign convention
    /// `K(v, w) = Rm(v, w, w, v) / |v ^ w|^2`.
    #[inline]
    pub(crate) fn riemann_form(
        &self,
        x: &[f64],
        gdiag: &[f64],
        a: &[f64],
        b: &[f64],
        c: &[f64],
        d: &[f64],
    ) -> f64 {
        if self.is_flat_torus() {
            return 0.0;
        }
        let k = self.chart_curvature(x);
        k * (self.inner(gdiag, a, d) * self.inner(gdiag, b, c)
            - self.inner(gdiag, a, c) * self.inner(gdiag, b, d))
    }

    /// Curvature endomorphism in a chart: `R_ij = Rm(V_i, v, v, V_j)`.
    #[inline]
    pub(crate) fn chart_endomorphism_into(
        &self,
        x: &[f64],
        v: &[f64],
        frame: &[f64],
        out: &mut [f64],
    ) {
        let n = self.dim();
        let m = n - 1;
        if self.is_flat_torus() {
            out[..m * m].iter_mut().for_each(|r| *r = 0.0);
            return;
        }
        let mut g = [0.0; 2];
        self.metric_diag_into(x, &mut g);
        for i in 0..m {
            for j in i..m {
                let r = self.riemann_form(
                    x,
                    &g,
                    &frame[i * n..(i + 1) * n],
                    v,
                    v,
                    &frame[j * n..(j + 1) * n],
                );
                out[i * m + j] = r;
                out[j * m + i] = r;
            }
        }
    }

    /// Curvature endomorphism of a frame-only model at orbit time `t`.
    #[inline]
    pub(crate) fn frame_endomorphism_into(&self, t: f64, out: &mut [f64]) {
        let m = self.normal_dim();
        let inv_s = 1.0 / self.scale2();
        match &self.kind {
            ModelKind::ConstantCurvature { curvature, .. } => {
                for i in 0..m {
                    for j in 0..m {
                        out[i * m + j] = if i == j { curvature * inv_s } else { 0.0 };
                    }
                }
            }
            ModelKind::Synthetic(p) => {
                // homothety: R_r(t) = e^{-2r} R(e^{-r} t)
                p.eval_into(t * (-self.log_scale).exp(), out);
                out[..m * m].iter_mut().for_each(|r| *r *= inv_s);
            }
            _ => unreachable!("chart models are evaluated through the chart"),
        }
    }

    /// Brings chart coordinates back to a canonical range. Returns the
    /// factor by which tangent components were rescaled (hyperbolic
    /// re-centring), or 1.
    pub(crate) fn normalize_chart(&self, x: &mut [f64], tangents: &mut [f64]) -> f64 {
        use std::f64::consts::TAU;
        match &self.kind {
            ModelKind::FlatTorus { .. } => {
                for c in x.iter_mut() {
                    *c = c.rem_euclid(1.0);
                }
                1.0
            }
            ModelKind::RoundSphere { .. } | ModelKind::SurfaceOfRevolution(_) => {
                x[1] = x[1].rem_euclid(TAU);
                1.0
            }
            ModelKind::HyperbolicPlane => {
                let y = x[1];
                if y > HALF_PLANE_BAND.0 && y < HALF_PLANE_BAND.1 {
                    return 1.0;
                }
                // isometry z -> (z - x0) / y0 moves the point to (0, 1)
                x[0] = 0.0;
                x[1] = 1.0;
                let f = 1.0 / y;
                tangents.iter_mut().for_each(|c| *c *= f);
                f
            }
            _ => 1.0,
        }
    }

    /// Difference `b - a` of chart points, wrapped on periodic coordinates.
    pub(crate) fn chart_difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        use std::f64::consts::TAU;
        let wrap = |d: f64, p: f64| d - p * (d / p).round();
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| match &self.kind {
                ModelKind::FlatTorus { .. } => wrap(y - x, 1.0),
                ModelKind::RoundSphere { .. } | ModelKind::SurfaceOfRevolution(_) if i == 1 => {
                    wrap(y - x, TAU)
                }
                _ => y - x,
            })
            .collect()
    }

    /// Curvature bounds: analytic for chart and constant models, sampled for
    /// synthetic profiles.
    pub fn curvature_bounds(&self) -> CurvatureBounds {
        *self.bounds.get_or_init(|| {
            let inv_s = 1.0 / self.scale2();
            let (inf, sup) = match &self.kind {
                ModelKind::FlatTorus { .. } => (0.0, 0.0),
                ModelKind::HyperbolicPlane => (-1.0, -1.0),
                ModelKind::RoundSphere { radius } => {
                    let k = 1.0 / (radius * radius);
                    (k, k)
                }
                ModelKind::ConstantCurvature { curvature, .. } => (*curvature, *curvature),
                ModelKind::SurfaceOfRevolution(p) => p.shape.curvature_range(),
                ModelKind::Synthetic(p) => sampled_profile_bounds(p),
            };
            CurvatureBounds {
                inf: inf * inv_s,
                sup: sup * inv_s,
            }
        })
    }

    /// Nonpositive curvature, which rules out focal (and conjugate) points.
    pub fn has_no_focal_points(&self) -> bool {
        self.curvature_bounds().sup <= 0.0
    }

    // ---- public geometric operations ----

    pub fn metric_tensor(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let n = self.dim();
        let mut g = vec![0.0; n];
        self.metric_diag_into(&p.coords, &mut g);
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(g)))
    }

    pub fn christoffel(&self, p: &ChartPoint) -> Result<Christoffel> {
        self.check_point(p)?;
        let n = self.dim();
        let mut data = vec![0.0; n * n * n];
        self.christoffel_into(&p.coords, &mut data);
        Ok(Christoffel { dim: n, data })
    }

    /// Sectional curvature of the plane spanned by `v`, `w` at `p`.
    pub fn sectional_curvature(&self, p: &ChartPoint, v: &[f64], w: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        let n = self.dim();
        if v.len() != n || w.len() != n {
            return Err(Error::DegenerateInput(format!(
                "vectors must have {n} components"
            )));
        }
        let mut g = vec![0.0; n];
        self.metric_diag_into(&p.coords, &mut g);
        let (vv, ww, vw) = (
            self.inner(&g, v, v),
            self.inner(&g, w, w),
            self.inner(&g, v, w),
        );
        let gram = vv * ww - vw * vw;
        if !(vv > 0.0 && ww > 0.0) || gram <= DEPENDENCE_TOL * vv * ww {
            return Err(Error::DegenerateInput(
                "v and w are linearly dependent".into(),
            ));
        }
        Ok(self.riemann_form(&p.coords, &g, v, w, w, v) / gram)
    }

    /// Normalizes a chart vector to unit length in the metric at its base point.
    pub fn unit_tangent(&self, base: &ChartPoint, v: &[f64]) -> Result<TangentVector> {
        if !self.is_chart() {
            return Ok(TangentVector {
                base: base.clone(),
                v: Vec::new(),
            });
        }
        self.check_point(base)?;
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DegenerateInput(format!(
                "velocity must have {n} components"
            )));
        }
        let mut g = vec![0.0; n];
        self.metric_diag_into(&base.coords, &mut g);
        let norm = self.inner(&g, v, v).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateInput("zero velocity".into()));
        }
        Ok(TangentVector {
            base: base.clone(),
            v: v.iter().map(|c| c / norm).collect(),
        })
    }

    /// Orthonormal frame of `v^perp` at the base of `theta`, flattened
    /// row-major (`n-1` rows of `n` chart components).
    pub(crate) fn orthonormal_frame(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut g = vec![0.0; n];
        self.metric_diag_into(x, &mut g);
        let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
        for e in 0..n {
            if basis.len() == n {
                break;
            }
            let mut w = vec![0.0; n];
            w[e] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let proj = self.inner(&g, &w, b) / self.inner(&g, b, b);
                    linalg::axpy(&mut w, -proj, b);
                }
            }
            let norm = self.inner(&g, &w, &w).sqrt();
            if norm > 1e-6 {
                w.iter_mut().for_each(|c| *c /= norm);
                basis.push(w);
            }
        }
        basis.into_iter().skip(1).flatten().collect()
    }

    /// Ricci curvature in direction `theta`: frame average of sectional curvatures.
    pub fn ricci_along(&self, theta: &TangentVector) -> Result<f64> {
        let m = self.normal_dim();
        let mut r = vec![0.0; m * m];
        if self.is_chart() {
            let unit = self.unit_tangent(&theta.base, &theta.v)?;
            let frame = self.orthonormal_frame(&unit.base.coords, &unit.v);
            self.chart_endomorphism_into(&unit.base.coords, &unit.v, &frame, &mut r);
        } else {
            self.frame_endomorphism_into(theta.phase_value(), &mut r);
        }
        Ok(linalg::trace(&r, m) / m as f64)
    }

    /// Curvature endomorphism at the current point of an orbit.
    pub fn curvature_endomorphism(&self, orbit: &OrbitState) -> Result<CurvatureEndomorphism> {
        let m = self.normal_dim();
        let mut r = vec![0.0; m * m];
        if self.is_chart() {
            let n = self.dim();
            let x = &orbit.point.coords;
            if !self.in_domain(x) {
                return Err(self.domain_error(x));
            }
            let deviation = orbit.frame_deviation(self);
            if deviation > FRAME_TOL {
                return Err(Error::FrameDrift {
                    deviation,
                    limit: FRAME_TOL,
                });
            }
            let frame: Vec<f64> = orbit.frame.iter().flat_map(|f| f.iter().copied()).collect();
            debug_assert_eq!(frame.len(), m * n);
            self.chart_endomorphism_into(x, &orbit.velocity, &frame, &mut r);
        } else {
            self.frame_endomorphism_into(orbit.curvature_time(), &mut r);
        }
        Ok(CurvatureEndomorphism {
            matrix: linalg::to_dmatrix(&r, m, m),
            t: orbit.t,
        })
    }

    /// Catalog listing used by the CLI.
    pub fn catalog() -> Vec<(&'static str, &'static str)> {
        vec![
            ("flat_torus", "dim: flat unit torus T^n, K = 0"),
            ("hyperbolic_plane", "upper half-plane y > 0, K = -1"),
            (
                "round_sphere",
                "radius: colatitude/longitude chart, K = 1/radius^2",
            ),
            (
                "constant_curvature",
                "dim, curvature: frame-only space form, R(t) = K I",
            ),
            (
                "surface_of_revolution",
                "shape = cosh {offset} | torus {major, minor}; du^2 + f(u)^2 dv^2",
            ),
            (
                "synthetic",
                "dim, base, modes, rotation_rate, period: prescribed R(t)",
            ),
        ]
    }
}

fn sampled_profile_bounds(p: &SyntheticProfile) -> (f64, f64) {
    let m = p.normal_dim();
    let mut r = vec![0.0; m * m];
    let (horizon, step) = match p.period {
        Some(tau) => (tau, tau / 4000.0),
        None => (400.0, 0.01),
    };
    let count = (horizon / step).ceil() as usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=count {
        let t = if p.period.is_some() {
            k as f64 * step
        } else {
            -0.5 * horizon + k as f64 * step
        };
        p.eval_into(t, &mut r);
        let ev = linalg::sym_eigenvalues(&r, m);
        lo = lo.min(ev[0]);
        hi = hi.max(ev[m - 1]);
    }
    (lo, hi)
}
