//! Lyapunov exponents, Ricci averages, the curvature inequality chain and
//! its equality (rigidity) case.

mod periodic;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::track::{jacobi_rhs, CurvatureStream, Rk4};
use crate::integrator::{
    run_riccati, start_track, unstable_riccati, IntegratorConfig, NodeView, Provenance, RiccatiRun,
    RiccatiStart,
};
use crate::linalg;
use crate::models::{CurvatureBounds, MetricModel, TangentVector};

pub use periodic::{periodic_orbit_analysis, PeriodicProfile, PeriodicRecord};

/// Tolerance for declaring the upper bound of the chain an equality.
pub const EQUALITY_TOL: f64 = 1e-4;
/// Tolerance on `max |U - lambda I|_F` for the scalar verdict.
pub const SCALAR_TOL: f64 = 1e-3;

/// Time average with its prefix values at `T/4, T/2, 3T/4, T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffEstimate {
    pub value: f64,
    pub horizon: f64,
    pub window_values: Vec<f64>,
    pub spread: f64,
    pub converged: bool,
}

impl BirkhoffEstimate {
    fn from_windows(window_values: Vec<f64>, horizon: f64, tol: f64) -> Self {
        let hi = window_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = window_values.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi - lo;
        BirkhoffEstimate {
            value: *window_values.last().expect("four windows"),
            horizon,
            window_values,
            spread,
            converged: spread < tol,
        }
    }
}

/// Finite-horizon proxies for the upper and lower Ricci averages: extremes of
/// the prefix averages over the trailing half of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciAverages {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rigidity {
    pub lambda_hat: f64,
    pub max_dev_from_scalar: f64,
    pub scalar: bool,
    /// `|lambda_hat - sqrt(-Gamma_R)|` with `Gamma_R` the time average of Ric.
    pub ricci_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: f64,
    /// Signed: positive when the inequality holds with room.
    pub gap: f64,
    pub ok: bool,
    pub strict: bool,
}

impl BoundCheck {
    fn new(bound: f64, gap: f64, tol: f64) -> Self {
        BoundCheck {
            bound,
            gap,
            ok: gap >= -tol,
            strict: gap > 10.0 * tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    /// `-(n-1) Gamma+ / c <= chi+`; `None` when inapplicable.
    pub lower: Option<BoundCheck>,
    /// Why the lower bound was skipped.
    pub lower_skipped: Option<String>,
    /// `chi+ <= (n-1) sqrt(-Gamma-)`.
    pub upper: Option<BoundCheck>,
    pub upper_skipped: Option<String>,
    pub equality: bool,
}

impl ChainCheck {
    pub fn violated(&self) -> bool {
        self.lower.as_ref().is_some_and(|b| !b.ok) || self.upper.as_ref().is_some_and(|b| !b.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInequalities {
    /// `c tr U - tr U^2`, only when the spectrum of `U` lies in `[0, c]`.
    pub focal_slack: Option<f64>,
    /// `(n-1) tr U^2 - (tr U)^2`.
    pub cauchy_schwarz_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub c: f64,
    pub b: f64,
}

impl From<CurvatureBounds> for Bounds {
    fn from(cb: CurvatureBounds) -> Self {
        Bounds {
            c: cb.c(),
            b: cb.b(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub dim: usize,
    pub chi_plus_riccati: BirkhoffEstimate,
    pub chi_spectrum_qr: Option<Vec<f64>>,
    pub ricci_avg: BirkhoffEstimate,
    pub gamma: RicciAverages,
    pub bounds: Bounds,
    pub no_focal_points: bool,
    pub chain_check: ChainCheck,
    /// `chi+ / (n-1)`, the `alpha` of the level set containing the orbit.
    pub level_class: Option<f64>,
    pub rigidity: Rigidity,
    /// Unstable Riccati value at the start of the orbit.
    pub u0: Vec<f64>,
    pub limit_horizon: f64,
    pub limit_residual: f64,
    /// The unstable limit only converged polynomially (flat directions).
    pub slow_rate: bool,
    /// Smallest pointwise trace-inequality slacks met along the orbit.
    pub min_focal_slack: Option<f64>,
    pub min_cauchy_schwarz_slack: f64,
}

/// Options for [`analyze_orbit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub horizon: f64,
    /// Tolerance for window convergence, the chain and level sets.
    pub tol: f64,
    /// Cauchy tolerance of the unstable limit.
    pub limit_tol: f64,
    pub equality_tol: f64,
    pub scalar_tol: f64,
    pub qr_spectrum: bool,
    pub qr_interval: f64,
    pub integrator: IntegratorConfig,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            horizon: 1000.0,
            tol: 1e-3,
            limit_tol: 1e-9,
            equality_tol: EQUALITY_TOL,
            scalar_tol: SCALAR_TOL,
            qr_spectrum: false,
            qr_interval: 1.0,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl AnalysisOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        AnalysisOptions {
            horizon,
            ..Self::default()
        }
    }
}

/// Unstable value at `theta`. A flat-type limit that decays polynomially is
/// accepted with its last estimate and flagged.
pub(crate) struct UnstableStart {
    pub u0: Vec<f64>,
    pub horizon: f64,
    pub residual: f64,
    pub slow_rate: bool,
}

pub(crate) fn unstable_start(
    model: &MetricModel,
    theta: &TangentVector,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<UnstableStart> {
    match unstable_riccati(model, theta, tol, cfg) {
        Ok(sol) => {
            let (horizon, residual) = match sol.provenance {
                Provenance::UnstableLimit { t_final, residual } => (t_final, residual),
                _ => (0.0, 0.0),
            };
            Ok(UnstableStart {
                u0: linalg::from_dmatrix(&sol.u0),
                horizon,
                residual,
                slow_rate: sol.decay_exponent > -1.5,
            })
        }
        Err(Error::NoConvergence {
            t_max,
            residual,
            decay_exponent,
            last_estimate,
        }) if (-1.5..=-0.5).contains(&decay_exponent) => Ok(UnstableStart {
            u0: last_estimate,
            horizon: t_max,
            residual,
            slow_rate: true,
        }),
        Err(e) => Err(e),
    }
}

/// Everything a single forward Riccati pass from `U_u(0)` yields.
struct Pass {
    chi: BirkhoffEstimate,
    ricci: BirkhoffEstimate,
    gamma: RicciAverages,
    rigidity: Rigidity,
    min_focal_slack: Option<f64>,
    min_cs_slack: f64,
}

const RIGIDITY_STRIDE: usize = 10;
const TRACE_STRIDE: usize = 100;

fn forward_pass(
    model: &MetricModel,
    theta: &TangentVector,
    u0: &[f64],
    horizon: f64,
    tol: f64,
    scalar_tol: f64,
    cfg: &IntegratorConfig,
) -> Result<Pass> {
    if !(horizon > 0.0) {
        return Err(Error::DegenerateInput("horizon must be positive".into()));
    }
    let m = model.normal_dim();
    let steps = cfg.steps_for(horizon).max(4);
    let horizon = steps as f64 * cfg.dt;
    let marks: Vec<usize> = (1..=4).map(|j| (j * steps + 2) / 4).collect();
    let c = model.curvature_bounds().c();
    let mut tr_windows = Vec::with_capacity(4);
    let mut ric_windows = Vec::with_capacity(4);
    let (mut gamma_plus, mut gamma_minus) = (f64::NEG_INFINITY, f64::INFINITY);
    // (tr U, |U|_F^2) at sampled nodes, for the scalar test once lambda_hat is known
    let mut samples = Vec::with_capacity(steps / RIGIDITY_STRIDE + 2);
    samples.push((linalg::trace(u0, m), u0.iter().map(|x| x * x).sum::<f64>()));
    let mut min_focal: Option<f64> = None;
    let mut min_cs = f64::INFINITY;
    let mut trace_check = |u: &[f64]| {
        let t = pointwise_trace_inequalities(&linalg::to_dmatrix(u, m, m), c);
        if let Some(s) = t.focal_slack {
            min_focal = Some(min_focal.map_or(s, |x: f64| x.min(s)));
        }
        min_cs = min_cs.min(t.cauchy_schwarz_slack);
    };
    trace_check(u0);
    let mut k = 0usize;
    let observe = |node: &NodeView| {
        k += 1;
        let avg_ric = node.int_ric / node.elapsed;
        if 2 * k >= steps {
            gamma_plus = gamma_plus.max(avg_ric);
            gamma_minus = gamma_minus.min(avg_ric);
        }
        if marks.contains(&k) {
            tr_windows.push(node.int_tr_u / node.elapsed);
            ric_windows.push(avg_ric);
        }
        if k.is_multiple_of(RIGIDITY_STRIDE) {
            samples.push((
                linalg::trace(node.u, m),
                node.u.iter().map(|x| x * x).sum::<f64>(),
            ));
        }
        if k.is_multiple_of(TRACE_STRIDE) {
            trace_check(node.u);
        }
    };
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    if let RiccatiRun::Conjugate(t_star) =
        run_riccati(&mut stream, RiccatiStart::Value(u0), steps, cfg, observe)?
    {
        return Err(Error::ConjugatePointDetected { t_star });
    }
    let chi = BirkhoffEstimate::from_windows(tr_windows, horizon, tol);
    let ricci = BirkhoffEstimate::from_windows(ric_windows, horizon, tol);
    let lambda_hat = chi.value / m as f64;
    let mf = m as f64;
    let max_dev = samples
        .iter()
        .map(|&(tr, sq)| (sq - 2.0 * lambda_hat * tr + mf * lambda_hat * lambda_hat).max(0.0))
        .fold(0.0, f64::max)
        .sqrt();
    let rigidity = Rigidity {
        lambda_hat,
        max_dev_from_scalar: max_dev,
        scalar: max_dev < scalar_tol,
        ricci_gap: (lambda_hat - (-ricci.value).max(0.0).sqrt()).abs(),
    };
    Ok(Pass {
        gamma: RicciAverages {
            gamma_plus,
            gamma_minus,
            converged: gamma_plus - gamma_minus < tol,
        },
        chi,
        ricci,
        rigidity,
        min_focal_slack: min_focal,
        min_cs_slack: min_cs,
    })
}

/// `chi+ = (1/T) int_0^T tr U_u`, integrated forward from the unstable value.
pub fn chi_plus_riccati(
    model: &MetricModel,
    theta: &TangentVector,
    horizon: f64,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<BirkhoffEstimate> {
    let start = unstable_start(model, theta, tol.min(1e-9), cfg)?;
    Ok(forward_pass(model, theta, &start.u0, horizon, tol, SCALAR_TOL, cfg)?.chi)
}

/// Lyapunov spectrum of the Jacobi pair `(J, J')` by periodic QR, descending.
pub fn chi_spectrum_qr(
    model: &MetricModel,
    theta: &TangentVector,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    chi_spectrum_qr_with(model, theta, horizon, 1.0, cfg)
}

pub fn chi_spectrum_qr_with(
    model: &MetricModel,
    theta: &TangentVector,
    horizon: f64,
    interval: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let m = model.normal_dim();
    let d = 2 * m;
    let block = m * d;
    let per_qr = cfg.steps_for(interval).max(1);
    let rounds = (cfg.steps_for(horizon) / per_qr).max(1);
    let total = (rounds * per_qr) as f64 * cfg.dt;
    // state [Y (m x d), Y' (m x d), int Ric]; the stacked 2m x 2m matrix starts at I
    let mut state = vec![0.0; 2 * block + 1];
    for i in 0..d {
        state[i * d + i] = 1.0;
    }
    let mut sums = vec![0.0; d];
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    let mut rk = Rk4::new(state.len());
    for _ in 0..rounds {
        for _ in 0..per_qr {
            stream.advance(cfg.dt)?;
            rk.step(&mut state, cfg.dt, &stream, |r, s, out| {
                jacobi_rhs(m, d, r, s, out)
            });
            stream.commit();
        }
        let z = DMatrix::from_row_slice(d, d, &state[..2 * block]);
        let qr = z.qr();
        let r = qr.r();
        let mut q = qr.q();
        for i in 0..d {
            let rii = r[(i, i)];
            sums[i] += rii.abs().ln();
            if rii < 0.0 {
                q.column_mut(i).neg_mut();
            }
        }
        for i in 0..d {
            for j in 0..d {
                state[i * d + j] = q[(i, j)];
            }
        }
    }
    let mut exps: Vec<f64> = sums.iter().map(|s| s / total).collect();
    exps.sort_by(|a, b| b.total_cmp(a));
    Ok(exps)
}

/// Upper and lower Ricci average proxies over `[0, T]`.
pub fn ricci_averages(
    model: &MetricModel,
    theta: &TangentVector,
    horizon: f64,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<RicciAverages> {
    let m = model.normal_dim();
    let steps = cfg.steps_for(horizon).max(2);
    let mut stream = CurvatureStream::new(start_track(model, theta, cfg)?);
    let mut rk = Rk4::new(1);
    // Per-step increments, Kahan-summed.
    let (mut total, mut carry) = (0.0, 0.0);
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 1..=steps {
        stream.advance(cfg.dt)?;
        let mut inc = [0.0];
        rk.step(&mut inc, cfg.dt, &stream, |r, _, out| {
            out[0] = linalg::trace(r, m) / m as f64
        });
        stream.commit();
        let y = inc[0] - carry;
        let t = total + y;
        carry = (t - total) - y;
        total = t;
        if 2 * k >= steps {
            let avg = total / (k as f64 * cfg.dt);
            hi = hi.max(avg);
            lo = lo.min(avg);
        }
    }
    Ok(RicciAverages {
        gamma_plus: hi,
        gamma_minus: lo,
        converged: hi - lo < tol,
    })
}

/// Evaluates `-(n-1) Gamma+ / c <= chi+ <= (n-1) sqrt(-Gamma-)`.
pub fn check_inequality_chain(report: &LyapunovReport, tol: f64) -> ChainCheck {
    check_chain_values(
        report.dim,
        report.chi_plus_riccati.value,
        &report.gamma,
        report.bounds.c,
        report.no_focal_points,
        tol,
        EQUALITY_TOL,
    )
}

fn check_chain_values(
    dim: usize,
    chi: f64,
    gamma: &RicciAverages,
    c: f64,
    no_focal_points: bool,
    tol: f64,
    equality_tol: f64,
) -> ChainCheck {
    let k = (dim - 1) as f64;
    let (lower, lower_skipped) = if !no_focal_points {
        (None, Some("curvature takes positive values".to_string()))
    } else if c <= 0.0 {
        (
            None,
            Some(Error::Inapplicable("c = 0 in the lower bound".into()).to_string()),
        )
    } else {
        let bound = -k * gamma.gamma_plus / c;
        (Some(BoundCheck::new(bound, chi - bound, tol)), None)
    };
    let (upper, upper_skipped) = if gamma.gamma_minus > tol {
        (None, Some("positive Ricci average".to_string()))
    } else {
        let bound = k * (-gamma.gamma_minus).max(0.0).sqrt();
        (Some(BoundCheck::new(bound, bound - chi, tol)), None)
    };
    let equality = upper.as_ref().is_some_and(|u| u.gap.abs() < equality_tol);
    ChainCheck {
        lower,
        lower_skipped,
        upper,
        upper_skipped,
        equality,
    }
}

/// `tr U^2 <= c tr U` (spectrum in `[0, c]`) and `(tr U)^2 <= (n-1) tr U^2`.
pub fn pointwise_trace_inequalities(u: &DMatrix<f64>, c: f64) -> TraceInequalities {
    let m = u.nrows();
    let flat = linalg::from_dmatrix(u);
    let tr = u.trace();
    let tr_sq: f64 = (u * u).trace();
    let eig = linalg::sym_eigenvalues(&flat, m);
    let in_range = eig.iter().all(|&l| (0.0..=c).contains(&l));
    TraceInequalities {
        focal_slack: in_range.then_some(c * tr - tr_sq),
        cauchy_schwarz_slack: m as f64 * tr_sq - tr * tr,
    }
}

/// Whether `chi+ = alpha (n-1)` within `tol`.
pub fn classify_level_set(report: &LyapunovReport, alpha: f64, tol: f64) -> Result<bool> {
    if !report.chi_plus_riccati.converged {
        return Err(Error::Undetermined(format!(
            "chi+ windows spread {:.3e} over the horizon",
            report.chi_plus_riccati.spread
        )));
    }
    Ok((report.chi_plus_riccati.value - alpha * (report.dim - 1) as f64).abs() < tol)
}

/// Scalar test `U_u(t) = lambda I` along the orbit.
pub fn rigidity_test(
    model: &MetricModel,
    theta: &TangentVector,
    horizon: f64,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<Rigidity> {
    let start = unstable_start(model, theta, 1e-9, cfg)?;
    Ok(forward_pass(model, theta, &start.u0, horizon, tol, tol, cfg)?.rigidity)
}

/// Full single-orbit analysis: unstable limit, one forward pass, optional QR
/// spectrum, the inequality chain and the rigidity verdict.
pub fn analyze_orbit(
    model: &MetricModel,
    theta: &TangentVector,
    opts: &AnalysisOptions,
) -> Result<LyapunovReport> {
    let cfg = &opts.integrator;
    let start = unstable_start(model, theta, opts.limit_tol, cfg)?;
    let pass = forward_pass(
        model,
        theta,
        &start.u0,
        opts.horizon,
        opts.tol,
        opts.scalar_tol,
        cfg,
    )?;
    let spectrum = if opts.qr_spectrum {
        Some(chi_spectrum_qr_with(
            model,
            theta,
            opts.horizon,
            opts.qr_interval,
            cfg,
        )?)
    } else {
        None
    };
    let dim = model.dim();
    let bounds: Bounds = model.curvature_bounds().into();
    let no_focal_points = model.has_no_focal_points();
    let chain_check = check_chain_values(
        dim,
        pass.chi.value,
        &pass.gamma,
        bounds.c,
        no_focal_points,
        opts.tol,
        opts.equality_tol,
    );
    Ok(LyapunovReport {
        dim,
        level_class: pass
            .chi
            .converged
            .then(|| pass.chi.value / (dim - 1) as f64),
        chi_plus_riccati: pass.chi,
        chi_spectrum_qr: spectrum,
        ricci_avg: pass.ricci,
        gamma: pass.gamma,
        bounds,
        no_focal_points,
        chain_check,
        rigidity: pass.rigidity,
        u0: start.u0,
        limit_horizon: start.horizon,
        limit_residual: start.residual,
        slow_rate: start.slow_rate,
        min_focal_slack: pass.min_focal_slack,
        min_cauchy_schwarz_slack: pass.min_cs_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SyntheticProfile;

    #[test]
    fn hyperbolic_exponent_and_equality() {
        let model = MetricModel::hyperbolic_plane();
        let theta = TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]);
        let rep = analyze_orbit(&model, &theta, &AnalysisOptions::with_horizon(100.0)).unwrap();
        assert!((rep.chi_plus_riccati.value - 1.0).abs() < 1e-6);
        assert!(rep.chain_check.equality && !rep.chain_check.violated());
        assert!(rep.rigidity.scalar);
        assert!(classify_level_set(&rep, 1.0, 1e-3).unwrap());
        assert!(!classify_level_set(&rep, 0.5, 1e-3).unwrap());
    }

    #[test]
    fn constant_curvature_three() {
        let model = MetricModel::constant_curvature(3, -4.0);
        let theta = TangentVector::phase(0.0);
        let rep = analyze_orbit(&model, &theta, &AnalysisOptions::with_horizon(50.0)).unwrap();
        assert!((rep.chi_plus_riccati.value - 4.0).abs() < 1e-8);
        assert!((rep.rigidity.lambda_hat - 2.0).abs() < 1e-8);
        assert!(rep.rigidity.max_dev_from_scalar < 1e-8);
        let lower = rep.chain_check.lower.unwrap();
        assert!((lower.bound - 4.0).abs() < 1e-9);
    }

    #[test]
    fn trace_inequality_examples() {
        let t = pointwise_trace_inequalities(
            &DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0]),
            2.0,
        );
        assert_eq!(t.focal_slack, Some(1.0));
        assert_eq!(t.cauchy_schwarz_slack, 1.0);
        let t = pointwise_trace_inequalities(
            &DMatrix::from_diagonal(&nalgebra::dvector![0.0, 3.0]),
            2.0,
        );
        assert_eq!(t.focal_slack, None);
        assert_eq!(t.cauchy_schwarz_slack, 9.0);
        let t = pointwise_trace_inequalities(&(DMatrix::identity(3, 3) * 1.7), 2.0);
        assert!(t.cauchy_schwarz_slack.abs() < 1e-12);
    }

    #[test]
    fn spectrum_pairs() {
        let model = MetricModel::constant_curvature(3, -4.0);
        let cfg = IntegratorConfig::default();
        let s = chi_spectrum_qr(&model, &TangentVector::phase(0.0), 200.0, &cfg).unwrap();
        for (got, want) in s.iter().zip([2.0, 2.0, -2.0, -2.0]) {
            assert!((got - want).abs() < 1e-3, "{s:?}");
        }
    }

    #[test]
    fn ricci_proxies_constant() {
        let model = MetricModel::synthetic(SyntheticProfile::constant_diagonal(3, &[-1.0, -4.0]));
        let cfg = IntegratorConfig::default();
        let g = ricci_averages(&model, &TangentVector::phase(0.0), 10.0, 1e-9, &cfg).unwrap();
        assert!((g.gamma_plus + 2.5).abs() < 1e-12 && (g.gamma_minus + 2.5).abs() < 1e-12);
    }
}
