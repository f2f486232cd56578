use std::f64::consts::{E, FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riccati_lab::integrator::{
    advance_orbit, integrate_jacobi, integrate_riccati, push_tangent, stable_riccati,
    unstable_riccati, IntegratorConfig, OrbitState, Provenance, RiccatiInit, RiccatiOutcome,
};
use riccati_lab::models::{MetricModel, ProfileShape, SyntheticProfile, TangentVector};
use riccati_lab::Error;

fn run_orbit(model: &MetricModel, theta: &TangentVector, dt: f64, steps: usize) -> OrbitState {
    let cfg = IntegratorConfig::with_dt(dt);
    let mut state = OrbitState::new(model, theta).unwrap();
    for _ in 0..steps {
        state = advance_orbit(model, &state, dt, &cfg).unwrap();
    }
    state
}

#[test]
fn advance_orbit_examples() {
    let flat = MetricModel::flat_torus(2);
    let s = run_orbit(
        &flat,
        &TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0]),
        0.25,
        1,
    );
    assert!((s.point.coords[0] - 0.25).abs() < 1e-15 && s.point.coords[1].abs() < 1e-15);

    let h = MetricModel::hyperbolic_plane();
    let s = run_orbit(
        &h,
        &TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]),
        1e-3,
        1000,
    );
    assert!(s.point.coords[0].abs() < 1e-12);
    assert!((s.point.coords[1] - E).abs() < 1e-8);

    let sphere = MetricModel::round_sphere(1.0);
    let s = run_orbit(
        &sphere,
        &TangentVector::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]),
        PI / 1000.0,
        1000,
    );
    assert!((s.point.coords[0] - FRAC_PI_2).abs() < 1e-6);
    assert!((s.point.coords[1].rem_euclid(2.0 * PI) - PI).abs() < 1e-6);
}

#[test]
fn domain_exit_is_reported() {
    let model = MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 });
    let cfg = IntegratorConfig::with_dt(0.01);
    let mut state =
        OrbitState::new(&model, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0])).unwrap();
    let err = loop {
        match advance_orbit(&model, &state, cfg.dt, &cfg) {
            Ok(next) => state = next,
            Err(e) => break e,
        }
        assert!(state.t < 1e4);
    };
    assert!(matches!(err, Error::DomainExit { .. }), "{err}");
}

const S0: f64 = -5.0;

/// Semicircle geodesic through `(0, 1)`: `x = c + rho tanh s`, `y = rho / cosh s`,
/// `s = t + S0`. Over `t in [0, 10]` it rises to `y = cosh 5` and comes back.
fn hyperbolic_semicircle(t: f64) -> (f64, f64) {
    let s0 = S0;
    let rho = s0.cosh();
    let c = -rho * s0.tanh();
    let s = t + s0;
    (c + rho * s.tanh(), rho / s.cosh())
}

#[test]
fn rk4_is_fourth_order() {
    let h = MetricModel::hyperbolic_plane();
    let v = vec![1.0 / S0.cosh(), -S0.tanh()];
    let theta = h
        .unit_tangent(&riccati_lab::models::ChartPoint::new(vec![0.0, 1.0]), &v)
        .unwrap();
    let (xe, ye) = hyperbolic_semicircle(10.0);
    let error = |dt: f64| {
        let s = run_orbit(&h, &theta, dt, (10.0 / dt).round() as usize);
        (s.point.coords[0] - xe).hypot(s.point.coords[1] - ye)
    };
    let (e1, e2, e3) = (error(0.2), error(0.1), error(0.05));
    assert!(e1 / e2 >= 12.0, "{e1} {e2}");
    assert!(e2 / e3 >= 12.0, "{e2} {e3}");
}

#[test]
fn speed_and_frame_stay_unit() {
    let models = [
        (
            MetricModel::hyperbolic_plane(),
            TangentVector::new(vec![0.0, 1.0], vec![0.3, 0.4]),
        ),
        (
            MetricModel::round_sphere(2.0),
            TangentVector::new(vec![1.0, 0.0], vec![0.3, 0.4]),
        ),
        (
            MetricModel::surface_of_revolution(ProfileShape::Torus {
                major: 3.0,
                minor: 1.0,
            }),
            TangentVector::new(vec![0.2, 0.0], vec![0.5, 0.2]),
        ),
        (
            MetricModel::flat_torus(3),
            TangentVector::new(vec![0.1, 0.2, 0.3], vec![0.3, 0.4, 1.0]),
        ),
    ];
    for (model, theta) in models {
        let theta = model.unit_tangent(&theta.base, &theta.v).unwrap();
        let cfg = IntegratorConfig::default();
        let mut state = OrbitState::new(&model, &theta).unwrap();
        for _ in 0..5000 {
            state = advance_orbit(&model, &state, cfg.dt, &cfg).unwrap();
            assert!(state.speed_defect(&model) < 1e-12, "{model}");
            assert!(state.frame_deviation(&model) < 1e-8, "{model}");
        }
    }
}

#[test]
fn jacobi_examples() {
    let cfg = IntegratorConfig::default();
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]);
    let one = DMatrix::from_element(1, 1, 1.0);
    let zero = DMatrix::from_element(1, 1, 0.0);
    let sol = integrate_jacobi(&h, &theta, &zero, &one, 2.0, &cfg).unwrap();
    assert!((sol.y[(0, 0)] - 2.0f64.sinh()).abs() < 1e-10);

    let flat = MetricModel::flat_torus(2);
    let sol = integrate_jacobi(
        &flat,
        &TangentVector::new(vec![0.0, 0.0], vec![0.6, 0.8]),
        &one,
        &zero,
        7.0,
        &cfg,
    )
    .unwrap();
    assert_eq!(sol.y[(0, 0)], 1.0);
    assert_eq!(sol.yp[(0, 0)], 0.0);
}

/// `y'' = (1 + 0.5 sin t) y`, `y(0) = y'(0) = 1` at `t = 10`, from a 30-digit
/// Taylor integration.
const WAVE_ANCHOR: (f64, f64) = (31492.01281152959, 30578.09226942288);

#[test]
fn jacobi_regression_anchor() {
    let wave = MetricModel::synthetic(SyntheticProfile::scalar_wave(3, -1.0, -0.5, 1.0));
    let eye = DMatrix::identity(2, 2);
    for dt in [1e-4, 1e-3] {
        let sol = integrate_jacobi(
            &wave,
            &TangentVector::phase(0.0),
            &eye,
            &eye,
            10.0,
            &IntegratorConfig::with_dt(dt),
        )
        .unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        for i in 0..2 {
            assert!(
                rel(sol.y[(i, i)], WAVE_ANCHOR.0) < 1e-9,
                "dt {dt}: {}",
                sol.y
            );
            assert!(rel(sol.yp[(i, i)], WAVE_ANCHOR.1) < 1e-9);
            assert!(sol.y[(i, 1 - i)].abs() < 1e-9);
        }
    }
}

#[test]
fn wronskian_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = IntegratorConfig::default();
    let horizon = 10.0;
    let models = [
        MetricModel::synthetic(SyntheticProfile::scalar_wave(3, -1.0, -0.5, 1.0)),
        MetricModel::constant_curvature(3, -1.0),
        MetricModel::synthetic(SyntheticProfile::random_pinched(
            &mut rng, 4, -1.0, -0.1, None,
        )),
    ];
    for model in models {
        let m = model.normal_dim();
        let y0 = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let yp0 = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let sol =
            integrate_jacobi(&model, &TangentVector::phase(0.3), &y0, &yp0, horizon, &cfg).unwrap();
        let drift = (&sol.wronskian_end - &sol.wronskian_start).abs().max();
        assert!(drift < 1e-6 * horizon, "{model}: {drift}");
    }
}

#[test]
fn riccati_examples() {
    let cfg = IntegratorConfig::default();
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]);
    match integrate_riccati(
        &h,
        &theta,
        &RiccatiInit::Matrix(DMatrix::from_element(1, 1, 1.0)),
        5.0,
        &cfg,
    )
    .unwrap()
    {
        RiccatiOutcome::Regular(u) => assert!((u[(0, 0)] - 1.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let flat = MetricModel::flat_torus(2);
    match integrate_riccati(
        &flat,
        &TangentVector::new(vec![0.5, 0.5], vec![1.0, 0.0]),
        &RiccatiInit::Matrix(DMatrix::zeros(1, 1)),
        9.0,
        &cfg,
    )
    .unwrap()
    {
        RiccatiOutcome::Regular(u) => assert_eq!(u[(0, 0)], 0.0),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        integrate_riccati(
            &h,
            &theta,
            &RiccatiInit::Matrix(DMatrix::zeros(2, 2)),
            1.0,
            &cfg
        ),
        Err(Error::DegenerateInput(_))
    ));
}

#[test]
fn sphere_conjugate_points_at_pi_r() {
    let cfg = IntegratorConfig::default();
    for r in [0.5, 1.0, 2.0] {
        let sphere = MetricModel::round_sphere(r);
        let theta = TangentVector::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0 / r]);
        match integrate_riccati(&sphere, &theta, &RiccatiInit::FocalSeed, 2.0 * PI * r, &cfg)
            .unwrap()
        {
            RiccatiOutcome::ConjugatePointDetected { t_star } => {
                assert!((t_star - PI * r).abs() < 1e-3 * r, "r = {r}: {t_star}")
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn riccati_agrees_with_jacobi_on_random_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let cfg = IntegratorConfig::with_dt(2e-3);
    for k in 0..100 {
        let dim = rng.random_range(2..=4);
        let profile = SyntheticProfile::random_pinched(&mut rng, dim, -4.0, -1.0, None);
        let model = MetricModel::synthetic(profile);
        let m = model.normal_dim();
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.5..0.5));
        let u0 = (&a + a.transpose()) * 0.5 + DMatrix::identity(m, m) * 2.0;
        let theta = TangentVector::phase(rng.random_range(0.0..50.0));
        let horizon = 3.0;
        let u = match integrate_riccati(
            &model,
            &theta,
            &RiccatiInit::Matrix(u0.clone()),
            horizon,
            &cfg,
        )
        .unwrap()
        {
            RiccatiOutcome::Regular(u) => u,
            other => panic!("profile {k}: {other:?}"),
        };
        let sol =
            integrate_jacobi(&model, &theta, &DMatrix::identity(m, m), &u0, horizon, &cfg).unwrap();
        let from_jacobi = &sol.yp * sol.y.clone().try_inverse().unwrap();
        assert!((&u - from_jacobi).abs().max() < 1e-6, "profile {k}");
    }
}

#[test]
fn unstable_and_stable_examples() {
    let cfg = IntegratorConfig::default();
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.4, 0.7], vec![0.0, 1.0]);
    let u = unstable_riccati(&h, &theta, 1e-10, &cfg).unwrap();
    assert!((u.u0[(0, 0)] - 1.0).abs() < 1e-9);
    let Provenance::UnstableLimit { t_final, residual } = u.provenance else {
        panic!()
    };
    assert!(t_final <= 32.0 && residual < 1e-10);
    let s = stable_riccati(&h, &theta, 1e-10, &cfg).unwrap();
    assert!((s.u0[(0, 0)] + 1.0).abs() < 1e-9);

    let cc = MetricModel::constant_curvature(3, -4.0);
    let theta = TangentVector::phase(0.0);
    assert!(
        (unstable_riccati(&cc, &theta, 1e-9, &cfg).unwrap().u0 - DMatrix::identity(2, 2) * 2.0)
            .abs()
            .max()
            < 1e-8
    );
    assert!(
        (stable_riccati(&cc, &theta, 1e-9, &cfg).unwrap().u0 + DMatrix::identity(2, 2) * 2.0)
            .abs()
            .max()
            < 1e-8
    );
}

#[test]
fn flat_limit_reaches_tolerance_polynomially() {
    let cfg = IntegratorConfig::default();
    let flat = MetricModel::flat_torus(2);
    let theta = TangentVector::new(vec![0.2, 0.9], vec![0.6, 0.8]);
    let u = unstable_riccati(&flat, &theta, 1e-4, &cfg).unwrap();
    let Provenance::UnstableLimit { t_final, .. } = u.provenance else {
        panic!()
    };
    assert!(t_final <= 16384.0 + 1e-9, "{t_final}");
    assert!((u.u0[(0, 0)] - 1.0 / t_final).abs() < 1e-9);
    assert!((u.decay_exponent + 1.0).abs() < 0.05);
    let s = stable_riccati(&flat, &theta, 1e-4, &cfg).unwrap();
    assert!(s.u0[(0, 0)].abs() < 1e-4);
}

#[test]
fn green_bounds_hold() {
    let cfg = IntegratorConfig::default();
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases = vec![
        (
            MetricModel::hyperbolic_plane(),
            TangentVector::new(vec![0.0, 1.0], vec![0.6, 0.8]),
        ),
        (
            MetricModel::constant_curvature(4, -2.0),
            TangentVector::phase(0.0),
        ),
        (
            MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 1.0 }),
            TangentVector::new(vec![0.0, 0.0], vec![0.0, 0.5]),
        ),
        (
            MetricModel::synthetic(SyntheticProfile::random_pinched(
                &mut rng, 3, -4.0, -1.0, None,
            )),
            TangentVector::phase(3.0),
        ),
        (
            MetricModel::synthetic(SyntheticProfile::random_pinched(
                &mut rng, 4, -2.0, -0.5, None,
            )),
            TangentVector::phase(-7.0),
        ),
    ];
    for (model, theta) in cases {
        let bounds = model.curvature_bounds();
        let u = unstable_riccati(&model, &theta, 1e-9, &cfg).unwrap().u0;
        let ev = u.clone().symmetric_eigen().eigenvalues;
        for l in ev.iter() {
            assert!(
                *l >= bounds.b() - tol && *l <= bounds.c() + tol,
                "{model}: {ev}"
            );
        }
        assert!((&u - u.transpose()).abs().max() < 1e-10);
    }
}

#[test]
fn push_tangent_examples() {
    let cfg = IntegratorConfig::default();
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]);
    let v = |a: f64, b: f64| (DVector::from_vec(vec![a]), DVector::from_vec(vec![b]));
    let (j, jp) = v(1.0, 1.0);
    let up = push_tangent(&h, &theta, &j, &jp, 3.0, &cfg).unwrap();
    assert!((up.sasaki_norm - 3.0f64.exp() * 2.0f64.sqrt()).abs() < 1e-6);
    let (j, jp) = v(1.0, -1.0);
    let down = push_tangent(&h, &theta, &j, &jp, 3.0, &cfg).unwrap();
    assert!((down.sasaki_norm - (-3.0f64).exp() * 2.0f64.sqrt()).abs() < 1e-6);
    let flat = MetricModel::flat_torus(2);
    let (j, jp) = v(1.0, 0.0);
    let still = push_tangent(
        &flat,
        &TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0]),
        &j,
        &jp,
        12.0,
        &cfg,
    )
    .unwrap();
    assert_eq!(still.sasaki_norm, 1.0);
}
