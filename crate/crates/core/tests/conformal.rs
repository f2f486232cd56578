use std::f64::consts::{LN_2, PI};

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccati_lab::conformal::{
    compose_with_homothety, geometric_grid, growth_estimate_check, homothety_conjugacy_residual,
    homothety_probe, reparametrization_ratio, scale_frame_model, scale_metric, unstable_vector,
    ReparametrizationProbe,
};
use riccati_lab::integrator::IntegratorConfig;
use riccati_lab::lyapunov::chi_plus_riccati;
use riccati_lab::models::{ChartPoint, MetricModel, ProfileShape, SyntheticProfile, TangentVector};
use riccati_lab::Error;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

/// Chart models with a unit initial condition away from chart edges.
fn chart_cases() -> Vec<(MetricModel, TangentVector)> {
    vec![
        (
            MetricModel::flat_torus(2),
            TangentVector::new(vec![0.1, 0.2], vec![0.6, 0.8]),
        ),
        (
            MetricModel::flat_torus(3),
            TangentVector::new(vec![0.1, 0.2, 0.3], vec![0.0, 0.6, 0.8]),
        ),
        (
            MetricModel::hyperbolic_plane(),
            TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]),
        ),
        (
            MetricModel::hyperbolic_plane(),
            TangentVector::new(vec![0.3, 1.2], vec![0.5, -0.2]),
        ),
        (
            MetricModel::round_sphere(1.0),
            TangentVector::new(vec![PI / 2.0, 0.0], vec![0.0, 1.0]),
        ),
        (
            MetricModel::round_sphere(2.5),
            TangentVector::new(vec![1.2, 0.4], vec![0.0, 0.3]),
        ),
        (
            MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 }),
            TangentVector::new(vec![0.2, 0.0], vec![0.3, 0.4]),
        ),
        (
            MetricModel::surface_of_revolution(ProfileShape::Torus {
                major: 3.0,
                minor: 1.0,
            }),
            TangentVector::new(vec![0.5, 0.0], vec![0.4, 0.2]),
        ),
    ]
}

fn unit(model: &MetricModel, theta: &TangentVector) -> TangentVector {
    model.unit_tangent(&theta.base, &theta.v).unwrap()
}

#[test]
fn scaled_curvature_examples() {
    let k = |m: &MetricModel, p: Vec<f64>| {
        m.sectional_curvature(&ChartPoint::new(p), &[1.0, 0.0], &[0.0, 1.0])
            .unwrap()
    };
    let h = scale_metric(&MetricModel::hyperbolic_plane(), LN_2).unwrap();
    for y in [0.1, 1.0, 7.0] {
        assert!((k(h.model(), vec![0.4, y]) + 0.25).abs() < 1e-12);
    }
    for r in [-1.3, 0.0, 2.0] {
        let t = scale_metric(&MetricModel::flat_torus(2), r).unwrap();
        assert_eq!(k(t.model(), vec![0.2, 0.7]), 0.0);
    }
    let s = scale_metric(&MetricModel::round_sphere(1.0), LN_2).unwrap();
    assert!((k(s.model(), vec![0.9, 2.0]) - 0.25).abs() < 1e-12);

    let synthetic = MetricModel::synthetic(SyntheticProfile::scalar_wave(2, -1.0, -0.5, 1.0));
    assert!(matches!(
        scale_metric(&synthetic, LN_2),
        Err(Error::UnsupportedModel { .. })
    ));
    assert!(scale_frame_model(&synthetic, LN_2).is_ok());
}

#[test]
fn metric_scales_exactly() {
    for (model, theta) in chart_cases() {
        for r in [-LN_2, 0.37, LN_2] {
            let scaled = scale_metric(&model, r).unwrap();
            let g = model.metric_tensor(&theta.base).unwrap();
            let gr = scaled.model().metric_tensor(&theta.base).unwrap();
            for (a, b) in g.iter().zip(gr.iter()) {
                assert!(
                    (a * (2.0 * r).exp() - b).abs() <= 1e-15 * b.abs().max(1.0),
                    "{model}"
                );
            }
        }
    }
}

#[test]
fn curvature_scaling_on_every_chart_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (model, _) in chart_cases() {
        for r in [-LN_2, LN_2, 1.7] {
            let res = scale_metric(&model, r)
                .unwrap()
                .curvature_scaling_residual(&mut rng, 1000)
                .unwrap();
            assert!(res < 1e-9, "{model} r={r}: {res}");
        }
    }
}

#[test]
fn conjugacy_examples() {
    let grid: Vec<f64> = (1..=10).map(f64::from).collect();
    let (h, vertical) = (
        MetricModel::hyperbolic_plane(),
        TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]),
    );
    assert!(homothety_conjugacy_residual(&h, LN_2, &vertical, &grid, &cfg()).unwrap() < 1e-6);
    for r in [-2.0, 0.5, LN_2] {
        let flat = MetricModel::flat_torus(2);
        let theta = TangentVector::new(vec![0.1, 0.2], vec![0.6, 0.8]);
        assert!(homothety_conjugacy_residual(&flat, r, &theta, &grid, &cfg()).unwrap() < 1e-12);
    }
    for (model, theta) in chart_cases() {
        assert!(
            homothety_conjugacy_residual(&model, 0.0, &theta, &grid, &cfg()).unwrap() < 1e-12,
            "{model}"
        );
    }
}

/// The vertical hyperbolic geodesic is `y = e^t`; both sides of the
/// conjugacy land on it.
#[test]
fn vertical_geodesic_oracle() {
    use riccati_lab::integrator::{advance_orbit, OrbitState};
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]);
    let mut end = OrbitState::new(&h, &theta).unwrap();
    for _ in 0..5000 {
        end = advance_orbit(&h, &end, 1e-3, &cfg()).unwrap();
    }
    assert!((end.point.coords[1] / 5.0f64.exp() - 1.0).abs() < 1e-9);
    assert!(end.point.coords[0].abs() < 1e-12);
}

#[test]
fn conjugacy_on_every_chart_model() {
    let grid: Vec<f64> = (1..=10).map(f64::from).collect();
    for (model, theta) in chart_cases() {
        for r in [-LN_2, 0.0, LN_2, 0.37, -1.1] {
            let res = homothety_conjugacy_residual(&model, r, &theta, &grid, &cfg()).unwrap();
            assert!(res < 1e-6, "{model} r={r}: {res}");
        }
    }
}

#[test]
fn ratio_examples() {
    let grid = geometric_grid(1.0, 100.0, 10);
    let probe = ReparametrizationProbe::from_fn(&grid, |t| 2.0 * t, 2.0).unwrap();
    let est = reparametrization_ratio(&probe, 1e-12).unwrap();
    assert_eq!((est.liminf, est.limsup, est.e_a_holds), (2.0, 2.0, true));

    let probe = ReparametrizationProbe::from_fn(&grid, |t| t, 1.0).unwrap();
    let est = reparametrization_ratio(&probe, 0.0).unwrap();
    assert_eq!((est.liminf, est.limsup), (1.0, 1.0));

    let probe =
        ReparametrizationProbe::from_fn(&geometric_grid(1e3, 1e4, 10), |t| t + t.sqrt(), 1.0)
            .unwrap();
    let est = reparametrization_ratio(&probe, 0.0).unwrap();
    assert!(est.liminf > 1.0 && est.limsup < 1.02, "{est:?}");
    assert!(est.e_a_holds);

    let probe = ReparametrizationProbe::from_fn(&grid, |t| 0.5 * t, 0.6).unwrap();
    assert!(!reparametrization_ratio(&probe, 1e-9).unwrap().e_a_holds);
}

#[test]
fn ratio_needs_a_decade_of_samples() {
    let short = ReparametrizationProbe::from_fn(&geometric_grid(1.0, 5.0, 30), |t| t, 1.0).unwrap();
    assert!(matches!(
        reparametrization_ratio(&short, 0.0),
        Err(Error::InsufficientSamples(_))
    ));
    let few: Vec<f64> = (1..10).map(|k| (k * k) as f64).collect();
    let few = ReparametrizationProbe::from_fn(&few, |t| t, 1.0).unwrap();
    assert!(matches!(
        reparametrization_ratio(&few, 0.0),
        Err(Error::InsufficientSamples(_))
    ));
    assert!(ReparametrizationProbe::new(vec![(1.0, 2.0), (2.0, 1.0)], 1.0).is_err());
    assert!(ReparametrizationProbe::new(vec![(2.0, 1.0), (1.0, 2.0)], 1.0).is_err());
}

#[test]
fn homothety_probe_recovers_scale() {
    let grid = geometric_grid(1.0, 10.0, 10);
    for (model, theta) in chart_cases() {
        for r in [-LN_2, LN_2] {
            let probe = homothety_probe(&model, r, &unit(&model, &theta), &grid, &cfg()).unwrap();
            let est = reparametrization_ratio(&probe, 1e-9).unwrap();
            assert!(
                (est.liminf - r.exp()).abs() < 1e-9 && (est.limsup - r.exp()).abs() < 1e-9,
                "{model}: {est:?}"
            );
            assert!(est.e_a_holds);
        }
    }
}

#[test]
fn chi_plus_scales_inversely() {
    let cases = vec![
        (
            MetricModel::hyperbolic_plane(),
            TangentVector::new(vec![0.3, 1.2], vec![0.5, -0.2]),
        ),
        (
            MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 }),
            TangentVector::new(vec![0.0, 0.0], vec![0.0, 1.0]),
        ),
    ];
    for (model, theta) in cases {
        let theta = unit(&model, &theta);
        let chi = chi_plus_riccati(&model, &theta, 100.0, 1e-3, &cfg())
            .unwrap()
            .value;
        for r in [-LN_2, LN_2] {
            let scaled = scale_metric(&model, r).unwrap();
            let theta_r = scaled.model().unit_tangent(&theta.base, &theta.v).unwrap();
            let chi_r = chi_plus_riccati(scaled.model(), &theta_r, 100.0, 1e-3, &cfg())
                .unwrap()
                .value;
            assert!(
                (chi_r - (-r).exp() * chi).abs() < 2e-3,
                "{model} r={r}: {chi_r} vs {chi}"
            );
        }
    }
    let cc = MetricModel::constant_curvature(3, -4.0);
    let wave = MetricModel::synthetic(SyntheticProfile::scalar_wave(3, -2.0, -0.5, 1.3));
    for model in [cc, wave] {
        let chi = chi_plus_riccati(&model, &TangentVector::phase(0.0), 1000.0, 1e-3, &cfg())
            .unwrap()
            .value;
        for r in [-LN_2, LN_2] {
            let scaled = scale_frame_model(&model, r).unwrap();
            let chi_r = chi_plus_riccati(&scaled, &TangentVector::phase(0.0), 1000.0, 1e-3, &cfg())
                .unwrap()
                .value;
            assert!(
                (chi_r - (-r).exp() * chi).abs() < 2e-3,
                "{model} r={r}: {chi_r} vs {chi}"
            );
        }
    }
}

#[test]
fn growth_examples() {
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]);
    let x = DVector::from_vec(vec![1.0]);
    let (j, jp) = unstable_vector(&h, &theta, &x, &cfg()).unwrap();
    let rec = growth_estimate_check(
        &h,
        &theta,
        (&j, &jp),
        10.0,
        Some(0.5f64.sqrt()),
        (-1.0f64).exp(),
        &cfg(),
    )
    .unwrap();
    assert!(
        rec.lower_slack >= 0.0 && rec.upper_slack >= 0.0,
        "{} {}",
        rec.lower_slack,
        rec.upper_slack
    );
    for s in &rec.samples {
        assert!((s.norm / (s.t.exp() * 2.0f64.sqrt()) - 1.0).abs() < 1e-9);
    }
    assert!(rec.pinch_gap.abs() < 1e-15);

    let cc = MetricModel::constant_curvature(3, -4.0);
    let x = DVector::from_vec(vec![0.3, -1.0]);
    let (j, jp) = unstable_vector(&cc, &TangentVector::phase(0.0), &x, &cfg()).unwrap();
    let rec = growth_estimate_check(
        &cc,
        &TangentVector::phase(0.0),
        (&j, &jp),
        10.0,
        None,
        (-2.0f64).exp(),
        &cfg(),
    )
    .unwrap();
    assert!((rec.measured_exponent - 2.0).abs() < 1e-3);
    assert!(rec.lower_slack >= -1e-6 && rec.upper_slack >= -1e-6);
}

/// A variable pinched profile grows at a rate strictly inside `[b, c]`: the
/// lower envelope holds with `lambda = e^{-b}` and breaks at `e^{-c}`.
#[test]
fn growth_on_variable_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = MetricModel::synthetic(SyntheticProfile::random_pinched(
        &mut rng, 2, -4.0, -1.0, None,
    ));
    let bounds = model.curvature_bounds();
    let theta = TangentVector::phase(0.0);
    let (j, jp) = unstable_vector(&model, &theta, &DVector::from_vec(vec![1.0]), &cfg()).unwrap();
    let calibrated = |lambda: f64| {
        let probe =
            growth_estimate_check(&model, &theta, (&j, &jp), 10.0, Some(1.0), lambda, &cfg())
                .unwrap();
        let first = &probe.samples[0];
        let c0 = first.norm / first.lower;
        growth_estimate_check(&model, &theta, (&j, &jp), 10.0, Some(c0), lambda, &cfg()).unwrap()
    };
    let slow = calibrated((-bounds.b()).exp());
    assert!(
        slow.lower_slack >= -1e-9 && slow.upper_slack >= 0.0,
        "{slow:?}"
    );
    let fast = calibrated((-bounds.c()).exp());
    assert!(fast.lower_slack < 0.0);
    assert!(fast.measured_exponent > bounds.b() && fast.measured_exponent < bounds.c());
}

#[test]
fn growth_rejects_stable_vectors() {
    let h = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]);
    let j = DVector::from_vec(vec![1.0]);
    let jp = DVector::from_vec(vec![-1.0]);
    assert!(matches!(
        growth_estimate_check(&h, &theta, (&j, &jp), 10.0, None, 0.5, &cfg()),
        Err(Error::NotUnstable { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn e_a_composition(r0 in -2.0f64..2.0, bumps in prop::collection::vec(0.0f64..3.0, 30)) {
        let a = (-r0).exp();
        let grid = geometric_grid(0.5, 500.0, 10);
        let mut acc = 0.0;
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .zip(bumps.iter().cycle())
            .map(|(&t, b)| {
                acc += b;
                (t, a * t + acc)
            })
            .collect();
        let probe = ReparametrizationProbe::new(samples, a).unwrap();
        prop_assert!(reparametrization_ratio(&probe, 0.0).unwrap().e_a_holds);
        let composed = compose_with_homothety(&probe, r0);
        prop_assert!((composed.a - 1.0).abs() < 1e-12);
        for (t, s) in &composed.samples {
            prop_assert!(*s >= t * (1.0 - 1e-12));
        }
    }
}
