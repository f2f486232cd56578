use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use proptest::prelude::*;
use riccati_lab::integrator::OrbitState;
use riccati_lab::models::{ChartPoint, MetricModel, ProfileShape, SyntheticProfile, TangentVector};
use riccati_lab::Error;

fn chart_models() -> Vec<MetricModel> {
    vec![
        MetricModel::flat_torus(2),
        MetricModel::flat_torus(3),
        MetricModel::hyperbolic_plane(),
        MetricModel::round_sphere(1.0),
        MetricModel::round_sphere(2.5),
        MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 }),
        MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 1.5 }),
        MetricModel::surface_of_revolution(ProfileShape::Torus {
            major: 3.0,
            minor: 1.0,
        }),
    ]
}

/// A point inside the chart of `model`, from unit-interval coordinates.
fn point_in(model: &MetricModel, s: &[f64]) -> ChartPoint {
    let n = model.dim();
    let coords = match model.to_string().as_str() {
        "HyperbolicPlane" => vec![4.0 * s[0] - 2.0, 0.2 + 3.0 * s[1]],
        m if m.starts_with("RoundSphere") => vec![0.2 + (PI - 0.4) * s[0], 2.0 * PI * s[1]],
        m if m.starts_with("SurfaceOfRevolution") => vec![4.0 * s[0] - 2.0, 2.0 * PI * s[1]],
        _ => s[..n].to_vec(),
    };
    ChartPoint::new(coords)
}

/// Christoffel symbols from central differences of the metric.
fn christoffel_fd(model: &MetricModel, p: &ChartPoint, h: f64) -> Vec<f64> {
    let n = model.dim();
    let g = model.metric_tensor(p).unwrap();
    let ginv = g.clone().try_inverse().unwrap();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let mut plus = p.coords.clone();
            let mut minus = p.coords.clone();
            plus[l] += h;
            minus[l] -= h;
            (model.metric_tensor(&ChartPoint::new(plus)).unwrap()
                - model.metric_tensor(&ChartPoint::new(minus)).unwrap())
                / (2.0 * h)
        })
        .collect();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(k * n + i) * n + j] = (0..n)
                    .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]))
                    .sum();
            }
        }
    }
    out
}

#[test]
fn christoffel_matches_finite_differences() {
    for model in chart_models() {
        for s in [
            [0.1, 0.2, 0.3],
            [0.5, 0.5, 0.5],
            [0.9, 0.35, 0.7],
            [0.27, 0.81, 0.05],
        ] {
            let p = point_in(&model, &s);
            let exact = model.christoffel(&p).unwrap();
            let fd = christoffel_fd(&model, &p, 1e-5);
            let n = model.dim();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let a = exact.get(k, i, j);
                        assert!(
                            (a - fd[(k * n + i) * n + j]).abs() < 1e-6,
                            "{model} at {:?}: Gamma^{k}_{i}{j} = {a}",
                            p.coords
                        );
                        assert_eq!(a, exact.get(k, j, i));
                    }
                }
            }
        }
    }
}

#[test]
fn metric_examples() {
    let eye = DMatrix::<f64>::identity(2, 2);
    assert_eq!(
        MetricModel::flat_torus(2)
            .metric_tensor(&ChartPoint::new(vec![0.3, 0.7]))
            .unwrap(),
        eye
    );
    let h = MetricModel::hyperbolic_plane()
        .metric_tensor(&ChartPoint::new(vec![0.0, 2.0]))
        .unwrap();
    assert!((h - &eye * 0.25).abs().max() < 1e-15);
    let s = MetricModel::round_sphere(1.0)
        .metric_tensor(&ChartPoint::new(vec![FRAC_PI_2, 0.0]))
        .unwrap();
    assert!((s - eye).abs().max() < 1e-15);
    assert!(matches!(
        MetricModel::hyperbolic_plane().metric_tensor(&ChartPoint::new(vec![0.0, -1.0])),
        Err(Error::Domain { .. })
    ));
    let synth = MetricModel::synthetic(SyntheticProfile::constant_diagonal(3, &[-1.0, -2.0]));
    assert!(matches!(
        synth.metric_tensor(&ChartPoint::new(vec![0.0])),
        Err(Error::UnsupportedModel { .. })
    ));
}

#[test]
fn christoffel_examples() {
    let flat = MetricModel::flat_torus(2)
        .christoffel(&ChartPoint::new(vec![0.1, 0.2]))
        .unwrap();
    assert!(flat.data.iter().all(|g| *g == 0.0));
    let h = MetricModel::hyperbolic_plane()
        .christoffel(&ChartPoint::new(vec![0.3, 2.0]))
        .unwrap();
    assert!((h.get(0, 0, 1) + 0.5).abs() < 1e-15);
    assert!((h.get(1, 0, 0) - 0.5).abs() < 1e-15);
    assert!((h.get(1, 1, 1) + 0.5).abs() < 1e-15);
    assert_eq!(h.get(0, 0, 0), 0.0);
    assert_eq!(h.get(1, 0, 1), 0.0);
    let cosh = MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 });
    let c = cosh.christoffel(&ChartPoint::new(vec![0.0, 1.0])).unwrap();
    assert!(c.get(0, 1, 1).abs() < 1e-15);
}

#[test]
fn sectional_curvature_examples() {
    let (v, w) = ([1.0, 0.3], [-0.2, 2.0]);
    let k =
        |m: MetricModel, p: Vec<f64>| m.sectional_curvature(&ChartPoint::new(p), &v, &w).unwrap();
    assert!((k(MetricModel::hyperbolic_plane(), vec![1.0, 0.7]) + 1.0).abs() < 1e-12);
    assert!((k(MetricModel::round_sphere(1.0), vec![1.0, 0.7]) - 1.0).abs() < 1e-12);
    let cosh = MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.0 });
    assert!((k(cosh, vec![1.0, 0.0]) + 1.0).abs() < 1e-12);
    assert!(matches!(
        MetricModel::hyperbolic_plane().sectional_curvature(
            &ChartPoint::new(vec![0.0, 1.0]),
            &v,
            &[2.0, 0.6]
        ),
        Err(Error::DegenerateInput(_))
    ));
}

#[test]
fn ricci_examples() {
    let cc = MetricModel::constant_curvature(3, -4.0);
    assert_eq!(cc.ricci_along(&TangentVector::phase(1.3)).unwrap(), -4.0);
    let flat = MetricModel::flat_torus(2);
    assert_eq!(
        flat.ricci_along(&TangentVector::new(vec![0.1, 0.1], vec![0.6, 0.8]))
            .unwrap(),
        0.0
    );
    let synth = MetricModel::synthetic(SyntheticProfile::constant_diagonal(3, &[-1.0, -2.0]));
    assert_eq!(synth.ricci_along(&TangentVector::phase(0.0)).unwrap(), -1.5);
}

#[test]
fn curvature_endomorphism_examples() {
    let h = MetricModel::hyperbolic_plane();
    let orbit = OrbitState::new(&h, &TangentVector::new(vec![0.0, 1.0], vec![0.6, 0.8])).unwrap();
    assert!((h.curvature_endomorphism(&orbit).unwrap().matrix[(0, 0)] + 1.0).abs() < 1e-12);
    let s = MetricModel::round_sphere(1.0);
    let orbit = OrbitState::new(
        &s,
        &TangentVector::new(vec![1.0, 0.0], vec![0.6, 0.8 / 1.0f64.sin()]),
    )
    .unwrap();
    assert!((s.curvature_endomorphism(&orbit).unwrap().matrix[(0, 0)] - 1.0).abs() < 1e-12);
    let wave = MetricModel::synthetic(SyntheticProfile::scalar_wave(3, -1.0, -0.5, 1.0));
    let orbit = OrbitState::new(&wave, &TangentVector::phase(FRAC_PI_2)).unwrap();
    let r = wave.curvature_endomorphism(&orbit).unwrap().matrix;
    assert_eq!(r, DMatrix::identity(2, 2) * -1.5);
}

fn frame_of(model: &MetricModel, p: &ChartPoint, v: &[f64]) -> Vec<Vec<f64>> {
    let n = model.dim();
    let theta = model.unit_tangent(p, v).unwrap();
    let orbit = OrbitState::new(model, &theta).unwrap();
    assert_eq!(orbit.frame.len(), n - 1);
    orbit.frame
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn sectional_curvature_is_scale_invariant_and_symmetric(
        which in 0usize..8,
        s in prop::array::uniform3(0.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
        w in prop::array::uniform3(-1.0f64..1.0),
        scale in 0.1f64..10.0,
    ) {
        let model = &chart_models()[which];
        let n = model.dim();
        let p = point_in(model, &s);
        let (v, w) = (&v[..n], &w[..n]);
        let k = match model.sectional_curvature(&p, v, w) {
            Ok(k) => k,
            Err(Error::DegenerateInput(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let v2: Vec<f64> = v.iter().map(|c| c * scale).collect();
        let kw = model.sectional_curvature(&p, w, &v2).unwrap();
        prop_assert!((k - kw).abs() < 1e-9 * (1.0 + k.abs()));
    }

    #[test]
    fn ricci_is_frame_average_of_sectional(
        which in 0usize..8,
        s in prop::array::uniform3(0.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let model = &chart_models()[which];
        let n = model.dim();
        let p = point_in(model, &s);
        let v = &v[..n];
        prop_assume!(v.iter().map(|c| c * c).sum::<f64>() > 1e-3);
        let theta = model.unit_tangent(&p, v).unwrap();
        let frame = frame_of(model, &p, v);
        let avg: f64 = frame
            .iter()
            .map(|e| model.sectional_curvature(&p, &theta.v, e).unwrap())
            .sum::<f64>()
            / (n - 1) as f64;
        prop_assert!((model.ricci_along(&theta).unwrap() - avg).abs() < 1e-9);
    }

    #[test]
    fn unit_tangent_has_unit_length(
        which in 0usize..8,
        s in prop::array::uniform3(0.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let model = &chart_models()[which];
        let n = model.dim();
        let p = point_in(model, &s);
        prop_assume!(v[..n].iter().map(|c| c * c).sum::<f64>() > 1e-3);
        let theta = model.unit_tangent(&p, &v[..n]).unwrap();
        let g = model.metric_tensor(&p).unwrap();
        let u = nalgebra::DVector::from_column_slice(&theta.v);
        prop_assert!(((u.transpose() * g * &u)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homothety_scales_the_metric(which in 0usize..8, s in prop::array::uniform3(0.0f64..1.0), r in -2.0f64..2.0) {
        let model = &chart_models()[which];
        let p = point_in(model, &s);
        let scaled = riccati_lab::conformal::scale_metric(model, r).unwrap();
        let g = model.metric_tensor(&p).unwrap() * (2.0 * r).exp();
        let gr = scaled.model().metric_tensor(&p).unwrap();
        prop_assert!((g - &gr).abs().max() <= 1e-15 * gr.abs().max());
    }
}
