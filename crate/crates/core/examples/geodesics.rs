//! Follows a geodesic on the catenoid-like surface `du^2 + cosh^2(u) dv^2`
//! and prints the curvature endomorphism seen by the parallel frame.

use riccati_lab::integrator::{advance_orbit, IntegratorConfig, OrbitState};
use riccati_lab::models::{ChartPoint, MetricModel, ProfileShape};

fn main() -> riccati_lab::Result<()> {
    let model = MetricModel::surface_of_revolution(ProfileShape::Cosh { offset: 0.5 });
    let cfg = IntegratorConfig::default();
    let theta = model.unit_tangent(&ChartPoint::new(vec![0.2, 0.0]), &[0.6, 0.4])?;
    let mut state = OrbitState::new(&model, &theta)?;
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>10}",
        "t", "u", "v", "K", "speed err"
    );
    for _ in 0..10 {
        for _ in 0..1000 {
            state = advance_orbit(&model, &state, cfg.dt, &cfg)?;
        }
        let k = model.curvature_endomorphism(&state)?;
        println!(
            "{:6.2} {:10.5} {:10.5} {:12.8} {:10.2e}",
            state.t,
            state.point.coords[0],
            state.point.coords[1],
            k.matrix[(0, 0)],
            state.speed_defect(&model)
        );
    }
    Ok(())
}
