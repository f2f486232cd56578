//! Matrix Jacobi fields along a prescribed curvature profile, with the
//! Wronskian as a conservation check.

use nalgebra::{DMatrix, DVector};
use riccati_lab::integrator::{integrate_jacobi, push_tangent, IntegratorConfig};
use riccati_lab::models::{MetricModel, SyntheticProfile, TangentVector};

fn main() -> riccati_lab::Result<()> {
    let model = MetricModel::synthetic(SyntheticProfile::scalar_wave(3, -1.0, -0.5, 1.0));
    let cfg = IntegratorConfig::default();
    let theta = TangentVector::phase(0.0);
    let y0 = DMatrix::identity(2, 2);
    let yp0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.5]);
    let sol = integrate_jacobi(&model, &theta, &y0, &yp0, 10.0, &cfg)?;
    println!("Y(10) = {}", sol.y);
    println!(
        "Wronskian drift: {:.3e}",
        (&sol.wronskian_end - &sol.wronskian_start).abs().max()
    );

    let pushed = push_tangent(
        &model,
        &theta,
        &DVector::from_vec(vec![1.0, 0.0]),
        &DVector::from_vec(vec![0.0, 0.0]),
        10.0,
        &cfg,
    )?;
    println!("|d phi^10 eta| = {:.6}", pushed.sasaki_norm);
    Ok(())
}
