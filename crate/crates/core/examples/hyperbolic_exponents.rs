//! Lyapunov exponents of constant negative curvature: the Riccati average of
//! `tr U` against the Benettin QR spectrum.

use riccati_lab::integrator::IntegratorConfig;
use riccati_lab::lyapunov::{analyze_orbit, chi_spectrum_qr, AnalysisOptions};
use riccati_lab::models::{MetricModel, TangentVector};

fn main() -> riccati_lab::Result<()> {
    let plane = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.6, 0.8]);
    let report = analyze_orbit(&plane, &theta, &AnalysisOptions::with_horizon(100.0))?;
    println!("{plane}: chi+ = {:.9}", report.chi_plus_riccati.value);

    let space = MetricModel::constant_curvature(3, -4.0);
    let theta = TangentVector::phase(0.0);
    let report = analyze_orbit(&space, &theta, &AnalysisOptions::with_horizon(200.0))?;
    println!("{space}: chi+ = {:.9}", report.chi_plus_riccati.value);
    let spectrum = chi_spectrum_qr(&space, &theta, 1000.0, &IntegratorConfig::default())?;
    println!("QR spectrum: {spectrum:.6?}");
    Ok(())
}
