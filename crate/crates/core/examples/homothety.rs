//! Rescaling the metric by `e^{2r}`: curvature scales by `e^{-2r}`, orbits
//! are conjugate after the time change `s(t) = e^r t`, and exponents scale
//! by `e^{-r}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccati_lab::conformal::{
    geometric_grid, homothety_conjugacy_residual, homothety_probe, reparametrization_ratio,
    scale_metric,
};
use riccati_lab::integrator::IntegratorConfig;
use riccati_lab::lyapunov::chi_plus_riccati;
use riccati_lab::models::{MetricModel, TangentVector};

fn main() -> riccati_lab::Result<()> {
    let cfg = IntegratorConfig::default();
    let model = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.6, 0.8]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let grid: Vec<f64> = (1..=10).map(f64::from).collect();
    for r in [-std::f64::consts::LN_2, std::f64::consts::LN_2] {
        let scaled = scale_metric(&model, r)?;
        let k_res = scaled.curvature_scaling_residual(&mut rng, 100)?;
        let conj = homothety_conjugacy_residual(&model, r, &theta, &grid, &cfg)?;
        let probe = homothety_probe(&model, r, &theta, &geometric_grid(1.0, 10.0, 10), &cfg)?;
        let ratio = reparametrization_ratio(&probe, 1e-9)?;
        let chi = chi_plus_riccati(&model, &theta, 100.0, 1e-3, &cfg)?.value;
        let chi_r = chi_plus_riccati(scaled.model(), &theta, 100.0, 1e-3, &cfg)?.value;
        println!("r = {r:+.4}");
        println!("  curvature scaling residual {k_res:.2e}");
        println!("  conjugacy residual         {conj:.2e}");
        println!(
            "  s(t)/t                     {:.12} (e^r = {:.12})",
            ratio.limsup,
            r.exp()
        );
        println!(
            "  chi+ ratio                 {:.6} (e^-r = {:.6})",
            chi_r / chi,
            (-r).exp()
        );
    }
    Ok(())
}
