//! Riccati blow-up on round spheres: the first conjugate point of a
//! great circle sits at `pi r`.

use std::f64::consts::{FRAC_PI_2, PI};

use riccati_lab::integrator::{integrate_riccati, IntegratorConfig, RiccatiInit, RiccatiOutcome};
use riccati_lab::models::{MetricModel, TangentVector};

fn main() -> riccati_lab::Result<()> {
    let cfg = IntegratorConfig::default();
    for radius in [0.5, 1.0, 2.0] {
        let sphere = MetricModel::round_sphere(radius);
        let theta = TangentVector::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0 / radius]);
        match integrate_riccati(&sphere, &theta, &RiccatiInit::FocalSeed, 4.0 * radius, &cfg)? {
            RiccatiOutcome::ConjugatePointDetected { t_star } => {
                println!("r = {radius}: t* = {t_star:.9}, pi r = {:.9}", PI * radius)
            }
            RiccatiOutcome::Regular(u) => println!("r = {radius}: no blow-up, U = {u}"),
        }
    }
    Ok(())
}
