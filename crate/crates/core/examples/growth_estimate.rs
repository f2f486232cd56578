//! Growth of unstable Jacobi fields between the envelopes
//! `C lambda^{-t} |eta|` and `e^{ct} sqrt(1+c^2) |eta|`.

use nalgebra::DVector;
use riccati_lab::conformal::{growth_estimate_check, unstable_vector};
use riccati_lab::integrator::IntegratorConfig;
use riccati_lab::models::{MetricModel, TangentVector};

fn main() -> riccati_lab::Result<()> {
    let cfg = IntegratorConfig::default();
    let model = MetricModel::hyperbolic_plane();
    let theta = TangentVector::new(vec![0.0, 1.0], vec![0.0, 1.0]);
    let (j, jp) = unstable_vector(&model, &theta, &DVector::from_vec(vec![1.0]), &cfg)?;
    let rec = growth_estimate_check(&model, &theta, (&j, &jp), 10.0, None, (-1.0f64).exp(), &cfg)?;
    for s in rec.samples.iter().step_by(20) {
        println!(
            "t = {:5.2}  {:12.6} <= {:12.6} <= {:12.6}",
            s.t, s.lower, s.norm, s.upper
        );
    }
    println!(
        "slacks {:.2e} / {:.2e}, exponent {:.6}, pinch gap {:.1e}",
        rec.lower_slack, rec.upper_slack, rec.measured_exponent, rec.pinch_gap
    );
    Ok(())
}
