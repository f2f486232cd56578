//! Curvature bounds around the exponent: constant curvature sits on the
//! equality case, an anisotropic profile leaves a strict gap and a
//! non-scalar unstable solution.

use riccati_lab::lyapunov::{analyze_orbit, AnalysisOptions, LyapunovReport};
use riccati_lab::models::{MetricModel, SyntheticProfile, TangentVector};

fn show(name: &str, r: &LyapunovReport) {
    let c = &r.chain_check;
    println!("{name}");
    println!("  chi+            {:.6}", r.chi_plus_riccati.value);
    println!(
        "  Gamma+/-        {:.6} / {:.6}",
        r.gamma.gamma_plus, r.gamma.gamma_minus
    );
    if let Some(lower) = &c.lower {
        println!(
            "  lower bound     {:.6} (gap {:.3e})",
            lower.bound, lower.gap
        );
    }
    if let Some(upper) = &c.upper {
        println!(
            "  upper bound     {:.6} (gap {:.3e})",
            upper.bound, upper.gap
        );
    }
    println!(
        "  equality {}  scalar U {}  max |U - lambda I| {:.3e}",
        c.equality, r.rigidity.scalar, r.rigidity.max_dev_from_scalar
    );
}

fn main() -> riccati_lab::Result<()> {
    let opts = AnalysisOptions::with_horizon(1000.0);
    let theta = TangentVector::phase(0.0);

    let space = MetricModel::constant_curvature(3, -1.0);
    show(
        "constant curvature -1",
        &analyze_orbit(&space, &theta, &opts)?,
    );

    let aniso = MetricModel::synthetic(SyntheticProfile::constant_diagonal(3, &[-1.0, -4.0]));
    show("diag(-1, -4)", &analyze_orbit(&aniso, &theta, &opts)?);
    Ok(())
}
