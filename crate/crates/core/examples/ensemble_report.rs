//! Runs a config file (default: the hyperbolic window ensemble) and writes
//! its JSON and CSV reports next to each other in a scratch directory.

use std::path::PathBuf;

use riccati_lab::experiment::{emit_report, run_experiment, ExperimentConfig, Format};

fn main() -> riccati_lab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/hyperbolic.toml")
        });
    let cfg = ExperimentConfig::load(&path)?;
    let report = run_experiment(&cfg, 0)?;
    let out = std::env::temp_dir().join("riccati-lab-example");
    std::fs::create_dir_all(&out)?;
    emit_report(&report, &out.join("report.json"), Format::Json)?;
    emit_report(&report, &out.join("report.csv"), Format::Csv)?;
    let a = &report.aggregate;
    println!("{} ({})", report.meta.model, report.meta.ensemble_label);
    println!(
        "  mean Ric ensemble {:?}, time {:?}",
        a.mean_ric_ensemble, a.mean_ric_time
    );
    for l in &a.level_sets {
        println!("  level set {}: {}/{}", l.alpha, l.members, a.orbits);
    }
    if let Some(c) = &a.chain {
        println!(
            "  chain violations {}, equalities {}",
            c.violations, c.equalities
        );
    }
    println!("  determinism hash {}", report.meta.determinism_hash);
    println!("  reports in {}", out.display());
    Ok(())
}
