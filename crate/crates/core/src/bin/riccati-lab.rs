use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use riccati_lab::experiment::{
    emit_report, resolve_jobs, run_experiment, to_json, Check, EnsembleConfig, ExperimentConfig,
    Horizons, Sampler,
};
use riccati_lab::models::{MetricModel, TangentVector};
use riccati_lab::Error;

#[derive(Parser)]
#[command(
    name = "riccati-lab",
    version,
    about = "Geodesic-flow experiments on model manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble experiment from a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "RICCATI_LAB_JOBS")]
        jobs: Option<usize>,
    },
    /// Analyze a single orbit and print its record as JSON.
    Orbit {
        /// `name` or `name:key=value,...`, e.g. `round_sphere:radius=2`,
        /// or an inline TOML table.
        #[arg(long)]
        model: String,
        /// `x1,x2;v1,v2` for chart models, a phase for frame-only models.
        #[arg(long)]
        theta: String,
        #[arg(long = "T", default_value_t = 100.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Comma list: chain, rigidity, spectrum, level_set=A, conjugacy=R,
        /// growth=LAMBDA, periodic=TAU.
        #[arg(long, default_value = "chain,rigidity")]
        checks: String,
    },
    /// List the model catalog.
    Catalog,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn parse_model(arg: &str) -> Result<MetricModel, Error> {
    let table = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let (name, params) = arg.split_once(':').unwrap_or((arg, ""));
        let mut fields = vec![format!("name = \"{}\"", name.trim())];
        fields.extend(
            params
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().to_string()),
        );
        format!("{{ {} }}", fields.join(", "))
    };
    #[derive(serde::Deserialize)]
    struct Wrapper {
        model: MetricModel,
    }
    let wrapper: Wrapper =
        toml::from_str(&format!("model = {table}")).map_err(|e| Error::Config {
            path: "--model".into(),
            message: e.to_string(),
        })?;
    Ok(wrapper.model)
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim().parse().map_err(|_| Error::Config {
                path: flag.into(),
                message: format!("`{p}` is not a number"),
            })
        })
        .collect()
}

fn parse_theta(s: &str) -> Result<TangentVector, Error> {
    match s.split_once(';') {
        Some((x, v)) => Ok(TangentVector::new(
            parse_list(x, "--theta")?,
            parse_list(v, "--theta")?,
        )),
        None => {
            let t = parse_list(s, "--theta")?;
            Ok(TangentVector::phase(t.first().copied().unwrap_or(0.0)))
        }
    }
}

fn parse_checks(s: &str) -> Result<Vec<Check>, Error> {
    let bad = |m: String| Error::Config {
        path: "--checks".into(),
        message: m,
    };
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|item| {
            let (name, arg) = item.trim().split_once('=').unwrap_or((item.trim(), ""));
            let value = || {
                arg.parse::<f64>()
                    .map_err(|_| bad(format!("`{name}` needs a numeric argument")))
            };
            Ok(match name {
                "chain" => Check::Chain,
                "rigidity" => Check::Rigidity,
                "spectrum" => Check::Spectrum,
                "level_set" => Check::LevelSet { alpha: value()? },
                "conjugacy" => Check::Conjugacy {
                    r: value()?,
                    t_max: 10.0,
                },
                "growth" => Check::Growth {
                    c_const: None,
                    lambda: value()?,
                    horizon: 10.0,
                },
                "periodic" => Check::Periodic {
                    tau: value()?,
                    long_horizon: None,
                    tol: 1e-12,
                },
                other => return Err(bad(format!("unknown check `{other}`"))),
            })
        })
        .collect()
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(match err {
        Error::Config { .. } | Error::SamplerMismatch { .. } => 2,
        e if e.is_non_convergence() => 3,
        _ => 1,
    })
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Catalog => {
            for (name, params) in MetricModel::catalog() {
                println!("{name:<24} {params}");
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("ok: {} orbits on {}", cfg.ensemble.size, cfg.model);
            Ok(0)
        }
        Command::Run { config, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, resolve_jobs(jobs))?;
            match &cfg.output {
                Some(out) => {
                    emit_report(&report, &out.path, out.format)?;
                    eprintln!("wrote {}", out.path.display());
                }
                None => print!("{}", to_json(&report)?),
            }
            let a = &report.aggregate;
            eprintln!(
                "{} orbits, {} failed, {} non-converged, hash {}",
                a.orbits, a.failed, a.non_converged, report.meta.determinism_hash
            );
            Ok(report.exit_code() as u8)
        }
        Command::Orbit {
            model,
            theta,
            t,
            dt,
            checks,
        } => {
            let theta = parse_theta(&theta)?;
            let cfg = ExperimentConfig {
                model: parse_model(&model)?,
                ensemble: EnsembleConfig {
                    size: 1,
                    seed: 0,
                    sampler: Sampler::Explicit {
                        thetas: vec![theta],
                    },
                },
                horizons: Horizons {
                    t,
                    dt,
                    ..toml::from_str("T = 1.0").expect("default horizons")
                },
                checks: parse_checks(&checks)?,
                output: None,
            };
            let report = run_experiment(&cfg, 1)?;
            print!("{}", to_json(&report.orbits[0])?);
            Ok(report.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => exit_for(&e),
    }
}
