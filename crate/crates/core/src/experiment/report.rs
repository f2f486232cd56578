//! Ensemble report: per-orbit records, the aggregate reduction and the
//! JSON / CSV writers.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::conformal::GrowthRecord;
use crate::error::{Error, Result};
use crate::lyapunov::{LyapunovReport, PeriodicRecord};
use crate::models::TangentVector;

use super::config::{Check, ExperimentConfig, Format};

/// Slack below which a growth bound counts as violated.
pub const GROWTH_SLACK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Ok,
    /// Analysis succeeded but at least one extra check errored.
    CheckError,
    NonConverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetRecord {
    pub alpha: f64,
    /// `None` when the exponent windows did not converge.
    pub member: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyRecord {
    pub r: f64,
    pub t_max: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckError {
    pub check: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub index: usize,
    pub theta: TangentVector,
    pub status: OrbitStatus,
    pub error: Option<String>,
    pub error_kind: Option<String>,
    pub ricci_at_start: Option<f64>,
    pub report: Option<LyapunovReport>,
    pub level_sets: Vec<LevelSetRecord>,
    pub conjugacy: Option<ConjugacyRecord>,
    pub growth: Option<GrowthRecord>,
    pub periodic: Option<PeriodicRecord>,
    pub check_errors: Vec<CheckError>,
}

impl OrbitRecord {
    pub fn non_converged(&self) -> bool {
        self.status == OrbitStatus::NonConverged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFraction {
    pub alpha: f64,
    pub members: usize,
    /// Orbits with a converged exponent, i.e. a definite verdict.
    pub classified: usize,
    /// `members / orbits`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAggregate {
    pub checked: usize,
    pub violations: usize,
    pub equalities: usize,
    pub strict: usize,
    pub max_upper_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityAggregate {
    pub scalar: usize,
    pub non_scalar: usize,
    /// Orbits whose scalar verdict matches the chain equality flag.
    pub agrees_with_equality: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAggregate {
    pub checked: usize,
    pub violations: usize,
    pub max_pinch_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub orbits: usize,
    pub analyzed: usize,
    pub failed: usize,
    pub non_converged: usize,
    pub slow_rate: usize,
    /// Mean of `Ric` at the sampled initial conditions.
    pub mean_ric_ensemble: Option<f64>,
    /// Mean over orbits of the time-averaged `Ric`.
    pub mean_ric_time: Option<f64>,
    pub ric_discrepancy: Option<f64>,
    /// `max |mean_ric_ensemble - time average of Ric|` over orbits.
    pub max_orbit_ric_discrepancy: Option<f64>,
    pub level_sets: Vec<LevelFraction>,
    pub chain: Option<ChainAggregate>,
    pub rigidity: Option<RigidityAggregate>,
    pub max_conjugacy_residual: Option<f64>,
    pub growth: Option<GrowthAggregate>,
    pub max_periodic_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    pub tol: f64,
    pub limit_tol: f64,
    pub equality_tol: f64,
    pub scalar_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub sample_size: usize,
    pub model: String,
    pub sampler: String,
    pub ensemble_label: String,
    pub generator: String,
    pub tolerances: Tolerances,
    pub config: ExperimentConfig,
    /// Unix seconds; excluded from the determinism hash.
    pub timestamp: u64,
    pub determinism_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub meta: Meta,
    pub aggregate: Aggregate,
    pub orbits: Vec<OrbitRecord>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    })
}

/// Pure reduction of the per-orbit records; sums run in index order.
pub fn aggregate(orbits: &[OrbitRecord], checks: &[Check]) -> Aggregate {
    let reports = || orbits.iter().filter_map(|o| o.report.as_ref());
    let has = |f: fn(&Check) -> bool| checks.iter().any(f);
    let mean_ric_ensemble = mean(orbits.iter().filter_map(|o| o.ricci_at_start));
    let mean_ric_time = mean(reports().map(|r| r.ricci_avg.value));
    let ric_discrepancy = mean_ric_ensemble
        .zip(mean_ric_time)
        .map(|(a, b)| (a - b).abs());
    let max_orbit_ric_discrepancy =
        mean_ric_ensemble.and_then(|e| max_of(reports().map(|r| (r.ricci_avg.value - e).abs())));

    let mut alphas: Vec<f64> = Vec::new();
    for c in checks {
        if let Check::LevelSet { alpha } = c {
            if !alphas.contains(alpha) {
                alphas.push(*alpha);
            }
        }
    }
    let level_sets = alphas
        .iter()
        .map(|&alpha| {
            let verdicts = || {
                orbits
                    .iter()
                    .flat_map(|o| o.level_sets.iter().filter(move |l| l.alpha == alpha))
                    .filter_map(|l| l.member)
            };
            let members = verdicts().filter(|m| *m).count();
            LevelFraction {
                alpha,
                members,
                classified: verdicts().count(),
                fraction: members as f64 / orbits.len().max(1) as f64,
            }
        })
        .collect();

    let chain = has(|c| matches!(c, Check::Chain)).then(|| ChainAggregate {
        checked: reports().count(),
        violations: reports().filter(|r| r.chain_check.violated()).count(),
        equalities: reports().filter(|r| r.chain_check.equality).count(),
        strict: reports()
            .filter(|r| {
                let c = &r.chain_check;
                c.lower.as_ref().is_some_and(|b| b.strict)
                    || c.upper.as_ref().is_some_and(|b| b.strict)
            })
            .count(),
        max_upper_gap: max_of(
            reports().filter_map(|r| r.chain_check.upper.as_ref().map(|b| b.gap)),
        ),
    });
    let rigidity = has(|c| matches!(c, Check::Rigidity)).then(|| RigidityAggregate {
        scalar: reports().filter(|r| r.rigidity.scalar).count(),
        non_scalar: reports().filter(|r| !r.rigidity.scalar).count(),
        agrees_with_equality: reports()
            .filter(|r| r.rigidity.scalar == r.chain_check.equality)
            .count(),
    });
    let growth = has(|c| matches!(c, Check::Growth { .. })).then(|| {
        let records = || orbits.iter().filter_map(|o| o.growth.as_ref());
        GrowthAggregate {
            checked: records().count(),
            violations: records()
                .filter(|g| g.lower_slack < -GROWTH_SLACK_TOL || g.upper_slack < -GROWTH_SLACK_TOL)
                .count(),
            max_pinch_gap: max_of(records().map(|g| g.pinch_gap.abs())),
        }
    });
    Aggregate {
        orbits: orbits.len(),
        analyzed: reports().count(),
        failed: orbits
            .iter()
            .filter(|o| o.status == OrbitStatus::Failed)
            .count(),
        non_converged: orbits.iter().filter(|o| o.non_converged()).count(),
        slow_rate: reports().filter(|r| r.slow_rate).count(),
        mean_ric_ensemble,
        mean_ric_time,
        ric_discrepancy,
        max_orbit_ric_discrepancy,
        level_sets,
        chain,
        rigidity,
        max_conjugacy_residual: max_of(
            orbits
                .iter()
                .filter_map(|o| o.conjugacy.as_ref().map(|c| c.residual)),
        ),
        growth,
        max_periodic_discrepancy: max_of(
            orbits
                .iter()
                .filter_map(|o| o.periodic.as_ref().map(|p| p.discrepancy)),
        ),
    }
}

impl EnsembleReport {
    /// 0 ok, 1 chain violation, 3 numeric non-convergence.
    pub fn exit_code(&self) -> i32 {
        if self
            .aggregate
            .chain
            .as_ref()
            .is_some_and(|c| c.violations > 0)
        {
            1
        } else if self.aggregate.non_converged > 0 {
            3
        } else {
            0
        }
    }

    /// SHA-256 of the JSON report with `timestamp` and `determinism_hash` blanked.
    pub fn compute_determinism_hash(&self) -> String {
        let mut blank = self.clone();
        blank.meta.timestamp = 0;
        blank.meta.determinism_hash = String::new();
        let json = to_json(&blank).expect("report serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn seal(&mut self) {
        self.meta.determinism_hash = self.compute_determinism_hash();
    }
}

/// Pretty JSON with every float printed with 17 significant digits.
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the report float format. Non-finite floats
/// become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 26] = [
    "index",
    "status",
    "error_kind",
    "base",
    "v",
    "ricci_at_start",
    "chi_plus",
    "chi_converged",
    "ricci_avg",
    "gamma_plus",
    "gamma_minus",
    "lower_gap",
    "upper_gap",
    "chain_violated",
    "equality",
    "lambda_hat",
    "max_dev_from_scalar",
    "scalar",
    "slow_rate",
    "level_class",
    "conjugacy_residual",
    "growth_lower_slack",
    "growth_upper_slack",
    "growth_exponent",
    "periodic_chi",
    "periodic_discrepancy",
];

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        _ => String::new(),
    }
}

fn flag(x: Option<bool>) -> String {
    x.map_or(String::new(), |b| b.to_string())
}

fn list(xs: &[f64]) -> String {
    xs.iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One row per orbit, columns as in [`CSV_HEADER`].
pub fn to_csv(report: &EnsembleReport) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(io)?;
    for o in &report.orbits {
        let r = o.report.as_ref();
        let chain = r.map(|r| &r.chain_check);
        let status = serde_json::to_value(o.status).expect("status serializes");
        let row = [
            o.index.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            o.error_kind.clone().unwrap_or_default(),
            list(&o.theta.base.coords),
            list(&o.theta.v),
            num(o.ricci_at_start),
            num(r.map(|r| r.chi_plus_riccati.value)),
            flag(r.map(|r| r.chi_plus_riccati.converged)),
            num(r.map(|r| r.ricci_avg.value)),
            num(r.map(|r| r.gamma.gamma_plus)),
            num(r.map(|r| r.gamma.gamma_minus)),
            num(chain.and_then(|c| c.lower.as_ref()).map(|b| b.gap)),
            num(chain.and_then(|c| c.upper.as_ref()).map(|b| b.gap)),
            flag(chain.map(|c| c.violated())),
            flag(chain.map(|c| c.equality)),
            num(r.map(|r| r.rigidity.lambda_hat)),
            num(r.map(|r| r.rigidity.max_dev_from_scalar)),
            flag(r.map(|r| r.rigidity.scalar)),
            flag(r.map(|r| r.slow_rate)),
            num(r.and_then(|r| r.level_class)),
            num(o.conjugacy.as_ref().map(|c| c.residual)),
            num(o.growth.as_ref().map(|g| g.lower_slack)),
            num(o.growth.as_ref().map(|g| g.upper_slack)),
            num(o.growth.as_ref().map(|g| g.measured_exponent)),
            num(o.periodic.as_ref().map(|p| p.chi_per_period)),
            num(o.periodic.as_ref().map(|p| p.discrepancy)),
        ];
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn emit_report(report: &EnsembleReport, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => to_json(report)?,
        Format::Csv => to_csv(report)?,
    };
    write_atomic(path, &text)
}
