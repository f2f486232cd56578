use thiserror::Error;

/// Errors raised by the model catalog, the propagators and the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {coords:?} lies outside the chart domain of {model}")]
    Domain { model: String, coords: Vec<f64> },

    #[error("operation `{op}` is not supported by model {model}")]
    UnsupportedModel { model: String, op: &'static str },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("frame drifted from orthonormality by {deviation:e} (limit {limit:e})")]
    FrameDrift { deviation: f64, limit: f64 },

    #[error("orbit left the chart domain of {model} at t = {t}")]
    DomainExit { model: String, t: f64 },

    #[error(
        "Green-bundle limit did not converge by T = {t_max} (residual {residual:e}, fitted decay exponent {decay_exponent:.3})"
    )]
    NoConvergence {
        t_max: f64,
        residual: f64,
        decay_exponent: f64,
        /// Best available estimate of the limit at `t_max`, flattened row-major.
        last_estimate: Vec<f64>,
    },

    #[error("conjugate point detected at t* = {t_star}")]
    ConjugatePointDetected { t_star: f64 },

    #[error("check is inapplicable: {0}")]
    Inapplicable(String),

    #[error("classification undetermined: {0}")]
    Undetermined(String),

    #[error("period map did not reach a fixed point in {iterations} iterations (last step {last_step:e})")]
    PeriodMapDivergence { iterations: usize, last_step: f64 },

    #[error("vector is not in the unstable subspace (deviation {deviation:e})")]
    NotUnstable { deviation: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("sampler {sampler} cannot be used with model {model}")]
    SamplerMismatch { sampler: String, model: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable name of the variant, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::UnsupportedModel { .. } => "unsupported_model",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::FrameDrift { .. } => "frame_drift",
            Error::DomainExit { .. } => "domain_exit",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ConjugatePointDetected { .. } => "conjugate_point",
            Error::Inapplicable(_) => "inapplicable",
            Error::Undetermined(_) => "undetermined",
            Error::PeriodMapDivergence { .. } => "period_map_divergence",
            Error::NotUnstable { .. } => "not_unstable",
            Error::InsufficientSamples(_) => "insufficient_samples",
            Error::SamplerMismatch { .. } => "sampler_mismatch",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }

    /// Numeric non-convergence, as opposed to a geometric outcome.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::PeriodMapDivergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
