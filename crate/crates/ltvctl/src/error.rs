//! Error type shared by every module, with a coarse classification used by
//! the CLI to pick exit codes.

use thiserror::Error;

/// How an error should be surfaced by front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: schema, dimensions, ranges, unparsable numbers.
    Validation,
    /// An algorithm stage could not proceed (singular matrix, no
    /// stabilization index, integrator stall, ...).
    Algorithm,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {k} is outside the window [{k_min}, {k_max}] and the system has no periodic extension")]
    IndexOutOfRange { k: i64, k_min: i64, k_max: i64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("controllability matrix W_{k} is singular")]
    SingularControllability { k: i64 },

    #[error("controllability matrix W_{k} is ill-conditioned (cond ~ {cond:.3e}); consider rational mode")]
    IllConditioned { k: i64, cond: f64 },

    #[error("transform matrix T_{k} is singular")]
    SingularTransform { k: i64 },

    #[error("system is not completely observable: observability matrix at k = {k} is singular")]
    NotObservable { k: i64 },

    #[error("decoupling term c_k adj(A_k) b_k vanishes at k = {k}")]
    DecouplingVanishes { k: i64 },

    #[error("system is not in controller canonical form: {0}")]
    NotCanonical(String),

    #[error("first coordinate of c_{k} vanishes; the construction requires it to be nonzero")]
    ZeroLeadingObservation { k: i64 },

    #[error("no stabilization index within the bound {bound}; the system may not be completely observable, or the zero test is too loose")]
    NoStabilizationIndex { bound: usize },

    #[error("construction trace is too short: need horizon >= {needed}, have {have}")]
    TraceTooShort { needed: usize, have: usize },

    #[error("trace entry at step {step} is neither zero nor a bare active variable: {detail}")]
    TraceStructure { step: usize, detail: String },

    #[error("realization failed after {rounds} rounds (best margin {margin:.3e})")]
    RealizationFailed { rounds: usize, margin: f64 },

    #[error("feedback extraction divided by a vanishing output at step {step}")]
    FeedbackDivision { step: usize },

    #[error("closed loop does not reproduce the realized trace at step {step}")]
    ReproductionFailed { step: usize },

    #[error("ODE step size underflow at t = {t} (problem too stiff for the requested tolerance)")]
    StepSizeUnderflow { t: f64 },

    #[error("ODE integrator exceeded the step budget on [{t0}, {t1}]")]
    StepBudgetExceeded { t0: f64, t1: f64 },

    #[error("expression parse error: {0}")]
    ExprParse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a pipeline-stage name, for error attribution in multi-stage
    /// operations such as `nullify_state`.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::IndexOutOfRange { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidSystem(_)
            | Error::ExprParse(_)
            | Error::Schema(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Validation,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Algorithm,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
