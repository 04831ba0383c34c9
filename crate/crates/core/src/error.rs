use thiserror::Error;

use crate::geometry::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ray from ({}, {}) along ({}, {}) has no boundary intersection", origin.x, origin.y, direction.x, direction.y)]
    NoHit { origin: Vec2, direction: Vec2 },

    #[error("grazing reflection, |d.n| = {dot:e}")]
    GrazingRay { dot: f64 },

    #[error("rejection sampler accepted nothing in {proposals} proposals")]
    RejectionStall { proposals: usize },

    #[error("trajectory exceeded {limit} bounces")]
    BounceLimitExceeded { limit: u64 },

    #[error("{failed} of {total} samples failed, above the {tolerance} tolerance")]
    TooManyFailures {
        failed: usize,
        total: usize,
        tolerance: f64,
    },

    #[error("characteristic grid is not conjugate-symmetrizable: {0}")]
    AsymmetricGrid(String),

    #[error("|G| = {magnitude:.3e} at u_max exceeds 0.01; widen the work window")]
    AliasingSuspect { magnitude: f64 },

    #[error("histograms live on different grids: {0}")]
    GridMismatch(String),

    #[error("mean of exp(-beta W) is {0}, not positive")]
    DegenerateMean(f64),

    #[error("quadrature failed to reach relative change {tolerance:e} after {levels} refinements")]
    QuadratureNonConvergence { tolerance: f64, levels: usize },

    #[error("grid has only {sites} interior sites (need at least {required})")]
    GridTooCoarse { sites: usize, required: usize },

    #[error("eigensolver failed: {0}")]
    ConvergenceFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("top decile of retained states carries Boltzmann weight {weight:.3e} (> 1%) at beta = {beta}")]
    TruncationDominates { weight: f64, beta: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Range { field: String, reason: String },

    #[error("invalid spectra container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Range {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Stable machine-readable tag for the error JSON emitted by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NoHit { .. } => "NoHit",
            Error::GrazingRay { .. } => "GrazingRay",
            Error::RejectionStall { .. } => "RejectionStall",
            Error::BounceLimitExceeded { .. } => "BounceLimitExceeded",
            Error::TooManyFailures { .. } => "TooManyFailures",
            Error::AsymmetricGrid(_) => "AsymmetricGrid",
            Error::AliasingSuspect { .. } => "AliasingSuspect",
            Error::GridMismatch(_) => "GridMismatch",
            Error::DegenerateMean(_) => "DegenerateMean",
            Error::QuadratureNonConvergence { .. } => "QuadratureNonConvergence",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::TruncationDominates { .. } => "TruncationDominates",
            Error::Parse { .. } => "ParseError",
            Error::Range { .. } => "RangeError",
            Error::Container(_) => "ContainerError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}
