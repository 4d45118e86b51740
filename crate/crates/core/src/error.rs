use std::path::PathBuf;

/// Errors raised anywhere in the extension → glue → flow → verify pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid too coarse: {axis} axis has {nodes} nodes, need at least {min}")]
    GridTooCoarse {
        axis: &'static str,
        nodes: usize,
        min: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {0:?} is the excluded antipode of the chart anchor")]
    AntipodalSingularity([f64; 2]),

    #[error("point coincides with the chart pole")]
    PoleSingularity,

    #[error("point lies on or outside the boundary sphere (|w| = {norm})")]
    OnBoundary { norm: f64 },

    #[error("nonpositive height {0} in a half-space chart")]
    NonpositiveHeight(f64),

    #[error("boundary contact at node {node}: |u| = {norm}")]
    BoundaryContact { node: usize, norm: f64 },

    #[error("degenerate boundary datum: {0}")]
    DegenerateDatum(String),

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("family solve failed at parameter t = {t}: {source}")]
    FamilySlice {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("insufficient samples: have {have}, need {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("flow became unstable at step {step}: sup |du/dt| jumped from {before:.3e} to {after:.3e}")]
    Instability { step: usize, before: f64, after: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("snapshot format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt snapshot {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
