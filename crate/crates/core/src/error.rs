use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by grid construction, propagation, trajectory integration and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid physical parameters: {0}")]
    Params(String),

    #[error("invalid initial state: {0}")]
    InitialState(String),

    #[error("initial packet leaks {mass:.3e} probability past the grid boundary (limit {limit:.0e})")]
    BoundaryTail { mass: f64, limit: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("superposition cancels to norm {0:.3e}")]
    DestructiveCancellation(f64),

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("invalid propagator settings: {0}")]
    Propagator(String),

    #[error("phase-wrap guard violated: dt*max|V|/hbar = {0:.3} >= pi")]
    PhaseWrap(f64),

    #[error("non-finite amplitude produced at t = {0}")]
    NonFinite(f64),

    #[error("tridiagonal solve residual {0:.3e} above tolerance")]
    LinearSolve(f64),

    #[error("boundary contamination: {mass:.3e} probability within the boundary strip at t = {time}")]
    BoundaryContamination { mass: f64, time: f64 },

    #[error("point {point:?} lies outside the grid")]
    OutsideGrid { point: Vec<f64> },

    #[error("time {time} outside the series span [{start}, {end}]")]
    OutsideSpan { time: f64, start: f64, end: f64 },

    #[error("node encounter at q = {point:?}, t = {time}: density {density:.3e} below threshold")]
    NodeEncounter { point: Vec<f64>, time: f64, density: f64 },

    #[error("non-finite velocity at an unmasked grid point (flat index {0})")]
    NonFiniteField(usize),

    #[error("rejection sampling acceptance rate {0:.2e} too low; an importance proposal is required")]
    LowAcceptance(f64),

    #[error("insufficient samples: {got} status-ok paths, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("phase unwrapping: {0}")]
    Unwrap(String),

    #[error("conditional slice norm {0:.3e} below threshold")]
    ConditionalNorm(f64),

    #[error("branch supports fail to separate: overlap mass {0:.3e}")]
    BranchOverlap(f64),

    #[error("invalid experiment: {0}")]
    Experiment(String),

    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{phase}: {source}")]
    Phase {
        phase: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wrap an error with the name of the pipeline phase that produced it.
    pub fn in_phase(self, phase: impl Into<String>) -> Self {
        Error::Phase { phase: phase.into(), source: Box::new(self) }
    }

    /// Innermost error, skipping phase attribution.
    pub fn root(&self) -> &Error {
        match self {
            Error::Phase { source, .. } => source.root(),
            other => other,
        }
    }
}
