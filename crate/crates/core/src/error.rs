use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter vector has the wrong number of entries for its controller kind.
    #[error("expected {expected} parameters for {kind}, got {got}")]
    Dimension {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    /// A parameter lies outside its configured search interval.
    #[error("parameter `{name}` = {value} outside bounds [{lo}, {hi}]")]
    Bound {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Bilinear mapping produced a discrete pole on or outside the unit circle.
    #[error("discretization is unstable (spectral radius {0})")]
    UnstableDiscretization(f64),

    /// Structurally invalid configuration (GA settings, scenario, fuzzy tables).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Indices were requested for a trace that diverged.
    #[error("trace diverged at t = {0} s; performance indices are undefined")]
    Diverged(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
