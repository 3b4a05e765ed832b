use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate lattice {rows}x{cols}: both dimensions must be at least 3")]
    DegenerateLattice { rows: usize, cols: usize },

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid deviation model: {0}")]
    Model(String),

    #[error("scorer error: {0}")]
    Scorer(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}
