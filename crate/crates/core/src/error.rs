use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),
    #[error("infeasible rate: {0}")]
    InfeasibleRate(String),
    #[error("infeasible design: {0}")]
    Infeasible(String),
    #[error("EXIT chart is not open at p = {point:e} (f = {value:e})")]
    NotOpen { point: f64, value: f64 },
    #[error("interpolation outside chart grid: p = {0:e}")]
    Extrapolation(f64),
    #[error("unrealizable degree profile: {0}")]
    Unrealizable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
