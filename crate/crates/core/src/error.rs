use crate::numeric::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("t = {t} is below the certified minimum t_min = {t_min}")]
    BelowTmin { t: f64, t_min: f64 },
    #[error("grading {0} is missing from the sample")]
    MissingGrading(usize),
    #[error("mixed complex kinds in one computation")]
    MixedKinds,
    #[error("need at least {need} samples, got {have}")]
    InsufficientSamples { have: usize, need: usize },
    #[error("fit refused: {0}")]
    FitRefused(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
    #[error("cutoff search failed: {0}")]
    Cutoff(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
