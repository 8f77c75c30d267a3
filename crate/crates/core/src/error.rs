use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("observer for sensor {sensor} diverged at t = {t}")]
    ObserverDiverged { sensor: usize, t: f64 },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("no left inverse registered for subset {0}")]
    UnsupportedSubset(String),

    #[error("subset {subset} is degenerate: sampled lower Lipschitz constant {value:e}")]
    DegenerateSubset { subset: String, value: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window constants undefined: sensor {sensor} has a zero noise floor")]
    WindowsUndefined { sensor: usize },

    #[error("scenario invalid: {0}")]
    ScenarioInvalid(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
