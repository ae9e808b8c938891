use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation point {zeta} is (close to) a pole of the model")]
    NearPole { zeta: String },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("model is not stable (spectral radius {spectral_radius}); H-infinity norm is undefined")]
    Unstable { spectral_radius: f64 },

    #[error("riccati equation has no stabilizing solution: {0}")]
    Riccati(String),

    #[error("feedback loop is ill-posed (1 + Dp*Dc = {0})")]
    IllPosed(f64),

    #[error("insufficient data: need at least {required} regression rows, have {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
