use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("gate voltage {vgs} V is not above threshold {v_th} V")]
    BelowThreshold { vgs: f64, v_th: f64 },

    #[error("drain voltage cannot be recovered when the CLM coefficient is zero")]
    InversionUndefined,

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("tone frequency {freq} Hz outside the channel band (0, {bandwidth}) Hz")]
    ModulationRange { freq: f64, bandwidth: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
