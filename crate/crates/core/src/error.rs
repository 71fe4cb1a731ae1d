//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failed near x = {position}: {reason}")]
    Integration { position: f64, reason: String },

    #[error("spectral parameter z = {z_re}+{z_im}i is too close to a pole")]
    PoleProximity { z_re: f64, z_im: f64 },

    #[error(
        "piecewise fit residual {residual:.3e} exceeds cap {cap:.3e} on [{lo}, {hi}] at max degree"
    )]
    FitResidual {
        lo: f64,
        hi: f64,
        residual: f64,
        cap: f64,
    },

    #[error("transform map invalid: {0}")]
    MapInvalid(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
