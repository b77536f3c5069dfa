use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density {rho} outside [0, {rho_max}]")]
    DensityOutOfRange { rho: f64, rho_max: f64 },

    #[error("invalid velocity model: {0}")]
    InvalidModel(String),

    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),

    #[error("initial datum has zero mass")]
    ZeroMass,

    #[error("minimum particle spacing {spacing:e} is below the resolvable limit")]
    SpacingUnderflow { spacing: f64 },

    #[error("particle ordering violated at index {index} (gap {gap:e}, t = {t})")]
    OrderingViolated { index: usize, gap: f64, t: f64 },

    #[error("exit event count {count} exceeds the admissible bound {bound}")]
    TooManyExits { count: usize, bound: usize },

    #[error("evacuation not reached before safety cap t = {cap}")]
    Timeout { cap: f64 },

    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("mass mismatch between profiles: {a} vs {b}")]
    MassMismatch { a: f64, b: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
