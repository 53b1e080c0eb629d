use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("case 1 needs D_1 < D_2, got D_0 = {d0:.3} m, D_1 = {d1:.3} m, D_2 = {d2:.3} m")]
    Case1Infeasible { d0: f64, d1: f64, d2: f64 },

    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e}, error {error:e}")]
    Quadrature { a: f64, b: f64, value: f64, error: f64 },

    #[error("numerical consistency: {what} = {value:e} outside [0, 1]")]
    Consistency { what: &'static str, value: f64 },

    #[error("inclusion-exclusion over K = {k} repetitions is ill-conditioned: error bound {bound:e} (largest term {max_term:e})")]
    Cancellation { k: u32, bound: f64, max_term: f64 },

    #[error("deployment sampling produced no base stations after {attempts} attempts")]
    NoBaseStations { attempts: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }
}
