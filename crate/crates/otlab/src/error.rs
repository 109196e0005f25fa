use thiserror::Error;

/// Errors surfaced by configuration validation and the analytic solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The implicit equation has no sign change inside the search bracket,
    /// i.e. the requested (epsilon, c) combination is outside the supported
    /// range of the numerical solver.
    #[error("no root for {what} in [{lo}, {hi}]")]
    NoRoot {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("{what} out of supported range: {detail}")]
    RangeExceeded { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
