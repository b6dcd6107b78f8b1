use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n = {n} exceeds the configured cap {cap}")]
    SizeLimit { n: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("series did not converge within {max_terms} terms (z = {z})")]
    Precision { max_terms: usize, z: f64 },

    #[error(
        "insufficient characteristic-function decay: |phi_ac({alpha_max:.6e})| = {value:.3e} \
         at the sample cap; request more points"
    )]
    Bandwidth { alpha_max: f64, value: f64 },

    #[error("unexpected block structure: {0}")]
    Structure(String),

    #[error("spec schema: {0}")]
    Schema(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 1 for validation
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeLimit { .. }
            | Error::Dimension(_)
            | Error::Domain(_)
            | Error::Schema(_)
            | Error::Io(_) => 1,
            Error::Precision { .. }
            | Error::Bandwidth { .. }
            | Error::Structure(_)
            | Error::Numerical(_)
            | Error::Internal(_) => 2,
        }
    }
}
