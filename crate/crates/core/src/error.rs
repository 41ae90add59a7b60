use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are split into validation failures (bad input or configuration)
/// and numerical failures (a guard fired while computing). The CLI maps the
/// two groups to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid input: {message}")]
    Invalid { module: &'static str, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{module}: caustic guard fired at ({:.6}, {:.6}): det F' = {det:.3e}", .at[0], .at[1])]
    Caustic {
        module: &'static str,
        at: [f64; 2],
        det: f64,
    },

    #[error("{module}: {what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        module: &'static str,
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("{module}: singular operator, smallest singular value estimate {sigma_min:.3e} ({detail})")]
    Singular {
        module: &'static str,
        sigma_min: f64,
        detail: String,
    },

    #[error("{module}: {guard}")]
    Numerical { module: &'static str, guard: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(module: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            message: message.into(),
        }
    }

    pub fn numerical(module: &'static str, guard: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            guard: guard.into(),
        }
    }

    /// True for errors caused by bad input rather than by a numerical guard.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. } | Error::Config(_))
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Caustic { .. } | Error::NoConvergence { .. } | Error::Singular { .. } | Error::Numerical { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
