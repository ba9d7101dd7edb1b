use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
///
/// The CLI maps these onto exit codes: configuration and domain problems
/// exit with 2, numerical failures (integrator, quadrature, I/O) with 1.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter violates its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid or window request cannot be satisfied.
    #[error("grid error: {0}")]
    Grid(String),

    /// The ODE integrator failed (step underflow, loss of positivity).
    #[error("integration failed: {0}")]
    Integrator(String),

    /// A regression / fit was rejected (degenerate or under-determined).
    #[error("fit rejected: {0}")]
    Fit(String),

    /// Bad configuration file or flag combination.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Grid(_) | Error::Fit(_) | Error::Config(_)
            | Error::Parse(_) => 2,
            Error::Integrator(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
