use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum PlateError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical instability at step {step} (t = {time:.6e}): |w|_inf = {norm:.3e}")]
    Instability { step: usize, time: f64, norm: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("eigen solver did not converge after {sweeps} sweeps (worst residual {worst:.3e})")]
    NoConvergence { sweeps: usize, worst: f64 },

    #[error("no dynamics: the worst-case time-stepping eigenvalue is zero")]
    NoDynamics,

    #[error("negative eigenvalue {0:.6e}: operator is indefinite")]
    NegativeEigenvalue(f64),

    #[error("driving frequency hits the natural frequency of mode ({m},{n})")]
    Resonant { m: usize, n: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl PlateError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PlateError::Config(_) | PlateError::Invalid(_) | PlateError::NoDynamics => 2,
            PlateError::Instability { .. } => 3,
            PlateError::Solver(_) | PlateError::NoConvergence { .. } | PlateError::NegativeEigenvalue(_) | PlateError::Resonant { .. } => 4,
            PlateError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PlateError>;
