use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("potential is not Hermitian at node {index} (defect {defect:.3e})")]
    NonHermitian { index: usize, defect: f64 },
    #[error("branch of the square root is ambiguous on the cut")]
    AmbiguousBranch,
    #[error("spectral point sits on a threshold ±m")]
    AtThreshold,
    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("{what} did not converge after {iterations} iterations (last value {last:.6e})")]
    NotConverged { what: &'static str, iterations: usize, last: f64 },
    #[error("eigenvalue {omega} is too close to the spectral edge")]
    EigenvalueTooCloseToEdge { omega: f64 },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("time stepper failed: {0}")]
    SolverFailure(String),
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("frequency quadrature not converged (node doubling changed the result by {change:.3e})")]
    QuadratureNotConverged { change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
