use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by how the CLI reports them: data problems exit with
/// code 2, numerical failures with code 3 (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel has zero total mass")]
    ZeroMass,
    #[error("kernel {what} does not converge (partial sums fail the Cauchy test at {lags} lags)")]
    DivergentMoment { what: &'static str, lags: usize },
    #[error("grid too coarse: relative quadrature error {error:.3e} exceeds {tolerance:.1e}")]
    GridTooCoarse { error: f64, tolerance: f64 },
    #[error("fractional order {d} outside the open interval (0, 0.5)")]
    OrderOutOfRange { d: f64 },
    #[error("insufficient history: need at least {needed} observations, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("dates are not strictly increasing at row {row}")]
    NonmonotoneDates { row: usize },
    #[error("non-positive conditional variance h[{t}] = {h:e}{}", if *fractional { " (fractional weights enter with negative sign; reduce dbar or raise alpha)" } else { "" })]
    NonpositiveVariance { t: usize, h: f64, fractional: bool },
    #[error("non-finite value produced at t = {t} ({what})")]
    NonFinite { t: usize, what: &'static str },
    #[error("unstable region: stability denominator {denominator:e} is not positive")]
    UnstableRegion { denominator: f64 },
    #[error("optimizer did not converge after {iterations} iterations (best objective {best:e})")]
    NoConvergence { iterations: usize, best: f64 },
    #[error("degenerate information matrix (condition number {condition:e})")]
    DegenerateHessian { condition: f64 },
    #[error("window of {window} observations is shorter than the minimum {min}")]
    WindowTooShort { window: usize, min: usize },
    #[error("model family {0} has no fractional gate")]
    SpecHasNoFractionalGate(String),
    #[error("empty sample")]
    EmptySample,
    #[error("expected shortfall must be positive (found {es} at index {index})")]
    NonpositiveEs { es: f64, index: usize },
    #[error("sample of {len} observations too short (need more than {min})")]
    SampleTooShort { len: usize, min: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input file is empty")]
    EmptyFile,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code used by the CLI: 1 usage, 2 data error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::InsufficientHistory { .. }
            | Error::NonmonotoneDates { .. }
            | Error::Parse { .. }
            | Error::EmptyFile
            | Error::EmptySample
            | Error::SampleTooShort { .. }
            | Error::WindowTooShort { .. }
            | Error::InvalidInput(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
