use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pole of the Moebius map at {0}")]
    MobiusPole(&'static str),

    #[error("point {re}+{im}i is a singular point of the slit map (derivative blows up); use s > 1")]
    SingularPoint { re: f64, im: f64 },

    #[error("point {re}+{im}i lies outside the domain of the map")]
    OutsideDomain { re: f64, im: f64 },

    #[error("point {re}+{im}i lies on the slit where the inverse branch is ambiguous")]
    OnSlit { re: f64, im: f64 },

    #[error("degenerate building block (l = 0): {0}")]
    DegenerateBlock(String),

    #[error("could not bracket the critical radius below {0}")]
    BracketNotFound(f64),

    #[error("power iteration did not converge in {iterations} steps (last residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("matrix is nilpotent or zero: power iteration collapsed")]
    Nilpotent,

    #[error("quadrature did not converge at r = {r} after {doublings} doublings (last difference {difference:e})")]
    QuadratureNotConverged {
        r: f64,
        doublings: usize,
        difference: f64,
    },

    #[error("test function is not positive at r = {0}")]
    NonPositive(f64),

    #[error("test function is not monotone near r = {0}")]
    NonMonotone(f64),

    #[error("rational fit failed: {0}")]
    FitFailed(String),

    #[error("no certified constants for {0}")]
    NoCertifiedConstants(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::DegenerateBlock(_) | Error::NoCertifiedConstants(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
