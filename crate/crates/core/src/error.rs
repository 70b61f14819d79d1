use thiserror::Error;

/// Errors raised by the numerical kernels and the batch front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("offset ({x1}, {x2}) coincides with a lattice point (n, 0)")]
    LatticePoint { x1: f64, x2: f64 },

    #[error("target and source are closer than {tol:e}")]
    SingularPoint { tol: f64 },

    #[error("geometry leaves the admissible cell: {0}")]
    CellViolation(String),

    #[error("curve is not simple: {0}")]
    SelfIntersection(String),

    #[error("components {first} and {second} overlap")]
    Overlap { first: usize, second: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("H*_0 Gram matrix is not positive definite (smallest eigenvalue {smallest:e}); boundary is under-resolved")]
    UnderResolved { smallest: f64 },

    #[error("resolvent is near-singular: spectral parameter is {distance:e} from the nearest eigenvalue")]
    NearSingular { distance: f64 },

    #[error("reflection denominator vanishes (|1 - i delta z k d2| = {0:e})")]
    PerfectAbsorption(f64),

    #[error("wavelength {0} nm outside the supported range [300, 1500] nm")]
    WavelengthOutOfRange(f64),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::CellViolation(_)
                | Error::SelfIntersection(_)
                | Error::Overlap { .. }
                | Error::InvalidArgument(_)
                | Error::WavelengthOutOfRange(_)
                | Error::Config { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
