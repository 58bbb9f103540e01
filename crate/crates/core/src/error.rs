use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by the analytic and grid engines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A δ-density environment was passed to an operation that needs an
    /// ordinary (pointwise) density.
    DeltaUnsupported,
    /// The requested η grid truncates more probability mass than the tail
    /// budget allows, or the gridded density has not decayed at the ends.
    GridTooNarrow { truncated_mass: f64 },
    /// Queried body value is not one of the entangled state's support points.
    PositionNotInSupport { position: f64 },
    /// The environment density has no finite variance (Cauchy family).
    NonFiniteVariance,
    /// Off-diagonal separation is zero.
    ZeroSeparation,
    /// Too few usable samples for a decay fit.
    InsufficientSamples { found: usize },
    /// Too much wave mass at the grid boundary: spectral translation would
    /// wrap it around and silently corrupt every overlap.
    CourantViolation { boundary_mass: f64 },
    /// Propagation failed the unitarity check.
    NormDrift { drift: f64 },
    /// Operation is not defined for this coupling kind.
    UnsupportedCoupling(&'static str),
    /// A constructed value violates a type invariant.
    Invariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DeltaUnsupported => {
                write!(f, "DeltaUnsupported: delta environments have no pointwise density")
            }
            Error::GridTooNarrow { truncated_mass } => {
                write!(f, "GridTooNarrow: grid truncates mass {truncated_mass:.3e}")
            }
            Error::PositionNotInSupport { position } => {
                write!(f, "PositionNotInSupport: {position} is not a support point of the state")
            }
            Error::NonFiniteVariance => {
                write!(f, "NonFiniteVariance: environment density has no finite variance")
            }
            Error::ZeroSeparation => write!(f, "ZeroSeparation: off-diagonal separation is zero"),
            Error::InsufficientSamples { found } => {
                write!(f, "InsufficientSamples: {found} usable points, need at least 8")
            }
            Error::CourantViolation { boundary_mass } => {
                write!(f, "CourantViolation: boundary mass fraction {boundary_mass:.3e} exceeds 1e-6")
            }
            Error::NormDrift { drift } => {
                write!(f, "NormDrift: norm changed by {drift:.3e} under evolution")
            }
            Error::UnsupportedCoupling(what) => write!(f, "UnsupportedCoupling: {what}"),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
