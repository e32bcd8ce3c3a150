use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Every variant maps to a stable short name (see [`Error::name`]) which the
/// command-line front end prints on failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero homogeneous vector")]
    ZeroVector,
    #[error("points are not collinear (triple product {triple:.3e})")]
    NotCollinear { triple: f64 },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("singular matrix (relative determinant {0:.3e})")]
    SingularMatrix(f64),
    #[error("point lies at infinity in the affine chart")]
    PointAtInfinity,

    #[error("triangle ({p},{q},{r}) is not hyperbolic: 1/p+1/q+1/r = {sum:.6} >= 1")]
    NotHyperbolic { p: u32, q: u32, r: u32, sum: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("element is not proximal: {reason} (gap {gap:.3e})")]
    NonProximal { reason: String, gap: f64 },

    #[error("quadratic form is not an ellipse: {0}")]
    NotAnEllipse(String),
    #[error("insufficient data: {found} usable proximal fixed points, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("inconsistent representation: {0}")]
    InconsistentRepresentation(String),
    #[error("point is outside the domain")]
    OutsideDomain,
    #[error("degenerate direction vector")]
    DegenerateDirection,

    #[error("near-boundary overflow: chart distance {0:.3e} to the boundary")]
    NearBoundary(f64),
    #[error("recentering failed: best distance to origin {best:.4} exceeds radius {radius:.4}")]
    RecenterFailure { best: f64, radius: f64 },
    #[error("invalid cocycle configuration: {0}")]
    InvalidConfig(String),

    #[error("unreliable report: {excluded} of {total} orbits excluded")]
    UnreliableReport { excluded: usize, total: usize },
    #[error("insufficient scales: {found} usable, need {needed}")]
    InsufficientScales { found: usize, needed: usize },
    #[error("inconsistent boundary samples: {0}")]
    InconsistentBoundary(String),
    #[error("insufficient census: {found} primitive classes, need {needed}")]
    InsufficientCensus { found: usize, needed: usize },
    #[error("sweep failure: {failed} of {total} grid points failed")]
    SweepFailure { failed: usize, total: usize },

    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in diagnostics and exit messages.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ZeroVector => "zero-vector",
            Error::NotCollinear { .. } => "collinearity",
            Error::DegenerateConfiguration(_) => "degenerate-configuration",
            Error::SingularMatrix(_) => "singular-matrix",
            Error::PointAtInfinity => "point-at-infinity",
            Error::NotHyperbolic { .. } => "not-hyperbolic",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NonProximal { .. } => "non-proximal",
            Error::NotAnEllipse(_) => "not-an-ellipse",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::InconsistentRepresentation(_) => "inconsistent-representation",
            Error::OutsideDomain => "outside-domain",
            Error::DegenerateDirection => "degenerate-direction",
            Error::NearBoundary(_) => "near-boundary-overflow",
            Error::RecenterFailure { .. } => "recenter-failure",
            Error::InvalidConfig(_) => "invalid-config",
            Error::UnreliableReport { .. } => "unreliable-report",
            Error::InsufficientScales { .. } => "insufficient-scales",
            Error::InconsistentBoundary(_) => "inconsistent-boundary",
            Error::InsufficientCensus { .. } => "insufficient-census",
            Error::SweepFailure { .. } => "sweep-failure",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
