use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("maximum search failed after {iterations} iterations (best iterate {best:?}, |grad H| = {grad_norm:.3e})")]
    SearchFailed {
        iterations: usize,
        best: Vec<f64>,
        grad_norm: f64,
    },

    #[error("degenerate maximum: Hessian of H is not negative definite (eigenvalues {eigenvalues:?})")]
    DegenerateMaximum { eigenvalues: Vec<f64> },

    #[error("jet fit residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { residual: f64, tolerance: f64 },

    #[error("analytic oscillator ladder needs k = 1 (got k = {0}); use the numeric solver")]
    UseNumericPath(usize),

    #[error("level enumeration cap of {cap} exceeded")]
    CapExceeded { cap: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("box too small: levels moved by {delta:.3e} when the box grew by 25% (tolerance {tolerance:.3e})")]
    BoxTooSmall { delta: f64, tolerance: f64 },

    #[error("multi-indices {0:?} do not belong to a single oscillator level")]
    InvalidLevel(Vec<Vec<usize>>),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("floor violation: coefficient is not finite at {0:?}")]
    FloorViolation(Vec<f64>),

    #[error("shift {shift} is not below the spectrum (negative curvature in inner solve)")]
    ShiftAboveSpectrum { shift: f64 },

    #[error("convergence failure: {reason}; residual trace {trace:?}")]
    Convergence { reason: String, trace: Vec<f64> },

    #[error("accuracy refused: {0}")]
    AccuracyRefused(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::UnsupportedGeometry(_) => "unsupported-geometry",
            Error::SearchFailed { .. } => "search-failure",
            Error::DegenerateMaximum { .. } => "degenerate-maximum",
            Error::Accuracy { .. } => "accuracy",
            Error::UseNumericPath(_) => "use-numeric-path",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::InvalidPotential(_) => "invalid-potential",
            Error::BoxTooSmall { .. } => "box-too-small",
            Error::InvalidLevel(_) => "invalid-level",
            Error::DegenerateDomain(_) => "degenerate-domain",
            Error::FloorViolation(_) => "floor-violation",
            Error::ShiftAboveSpectrum { .. } => "shift-above-spectrum",
            Error::Convergence { .. } => "convergence",
            Error::AccuracyRefused(_) => "accuracy-refused",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        invalid(format!("non-finite coordinate in {xs:?}"))
    }
}
