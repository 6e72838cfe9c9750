use thiserror::Error;

/// Errors raised by the pointwise algebra, the field layer and the operator.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum QmaError {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("coefficient matrix is not antisymmetric (relative defect {defect:.3e})")]
    NotAntisymmetric { defect: f64 },

    #[error("J-reality violated (relative defect {defect:.3e})")]
    JReality { defect: f64 },

    #[error("form leaves the positive cone at point {point} (margin {margin:.3e})")]
    Cone { point: usize, margin: f64 },

    #[error("index {index} out of range (must be < {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("wedge powers sum to {got}, expected {expected}")]
    PowerMismatch { got: usize, expected: usize },

    #[error("quaternionic dimension {n} unsupported here: {reason}")]
    Dimension { n: usize, reason: &'static str },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("inverse transform left an imaginary residue of {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("field dump: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for QmaError {
    fn from(err: std::io::Error) -> Self {
        QmaError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QmaError>;
