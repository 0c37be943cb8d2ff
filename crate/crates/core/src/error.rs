use thiserror::Error;

/// Errors raised by series arithmetic, the hierarchy engine and the loop-group solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("window underflow: {0}")]
    WindowUnderflow(String),

    #[error("series is not strictly negative: {0}")]
    NotStrictlyNegative(String),

    #[error("series is not unipotent (Id + strictly negative): {0}")]
    NotUnipotent(String),

    #[error("leading coefficient is singular: {0}")]
    SingularLeading(String),

    #[error("no binding for derivative indeterminate {0}")]
    UnboundDerivative(String),

    #[error("expansion would produce {terms} terms, above the cap of {cap}")]
    ResourceExceeded { terms: usize, cap: usize },

    #[error("frame basis elements {0} and {1} do not commute")]
    NotCommuting(usize, usize),

    #[error("frame basis element {0} is not traceless")]
    NotTraceless(usize),

    #[error("frame basis is linearly dependent")]
    DependentBasis,

    #[error("shape violation: {0}")]
    ShapeViolation(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("operand lives in the wrong algebra for this oscillating matrix: {0}")]
    SideMismatch(String),

    #[error("aliasing detected: boundary Fourier mass {mass:.3e} exceeds {limit:.3e}")]
    AliasingDetected { mass: f64, limit: f64 },

    #[error("loop is outside the big cell: {0}")]
    BigCellViolation(String),

    #[error("flow support violation: {0}")]
    FlowSupportViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported for this scalar backend: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
