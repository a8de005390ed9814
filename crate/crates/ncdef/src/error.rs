use thiserror::Error;

/// Errors surfaced by the library operations.
///
/// `IdentityViolation` is special: it signals that a theorem-backed identity
/// (the defect coboundary identities) failed, which indicates an
/// implementation bug rather than a property of the input.
#[derive(Debug, Error)]
pub enum NcdefError {
    #[error("invalid ideal: {0}")]
    InvalidIdeal(String),
    #[error("map is not surjective: {0}")]
    NotSurjective(String),
    #[error("extension is not small: {0}")]
    NotSmall(String),
    #[error("incompatible data: {0}")]
    IncompatibleData(String),
    #[error("unsupported variety: {0}")]
    Unsupported(String),
    #[error("indices are not comparable in the poset: {0}")]
    NotComparable(String),
    #[error("character window too small: violating character {0:?}")]
    WindowTooSmall(Vec<i64>),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("cochain is not a cocycle: {0}")]
    NotACocycle(String),
    #[error("cochain is not closed under the Cech differential: {0}")]
    NotClosed(String),
    #[error("no primitive within bounds (order {order}, degree {degree}); raise the bounds")]
    BoundsTooSmall { order: usize, degree: i64 },
    #[error("extension obstructed: {0}")]
    Obstructed(String),
    #[error("internal identity violation (implementation bug): {0}")]
    IdentityViolation(String),
    #[error("invalid base change: {0}")]
    InvalidBaseChange(String),
    #[error("deformations cannot be glued: {0}")]
    NotGluable(String),
    #[error("infinite-dimensional cohomology slice: {0}")]
    InfiniteDimensional(String),
    #[error("twist compatibility violated: {0}")]
    CompatibilityViolated(String),
    #[error("prime field: {0}")]
    PrimeField(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, NcdefError>;
