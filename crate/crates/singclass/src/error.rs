//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("not a prime: {0}")]
    NotPrime(u64),
    #[error("characteristic {p} divides the root index {m}")]
    CharacteristicDividesM { p: u64, m: usize },
    #[error("no {m}-th root in the field{}", min_ext_degree.map(|d| format!(" (minimal extension degree {d})")).unwrap_or_default())]
    NoRootInField {
        m: usize,
        min_ext_degree: Option<usize>,
    },
    #[error("no rational {0}-th root")]
    NoRationalRoot(usize),
    #[error("extension degree bound {0} exceeded")]
    ExtensionBoundExceeded(usize),
    #[error("coefficient does not lie in the declared field: {0}")]
    CoefficientNotInField(String),
    #[error("resultant input has degree zero in the eliminated variable")]
    ZeroDegreeInput,
    #[error("series has a unit constant term where order >= 1 was required")]
    NotLocal,
    #[error("branch is not primitive (order gcd {gcd} > 1)")]
    NotPrimitive { gcd: usize },
    #[error("both coordinate orders {m} and {n} are divisible by the characteristic {p}")]
    BothOrdersDivisibleByP { m: usize, n: usize, p: u64 },
    #[error("jet level {requested} exceeds the certified truncation {available}")]
    JetExceedsTruncation { requested: usize, available: usize },
    #[error("truncation too small (retry with order >= {suggested})")]
    TruncationTooSmall { suggested: usize },
    #[error("branches coincide as germs")]
    BranchesCoincide,
    #[error("coordinate is not polynomial (finite truncation {0})")]
    NotPolynomial(usize),
    #[error("orbit enumeration exceeded the node budget {0}")]
    OrbitBudgetExceeded(usize),
    #[error("simpleness gate failed: condition ({0})")]
    GateFailed(String),
    #[error("conductor {c} outside the table range for this type")]
    ConductorOutOfTableRange { c: usize },
    #[error("no scalar solution; best achieved vanishing order {best_order}")]
    NoScalarSolution { best_order: usize },
    #[error("syntax error at byte {pos}: expected {expected}")]
    SyntaxError { pos: usize, expected: String },
    #[error("values belong to different fields")]
    FieldMismatch,
    #[error("move is not invertible: {0}")]
    NotInvertible(String),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
