use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("entry at row {row}, column {col} is not an integer")]
    NotIntegral { row: usize, col: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("enumeration budget exceeded: {needed} subproblems, limit {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("unsupported norm index {0}")]
    UnsupportedNorm(f64),
    #[error("linear program is infeasible: {0}")]
    Infeasible(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("exact rational arithmetic required: {0}")]
    ExactArithmeticRequired(String),
}
