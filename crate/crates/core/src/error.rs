use serde::Serialize;
use thiserror::Error;

/// A block of a target that failed the `alg_X` membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffendingBlock {
    pub row: usize,
    pub col: usize,
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix side {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("letter {letter} out of range for a {d}-letter alphabet")]
    LetterOutOfRange { letter: usize, d: usize },

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("row norm {row_norm} is not strictly inside the row ball")]
    NotRowContraction { row_norm: f64 },

    #[error("I - T is numerically singular")]
    SingularResolvent,

    #[error("Pick matrix asymmetry {relative:e} exceeds tolerance")]
    NotHermitian { relative: f64 },

    #[error("Pick matrix has eigenvalue {min_eigenvalue:e} below -psdTol*|P| = {bound:e}")]
    NotPsd { min_eigenvalue: f64, bound: f64 },

    #[error("{} target block(s) not in alg_X", .0.len())]
    NotInAlgebra(Vec<OffendingBlock>),

    #[error("preconditioner is not in the commutant of I (x) X (residual {residual:e})")]
    NotInCommutant { residual: f64 },

    #[error("preconditioner is not invertible")]
    NotInvertible,

    #[error("tuple is not a row co-isometry (|sum X X* - I| = {residual:e})")]
    NotCoisometry { residual: f64 },

    #[error("tuple is not irreducible (rank of P at 0.99 scale is {rank} < {full})")]
    NotIrreducible { rank: usize, full: usize },

    #[error("eigenvalue 1 of T is not isolated (gap {gap:e})")]
    DegenerateGap { gap: f64 },

    #[error("Pick matrix is not full rank ({rank} < {full})")]
    NotFullRank { rank: usize, full: usize },

    #[error("no admissible scales found within the iteration budget")]
    BudgetExhausted,

    #[error("V_X is not an isometry (|V*V - I| = {residual:e})")]
    IsometryFailure { residual: f64 },

    #[error("identity violated: residual {residual:e} ({what})")]
    IdentityViolation { what: &'static str, residual: f64 },

    #[error("size {n} exceeds the cap {cap} for this operation")]
    TooLarge { n: usize, cap: usize },

    #[error("P_X has rank {rank}, fewer than the {requested} requested targets")]
    RankTooSmall { rank: usize, requested: usize },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("weights invalid: {0}")]
    BadWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
