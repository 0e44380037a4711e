use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("eigenvalue {eigenvalue:e} lies outside the domain of the function")]
    Domain { eigenvalue: f64 },
    #[error("input contains a non-finite entry")]
    NonFinite,
    #[error("decomposition failed to converge")]
    NoConvergence,
    #[error("not a minimal projection: {0}")]
    NotMinimalProjection(String),
    #[error("defect 1 - F*F is numerically singular (min eigenvalue {min_eig:e} <= {tol:e})")]
    DefectSingular { min_eig: f64, tol: f64 },
    #[error("no pseudo-inverse: {0}")]
    NoPseudoInverse(String),
    #[error("operator is not Fredholm")]
    NotFredholm,
    #[error("index is {0}, expected 0")]
    IndexNonzero(i64),
    #[error("direct index {direct} and transform index {transform} disagree")]
    PathDisagreement { direct: i64, transform: i64 },
    #[error("invalid weight symbol: {0}")]
    Symbol(String),
    #[error("invalid generator: {0}")]
    Generator(String),
}
