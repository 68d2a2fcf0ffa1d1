//! Exact rational arithmetic and the little linear algebra the rest of the
//! crate is built on: canonical-form rationals, vectors/matrices over them,
//! fraction-free determinants, Cramer solves, Sylvester positive-definiteness
//! tests, and an exact simplex. No floating point enters this module.

mod lp;
mod matrix;
mod rational;

pub use lp::{maximize, LpOutcome};
pub use matrix::{span_contains, RatMatrix, RatVector};
pub use rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("matrix is not square ({nrows}x{ncols})")]
    NonSquare { nrows: usize, ncols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("rows have inconsistent lengths (expected {expected}, found {found})")]
    RaggedRows { expected: usize, found: usize },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse rational from {0:?}")]
    BadRational(String),
}
