use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("variable index {index} out of range for n = {n}")]
    VariableOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("order {order} out of range (allowed 1..={max})")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("duplicate multi-index {0:?}")]
    DuplicateIndex(Vec<u32>),

    #[error("multi-index {mu:?} has degree {degree}, allowed 1..={max}")]
    IndexDegreeOutOfRange { mu: Vec<u32>, degree: usize, max: usize },

    #[error("jet carries no exact rational data")]
    NotExact,

    #[error(
        "unsupported dimension n = {0}: for n >= 6 the order-5 construction gives beta_1 <= 3, \
         so every three-jet degenerate point already lies in the bad set and the conditions \
         carry no information there"
    )]
    UnsupportedDimension(usize),

    #[error("jet order {got} too low, order {needed} required")]
    OrderTooLow { needed: usize, got: usize },

    #[error("gradient vanishes at the point (norm {0:e})")]
    DegenerateGradient(f64),

    #[error("invalid system parameters n = {n}, m = {m}, r = {r}: {reason}")]
    InvalidSystem { n: usize, m: usize, r: usize, reason: String },

    #[error("manifold dimension {dim} exceeds certification ceiling {ceiling}")]
    DimensionTooLarge { dim: usize, ceiling: usize },

    #[error("unknown set id {0:?}")]
    UnknownSet(String),

    #[error("invalid jet file: {0}")]
    JetFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
