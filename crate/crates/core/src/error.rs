use thiserror::Error;

use crate::derivator::Violation;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid interval: need a < b, got a={a}, b={b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error("point t={t} outside domain [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },

    #[error("domain fails endpoint conditions: {0:?}")]
    InvalidDomain(Vec<Violation>),

    #[error("invalid derivator: {0}")]
    InvalidDerivator(String),

    #[error("quotient rule undefined: denominator {denominator} is zero")]
    QuotientUndefined { denominator: f64 },

    #[error("n-ary product rule needs n >= 2 factors, got {n}")]
    InvalidArity { n: usize },

    #[error("signature weight {k} out of range 0..={n}")]
    SignatureRange { n: usize, k: i64 },

    #[error("numeric derivative order {order} unsupported (max {max})")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("expression evaluation failed: {0}")]
    Eval(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
