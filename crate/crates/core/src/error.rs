use alloc::string::String;
use alloc::vec::Vec;

use crate::hadamard::Parity;

/// Errors raised by the library. Every variant carries enough context to be
/// shown to a user without the call site.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("operation needs {expected} order, got r = {r}")]
    WrongParity { expected: Parity, r: u32 },
    #[error("information word {0:?} has odd parity; no codeword exists")]
    NotSpcCodeword(Vec<u8>),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;
