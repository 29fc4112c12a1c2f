//! Protograph-based LDPC-Hadamard codes.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the Hadamard component
//! codec, protomatrices and their quasi-cyclic lifting, PEXIT threshold
//! analysis, the global iterative decoder and an AWGN simulation harness.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decoder;
pub mod error;
pub mod hadamard;
pub mod lifting;
pub mod par;
pub mod pexit;
pub mod protograph;
pub mod sim;

pub use error::{Error, Result};
