//! Set-reconciliation sketches: a compact 3-hash invertible Bloom lookup
//! table backed by a BCH syndrome stash and an r-bit checksum gate, plus a
//! signed ternary variant that distinguishes which side each difference
//! came from.

pub mod bch;
pub mod error;
pub mod field;
pub mod hashing;
pub mod harness;
pub mod iblt;
pub mod signed;
pub mod sketch;
pub mod wire;

pub use error::{Error, Result};
