//! Finite-field backends: GF(2^w) for keysums and binary syndromes,
//! GF(3^m) packed-trit vectors for the signed variant.

pub mod gf2;
pub mod gf3;

pub use gf2::{tables_for, FieldParams2, GfTables, POLY_TABLE};
pub use gf3::{mod3_packed, pow3, FieldParams3, Gf3Vec, POLY3_TABLE};
