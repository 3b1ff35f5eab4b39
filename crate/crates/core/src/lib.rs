//! Orderable bijections between levels of the boolean lattice.

pub mod error;
pub mod lattice;
pub mod search;

pub use error::{Error, Result};
pub mod format;
pub mod matching;
pub mod nonexistence;
pub mod verifier;
