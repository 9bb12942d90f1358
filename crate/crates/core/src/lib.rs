//! Sublinear expectations on finite scenario families, dyadic product
//! constructions for pairs of independent-increment processes, and a
//! finite-difference reference solver for the G-heat equation.

pub mod cli;
pub mod dsl;
pub mod error;
pub mod expectation;
pub mod grid;
pub mod limit;
pub mod pde;
pub mod process;
pub mod product;
pub mod time;

pub use error::{Error, Result};

/// Engine version stamped into report rows.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
