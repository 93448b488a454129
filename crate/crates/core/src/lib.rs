//! Exact p-adic verification of direct-method stability bounds for the
//! mixed additive–cubic Jensen functional equation.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod function;
pub mod magnitude;
pub mod padic;
pub mod spaces;

pub use error::{Error, Result};
