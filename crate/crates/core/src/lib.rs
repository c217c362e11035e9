// Tabulated constants keep every printed digit; `!(x > 0.0)` guards reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod cli;
pub mod cylinder;
pub mod error;
pub mod gaussmoments;
pub mod quad;
pub mod specfun;
pub mod torsion;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
