//! Many-domain generalization toolkit.

pub mod data;
pub mod error;
pub mod harness;
pub mod eval;
pub mod method;
pub mod nn;
pub mod tensor;

pub use error::{Error, Result};
