pub mod error;
pub mod eval;
pub mod extensions;
pub mod cli;
pub mod combinatorics;
pub mod numeric;
pub mod quadrature;
pub mod selftest;
pub mod special;

pub use error::{Error, Result};
