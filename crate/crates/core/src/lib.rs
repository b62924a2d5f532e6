pub mod arith;
pub mod characters;
pub mod cyclo;
pub mod error;
pub mod exponents;
pub mod matcoef;
pub mod quaternion;
pub mod residue;
pub mod snf;
pub mod statphase;
pub mod whittaker;

pub use error::{Error, Result};
