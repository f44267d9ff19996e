//! Factorization of one-dimensional Hamiltonians and the isospectral families
//! generated from the general solution of the associated Riccati equation.

pub mod cli;
pub mod darboux;
pub mod eigensolve;
pub mod error;
pub mod factorize;
pub mod grid;
pub mod riccati;
pub mod seeds;
pub mod specfun;

pub use error::{Error, Result};
