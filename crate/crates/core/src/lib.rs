//! Theta characteristics, Riemann theta functions and Frobenius' theta
//! function in genus three, with torus integrals giving Arakelov invariants.

pub mod char_algebra;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod frobenius;
pub mod integrator;
pub mod invariants;
pub mod json;
pub mod selftest;
pub mod theta;

pub use error::{Error, Result};
