pub mod asymptotic;
pub mod directional;
pub mod error;
pub mod finite_sim;
pub mod harness;
mod optim;
pub mod quadrature;
pub mod sampling;
pub mod tilted;

pub use error::{Error, Result};
