//! Simulation of linear optical circuits fed with Fock states, and the
//! learners built on them. Variational circuits give trigonometric-polynomial
//! models; a two-mode interferometer gives Gaussian kernels and random
//! kitchen sink features.

pub mod circuit;
pub mod data;
pub mod error;
pub mod fock;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod rks;
pub mod variational;

pub use error::{Error, Result};
