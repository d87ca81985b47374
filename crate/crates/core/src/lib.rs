//! Riemannian diffusion mixtures.
//!
//! Bridge processes on manifolds (Logarithm and Spectral bridges), two-way
//! bridge matching for forward/backward drift networks, geodesic random walk
//! and probability-flow samplers, and probability-flow log-likelihoods.

pub mod bridges;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod manifold;
pub mod mesh;
pub mod net;
pub mod pipeline;
pub mod prior;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
