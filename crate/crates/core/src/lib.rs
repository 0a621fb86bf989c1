//! Simulation and verification of regenerative processes built from i.i.d.
//! vectors of dependent cycles.

pub mod asymptotics;
pub mod engine;
mod error;
pub mod models;
pub mod numerics;
pub mod random;
pub mod renewal;
pub mod scenario;

pub use error::{Error, Result};
