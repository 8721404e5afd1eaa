//! Simulation and optimal control of a long-range iSWAP gate between two
//! Rydberg atoms coupled by resonant dipole-dipole exchange.

pub mod atomic;
pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod grape;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod optim;
pub mod propagator;
pub mod units;

pub use error::{Error, Result};
