//! Krylov-subspace Green's function estimation from unitary moments.

pub mod arnoldi;
pub mod costing;
pub mod emulation;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod greens;
pub mod linalg;
pub mod qsvt;

pub use error::{Error, Result};
pub use faer::c64;

#[cfg(test)]
mod testing;
