//! Frame-theoretic quantities for operator orbits `{aₙTⁿφ}` in finite
//! truncations: exact frame operators, optimal bounds, canonical duals,
//! synthesis kernels, and checkers for orbit and perturbation results.

pub mod dynsamp;
pub mod error;
pub mod frames;
pub mod numkit;
pub mod perturb;
pub mod sampling;

pub use error::{Error, Result};
