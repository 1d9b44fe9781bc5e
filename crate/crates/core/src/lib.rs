//! Simulation and estimation pipeline for characterizing the radiation
//! pattern of a MIMO base-station array from noisy pilot measurements
//! collected on a circular trajectory around it.
//!
//! The crate is organized around the measurement chain:
//! [`array_geometry`] defines steering vectors and the trajectory,
//! [`ground_truth`] synthesizes the true pattern and Rician channel,
//! [`measurement`] produces pilots and noisy observations,
//! [`estimation`] jointly recovers multipath and pattern per point, and
//! [`harness`] runs seeded Monte Carlo campaigns and sweeps.

pub mod array_geometry;
pub mod error;
pub mod estimation;
pub mod ground_truth;
pub mod harness;
pub mod measurement;

pub use error::{ApcError, Result};
