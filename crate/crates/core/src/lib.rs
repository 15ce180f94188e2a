//! Relative positioning for receiver teams that cannot rely on satellite
//! navigation.
//!
//! The crate covers four measurement routes and the machinery to check them:
//!
//! - [`doppler`]: Doppler shift and the idealized single-receiver range.
//! - [`tdoa`]: arrival-time differences to emitter position and heading.
//! - [`trilat`]: distances to known emitters to receiver position, including
//!   the team reference point built from several drones.
//! - [`sim`]: a seeded forward simulator producing ranges and timestamps.
//!
//! [`solver`] holds the shared damped Gauss-Newton iteration together with
//! finite-difference and grid-search oracles, and [`cli`] drives complete
//! scenarios from JSON files.

pub mod cli;
pub mod doppler;
pub mod error;
pub mod geometry;
pub mod sim;
pub mod solver;
pub mod tdoa;
pub mod trilat;

pub use error::{Error, Result};
pub use geometry::{Dimension, DirectionVector, Point};
pub use solver::{SolveFlag, SolveResult, SolverOptions};
