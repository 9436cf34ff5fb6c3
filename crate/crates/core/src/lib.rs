//! Safe active exploration of unknown terrain from point-wise traversability
//! measurements.
//!
//! The pipeline, one iteration at a time:
//!
//! 1. [`gp`] keeps a Gaussian-process posterior over traversability built from
//!    noisy point measurements.
//! 2. [`regions`] turns the posterior into per-cell confidence intervals,
//!    grows the safe set under a Lipschitz assumption and finds the frontier.
//! 3. [`planner`] picks the next measurement site from the frontier.
//! 4. [`geometry`] converts the safe set into polygonal free space.
//! 5. [`navigator`] drives a point robot to the site without leaving that
//!    free space.
//!
//! [`sim`] ties everything together into seeded, reproducible episodes over
//! ground-truth terrain grids.

pub mod error;
pub mod geometry;
pub mod gp;
pub mod grid;
pub mod navigator;
pub mod planner;
pub mod regions;
pub mod sim;

pub use error::{Error, Result};
pub use grid::{CellSet, Grid, Point};
