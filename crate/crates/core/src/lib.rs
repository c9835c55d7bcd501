//! Simulation and control of nonlinear opinion dynamics on a chain of agents.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: chain diffusion operators, control layouts, nonlinearities
//!   and controllability tests.
//! - [`dynamics`]: time frames, control signals and the IMEX midpoint
//!   integrator producing [`dynamics::Trajectory`] values.
//! - [`synthesis`]: the terminal-plus-energy objective, its discrete adjoint
//!   gradient, an L-BFGS minimiser and the extension/restriction construction
//!   of boundary controls.
//! - [`experiments`]: bound evaluators, scaling sweeps, cost-growth fits and
//!   the reference optimal-control experiment.
//! - [`io`]: key-value run configs, CSV/JSON emitters and SVG plots.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod network;
pub mod synthesis;

pub use error::{Error, Result};
