//! Wind farm layout optimisation by density-based topology optimisation.
//!
//! Candidate turbine sites carry continuous densities that are driven to
//! 0/1 by a penalised interpolation while MMA maximises annual energy
//! production under turbine-count and spacing constraints.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod constraints;
pub mod error;
pub mod farm;
pub mod flow;
pub mod objective;
pub mod plot;
pub mod problem;
pub mod run;
pub mod solvers;
pub mod wake;

pub use error::{Error, Result};
pub use farm::{CandidateGrid, GridMode, Point, TurbineSpec, WindBin, WindRose};
pub use objective::{DesignVector, InterpolationScheme};
pub use problem::LayoutProblem;
pub use wake::WakeParams;
