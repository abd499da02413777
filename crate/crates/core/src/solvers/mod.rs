//! Solvers for the layout problem: MMA with penalty continuation for the
//! relaxed problem, a genetic algorithm and exhaustive enumeration for the
//! binary one.

mod brute;
mod continuation;
mod ga;
pub mod mma;
pub mod rounding;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_solve, MAX_BRUTE_FORCE_SITES};
pub use continuation::{mma_solve, MmaSettings};
pub use ga::{ga_solve, GaSettings};
pub use rounding::{round_design, RoundedDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Mma,
    Ga,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Step below tolerance with the penalty at or past its target.
    Converged,
    MaxIterations,
    /// No improvement for the configured number of generations.
    Stalled,
    MaxGenerations,
    /// Every candidate enumerated.
    Exhausted,
    /// No feasible binary layout was produced.
    Infeasible,
}

/// One row of the optimisation history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Interpolation penalty in effect (0 for the binary solvers).
    pub penalty: f64,
    /// MMA: AEP of the current (interpolated) iterate. GA: best feasible AEP
    /// so far, NaN until one is found.
    pub aep_gwh: f64,
    pub max_violation: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solver: SolverKind,
    /// Final continuous densities (binary for GA/brute force).
    pub densities: Vec<f64>,
    pub layout: Vec<bool>,
    pub turbine_count: usize,
    /// AEP of the binary layout [GWh].
    pub aep_gwh: f64,
    pub iterations: usize,
    /// Objective evaluations performed.
    pub evaluations: usize,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
    pub wall_seconds: f64,
    pub final_penalty: f64,
    /// Rounding had to flip bits to restore feasibility.
    pub repaired: bool,
    pub feasible: bool,
    /// Stored MMA iterates, when requested.
    pub iterates: Vec<Vec<f64>>,
}

impl SolveResult {
    pub fn selected_sites(&self) -> Vec<usize> {
        (0..self.layout.len()).filter(|&i| self.layout[i]).collect()
    }
}
