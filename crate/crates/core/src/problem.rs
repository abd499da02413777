//! A fully assembled layout problem: geometry, wind, wakes and constraints.

use crate::constraints::ConstraintSystem;
use crate::error::Result;
use crate::farm::{CandidateGrid, TurbineSpec, WindRose};
use crate::objective::{self, DesignVector, InterpolationScheme, ObjectiveReport};
use crate::wake::{precompute_deficit_tensor, DeficitTensor, WakeParams};

#[derive(Debug, Clone)]
pub struct LayoutProblem {
    pub grid: CandidateGrid,
    pub rose: WindRose,
    pub turbine: TurbineSpec,
    pub wake: WakeParams,
    pub tensor: DeficitTensor,
    pub constraints: ConstraintSystem,
}

impl LayoutProblem {
    /// Precomputes the deficit tensor and assembles the constraints.
    pub fn new(
        grid: CandidateGrid,
        rose: WindRose,
        turbine: TurbineSpec,
        wake: WakeParams,
        spacing_factor: f64,
        n_min: usize,
        n_max: usize,
    ) -> Result<Self> {
        turbine.validate()?;
        let tensor = precompute_deficit_tensor(&grid, &rose, &turbine, &wake)?;
        let constraints = ConstraintSystem::build(&grid, &turbine, spacing_factor, n_min, n_max)?;
        Ok(Self {
            grid,
            rose,
            turbine,
            wake,
            tensor,
            constraints,
        })
    }

    pub fn sites(&self) -> usize {
        self.grid.len()
    }

    pub fn evaluate(&self, rho: &DesignVector, scheme: &InterpolationScheme) -> Result<ObjectiveReport> {
        objective::aep(rho, scheme, &self.tensor, &self.rose, &self.turbine)
    }

    /// Unchecked evaluation for solver inner loops; `rho` must already be
    /// in `[0, 1]` with the right length.
    pub(crate) fn evaluate_raw(&self, rho: &[f64], scheme: &InterpolationScheme) -> ObjectiveReport {
        objective::evaluate(rho, scheme, &self.tensor, &self.rose, &self.turbine, true)
    }

    pub fn aep_binary(&self, bits: &[bool]) -> Result<f64> {
        objective::aep_binary(bits, &self.tensor, &self.rose, &self.turbine)
    }

    pub(crate) fn aep_of_sites(&self, on: &[usize]) -> f64 {
        objective::aep_of_sites(on, &self.tensor, &self.rose, &self.turbine)
    }
}
