use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::mma::{Mma, MmaConstants, MmaInput};
use super::rounding::{round_design, DEFAULT_THRESHOLD};
use super::{IterationRecord, SolveResult, SolverKind, Termination};
use crate::error::{invalid, Error, Result};
use crate::objective::InterpolationScheme;
use crate::problem::LayoutProblem;

/// MMA run settings. The penalty schedule applies to the scheme's own
/// parameter (`q` for RAMP, `p` for SIMP); it is ignored for the linear
/// scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmaSettings {
    pub q_min: f64,
    pub q_step: f64,
    /// Iterations between penalty increments.
    pub q_step_interval: usize,
    pub q_max: f64,
    /// Move limit in density units.
    pub move_limit: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the Euclidean norm of the design change.
    pub step_tolerance: f64,
    /// Penalty that must be reached before the step test may stop the run.
    pub q_converged: f64,
    pub initial_density: f64,
    #[serde(default = "default_threshold")]
    pub rounding_threshold: f64,
    #[serde(default)]
    pub record_iterates: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for MmaSettings {
    fn default() -> Self {
        Self {
            q_min: 0.0,
            q_step: 0.5,
            q_step_interval: 10,
            q_max: 10.0,
            move_limit: 0.1,
            max_iterations: 1000,
            step_tolerance: 1e-8,
            q_converged: 3.0,
            initial_density: 0.2,
            rounding_threshold: DEFAULT_THRESHOLD,
            record_iterates: false,
        }
    }
}

impl MmaSettings {
    /// Constant penalty `q` (no continuation).
    pub fn fixed_penalty(q: f64) -> Self {
        Self {
            q_min: q,
            q_max: q,
            q_converged: q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_min <= self.q_converged && self.q_converged <= self.q_max) {
            return Err(invalid("penalty schedule needs q_min <= q_converged <= q_max"));
        }
        if !(self.q_step > 0.0) {
            return Err(invalid("q_step must be positive"));
        }
        if self.q_step_interval == 0 {
            return Err(invalid("q_step_interval must be at least 1"));
        }
        if !(self.move_limit > 0.0 && self.move_limit <= 1.0) {
            return Err(invalid("move limit must lie in (0, 1]"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(invalid("step tolerance must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_density) {
            return Err(invalid("initial density must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.rounding_threshold) {
            return Err(invalid("rounding threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Minimises `-AEP` of the interpolated densities with MMA, raising the
/// penalty every `q_step_interval` iterations, then rounds the result.
pub fn mma_solve(
    problem: &LayoutProblem,
    scheme: &InterpolationScheme,
    settings: &MmaSettings,
) -> Result<SolveResult> {
    settings.validate()?;
    let start = Instant::now();
    let n = problem.sites();
    let system = &problem.constraints;
    let jacobian = system.jacobian();
    let m = jacobian.len();
    let xmin = vec![0.0; n];
    let xmax = vec![1.0; n];

    let schedule = !matches!(scheme, InterpolationScheme::Linear);
    let mut penalty = if schedule { settings.q_min } else { 0.0 };
    let current = |q: f64| scheme.with_penalty(q);
    current(penalty).validate()?;

    let mut rho = vec![settings.initial_density; n];
    let first = problem.evaluate_raw(&rho, &current(penalty));
    let scale = if first.aep_gwh > 0.0 { first.aep_gwh } else { 1.0 };

    let mut mma = Mma::new(n, m, MmaConstants::default());
    let mut history = Vec::new();
    let mut iterates = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut evaluations = 0;
    let mut pending = Some(first);

    for iteration in 1..=settings.max_iterations {
        let report = match pending.take() {
            Some(r) => r,
            None => problem.evaluate_raw(&rho, &current(penalty)),
        };
        evaluations += 1;
        if !report.aep_gwh.is_finite() || report.gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Solver(format!(
                "non-finite objective or gradient at iteration {iteration} (q = {penalty})"
            )));
        }
        let df0: Vec<f64> = report.gradient.iter().map(|g| g / scale).collect();
        let fval = system.values(&rho)?;
        let max_violation = fval.iter().copied().fold(0.0, f64::max);

        let mut next = mma
            .update(&MmaInput {
                x: &rho,
                xmin: &xmin,
                xmax: &xmax,
                move_limit: settings.move_limit,
                df0dx: &df0,
                fval: &fval,
                dfdx: &jacobian,
            })
            .map_err(|e| Error::Solver(format!("iteration {iteration}: {e}")))?;
        for (x, &old) in next.iter_mut().zip(&rho) {
            let lo = (old - settings.move_limit).max(0.0);
            let hi = (old + settings.move_limit).min(1.0);
            *x = x.clamp(lo, hi);
        }
        let step_norm = next
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();

        info!(
            "iter {iteration:4}  q {penalty:5.2}  AEP {:10.3} GWh  max viol {max_violation:9.2e}  step {step_norm:9.2e}",
            report.aep_gwh
        );
        debug!("newton steps {}", mma.last_newton_steps);
        history.push(IterationRecord {
            iteration,
            penalty,
            aep_gwh: report.aep_gwh,
            max_violation,
            step_norm,
        });
        if settings.record_iterates {
            iterates.push(rho.clone());
        }
        rho = next;

        if step_norm < settings.step_tolerance && penalty >= settings.q_converged {
            termination = Termination::Converged;
            break;
        }
        if schedule && iteration % settings.q_step_interval == 0 {
            penalty = (penalty + settings.q_step).min(settings.q_max);
        }
    }

    let rounded = round_design(&rho, settings.rounding_threshold, system);
    let aep_gwh = problem.aep_binary(&rounded.bits)?;
    if !rounded.feasible {
        termination = Termination::Infeasible;
    }
    let final_penalty = history.last().map_or(penalty, |h| h.penalty);
    Ok(SolveResult {
        solver: SolverKind::Mma,
        turbine_count: rounded.count(),
        densities: rho,
        aep_gwh,
        iterations: history.len(),
        evaluations,
        history,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
        final_penalty,
        repaired: rounded.repaired,
        feasible: rounded.feasible,
        layout: rounded.bits,
        iterates,
    })
}
