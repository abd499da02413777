//! Generational genetic algorithm over site bitstrings.
//!
//! Feasible individuals are ranked by AEP and always beat infeasible ones;
//! infeasible individuals carry no fitness (they can never be returned) and
//! are ordered among themselves by total constraint violation so an all
//! infeasible population can still make progress.

use std::cmp::Ordering;
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IterationRecord, SolveResult, SolverKind, Termination};
use crate::error::{invalid, Result};
use crate::problem::LayoutProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSettings {
    pub population_size: usize,
    /// Stop after this many generations without improvement.
    pub stall_generations: usize,
    /// Improvement below `function_tolerance * |best|` counts as a stall.
    pub function_tolerance: f64,
    pub max_generations: usize,
    pub seed: u64,
    #[serde(default = "default_tournament")]
    pub tournament_size: usize,
    #[serde(default = "default_crossover")]
    pub crossover_rate: f64,
    /// Per-bit flip probability; `1/N` when absent.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    /// Individuals copied unchanged into the next generation; 5% of the
    /// population (at least one) when absent.
    #[serde(default)]
    pub elite_count: Option<usize>,
}

fn default_tournament() -> usize {
    2
}

fn default_crossover() -> f64 {
    0.8
}

impl Default for GaSettings {
    fn default() -> Self {
        Self {
            population_size: 5000,
            stall_generations: 100,
            function_tolerance: 1e-8,
            max_generations: 1000,
            seed: 0,
            tournament_size: default_tournament(),
            crossover_rate: default_crossover(),
            mutation_rate: None,
            elite_count: None,
        }
    }
}

impl GaSettings {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(invalid("population size must be at least 2"));
        }
        if self.max_generations == 0 {
            return Err(invalid("max_generations must be at least 1"));
        }
        if self.tournament_size == 0 {
            return Err(invalid("tournament size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(invalid("crossover rate must lie in [0, 1]"));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid("mutation rate must lie in [0, 1]"));
            }
        }
        if self.elite_count.is_some_and(|e| e >= self.population_size) {
            return Err(invalid("elite count must be below the population size"));
        }
        if !(self.function_tolerance >= 0.0) {
            return Err(invalid("function tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    /// AEP for feasible individuals.
    aep: Option<f64>,
    violation: f64,
}

impl Score {
    /// `Greater` means `self` is the better individual.
    fn compare(&self, other: &Score) -> Ordering {
        match (self.aep, other.aep) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (None, None) => other.violation.total_cmp(&self.violation),
        }
    }
}

fn score(problem: &LayoutProblem, bits: &[bool]) -> Score {
    let violation = problem.constraints.total_violation(bits);
    if violation > 0.0 {
        return Score { aep: None, violation };
    }
    let on: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
    Score {
        aep: Some(problem.aep_of_sites(&on)),
        violation,
    }
}

/// Maximises AEP over binary layouts. Randomness comes from a single seeded
/// stream consumed in a fixed order; evaluation runs in parallel but scores
/// are gathered in population order, so results do not depend on the thread
/// count.
pub fn ga_solve(problem: &LayoutProblem, settings: &GaSettings) -> Result<SolveResult> {
    settings.validate()?;
    let start = Instant::now();
    let n = problem.sites();
    let pop_size = settings.population_size;
    let sys = &problem.constraints;
    let mutation = settings.mutation_rate.unwrap_or(1.0 / n as f64);
    let elites = settings
        .elite_count
        .unwrap_or_else(|| ((pop_size as f64 * 0.05).ceil() as usize).max(1))
        .min(pop_size - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let fill = ((sys.n_min() + sys.n_max()) as f64 / (2.0 * n as f64)).clamp(0.0, 1.0);
    let mut population: Vec<Vec<bool>> = (0..pop_size)
        .map(|_| (0..n).map(|_| rng.random_bool(fill)).collect())
        .collect();

    let mut best: Option<(Vec<bool>, f64)> = None;
    let mut least_violating: (Vec<bool>, f64) = (population[0].clone(), f64::INFINITY);
    let mut history = Vec::new();
    let mut stall = 0;
    let mut termination = Termination::MaxGenerations;
    let mut evaluations = 0;

    for generation in 1..=settings.max_generations {
        let scores: Vec<Score> = population.par_iter().map(|b| score(problem, b)).collect();
        evaluations += pop_size;

        let mut order: Vec<usize> = (0..pop_size).collect();
        // best first; stable so ties keep population order
        order.sort_by(|&a, &b| scores[b].compare(&scores[a]));

        let top = order[0];
        let improved = match (scores[top].aep, &best) {
            (Some(a), None) => {
                best = Some((population[top].clone(), a));
                true
            }
            (Some(a), Some((_, b))) if a > *b => {
                let significant = a - b > settings.function_tolerance * b.abs();
                best = Some((population[top].clone(), a));
                significant
            }
            _ => false,
        };
        if best.is_none() && scores[top].violation < least_violating.1 {
            least_violating = (population[top].clone(), scores[top].violation);
        }
        if improved {
            stall = 0;
        } else if best.is_some() {
            stall += 1;
        }

        let best_aep = best.as_ref().map_or(f64::NAN, |b| b.1);
        info!(
            "generation {generation:4}  best AEP {best_aep:10.3} GWh  top violation {}",
            scores[top].violation
        );
        history.push(IterationRecord {
            iteration: generation,
            penalty: 0.0,
            aep_gwh: best_aep,
            max_violation: scores[top].violation,
            step_norm: 0.0,
        });

        if stall >= settings.stall_generations {
            termination = Termination::Stalled;
            break;
        }
        if generation == settings.max_generations {
            break;
        }

        let mut next: Vec<Vec<bool>> = order[..elites].iter().map(|&i| population[i].clone()).collect();
        while next.len() < pop_size {
            let a = tournament(&scores, settings.tournament_size, &mut rng);
            let b = tournament(&scores, settings.tournament_size, &mut rng);
            let mut child = if rng.random_bool(settings.crossover_rate) {
                population[a]
                    .iter()
                    .zip(&population[b])
                    .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
                    .collect()
            } else {
                population[a].clone()
            };
            for bit in child.iter_mut() {
                if rng.random_bool(mutation) {
                    *bit = !*bit;
                }
            }
            next.push(child);
        }
        population = next;
    }

    let (layout, aep_gwh, feasible) = match best {
        Some((bits, aep)) => (bits, aep, true),
        None => {
            termination = Termination::Infeasible;
            (least_violating.0, 0.0, false)
        }
    };
    Ok(SolveResult {
        solver: SolverKind::Ga,
        densities: layout.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        turbine_count: layout.iter().filter(|&&b| b).count(),
        layout,
        aep_gwh,
        iterations: history.len(),
        evaluations,
        history,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
        final_penalty: 0.0,
        repaired: false,
        feasible,
        iterates: Vec::new(),
    })
}

fn tournament(scores: &[Score], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut winner = rng.random_range(0..scores.len());
    for _ in 1..size {
        let c = rng.random_range(0..scores.len());
        if scores[c].compare(&scores[winner]) == Ordering::Greater {
            winner = c;
        }
    }
    winner
}
