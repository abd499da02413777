//! Exhaustive enumeration of binary layouts (test oracle for small grids).

use std::time::Instant;

use rayon::prelude::*;

use super::{SolveResult, SolverKind, Termination};
use crate::error::{invalid, Result};
use crate::problem::LayoutProblem;

pub const MAX_BRUTE_FORCE_SITES: usize = 20;

/// Best feasible layout by exhaustive search. Ties in AEP go to the layout
/// with the smallest bitmask (bit `i` = site `i`), i.e. the lowest indices.
pub fn brute_force_solve(problem: &LayoutProblem) -> Result<SolveResult> {
    let n = problem.sites();
    if n > MAX_BRUTE_FORCE_SITES {
        return Err(invalid(format!(
            "brute force is limited to {MAX_BRUTE_FORCE_SITES} sites, got {n}"
        )));
    }
    let start = Instant::now();
    let sys = &problem.constraints;
    let neighbor_masks: Vec<u32> = (0..n)
        .map(|i| sys.neighbors(i).iter().fold(0u32, |m, &j| m | (1 << j)))
        .collect();
    let (n_min, n_max) = (sys.n_min() as u32, sys.n_max() as u32);

    let feasible = |mask: u32| -> bool {
        let c = mask.count_ones();
        c >= n_min
            && c <= n_max
            && (0..n).all(|i| mask & (1 << i) == 0 || mask & neighbor_masks[i] == 0)
    };

    let (count, best) = (0u32..(1u32 << n))
        .into_par_iter()
        .filter(|&mask| feasible(mask))
        .map(|mask| {
            let on: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            (1usize, Some((problem.aep_of_sites(&on), mask)))
        })
        .reduce(|| (0, None), |a, b| (a.0 + b.0, better(a.1, b.1)));

    let Some((aep_gwh, mask)) = best else {
        return Ok(SolveResult {
            solver: SolverKind::Brute,
            densities: vec![0.0; n],
            layout: vec![false; n],
            turbine_count: 0,
            aep_gwh: 0.0,
            iterations: 0,
            evaluations: 0,
            history: Vec::new(),
            termination: Termination::Infeasible,
            wall_seconds: start.elapsed().as_secs_f64(),
            final_penalty: 0.0,
            repaired: false,
            feasible: false,
            iterates: Vec::new(),
        });
    };
    let layout: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
    Ok(SolveResult {
        solver: SolverKind::Brute,
        densities: layout.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        turbine_count: mask.count_ones() as usize,
        layout,
        aep_gwh,
        iterations: 0,
        evaluations: count,
        history: Vec::new(),
        termination: Termination::Exhausted,
        wall_seconds: start.elapsed().as_secs_f64(),
        final_penalty: 0.0,
        repaired: false,
        feasible: true,
        iterates: Vec::new(),
    })
}

fn better(a: Option<(f64, u32)>, b: Option<(f64, u32)>) -> Option<(f64, u32)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) {
                Some(x)
            } else {
                Some(y)
            }
        }
    }
}
