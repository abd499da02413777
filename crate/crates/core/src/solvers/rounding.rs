//! Thresholding of continuous densities with greedy feasibility repair.

use crate::constraints::ConstraintSystem;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedDesign {
    pub bits: Vec<bool>,
    /// Whether any bit was flipped after thresholding.
    pub repaired: bool,
    pub feasible: bool,
}

impl RoundedDesign {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// `rho_i >= threshold` selects site `i`. While constraints are violated,
/// flips the single bit that most reduces the total violation (lowest index
/// on ties), for at most `N` flips.
pub fn round_design(rho: &[f64], threshold: f64, system: &ConstraintSystem) -> RoundedDesign {
    let n = rho.len();
    let mut bits: Vec<bool> = rho.iter().map(|&r| r >= threshold).collect();
    let mut repaired = false;
    let mut violation = system.total_violation(&bits);
    let mut flips = 0;
    while violation > 0.0 && flips < n {
        let selected = bits.iter().filter(|&&b| b).count();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let delta = flip_delta(&bits, selected, i, system);
            if delta < 0.0 && best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        let Some((i, delta)) = best else {
            break;
        };
        bits[i] = !bits[i];
        violation += delta;
        repaired = true;
        flips += 1;
    }
    let feasible = system.is_feasible_binary(&bits);
    RoundedDesign {
        bits,
        repaired,
        feasible,
    }
}

/// Change in total violation if bit `i` were flipped.
fn flip_delta(bits: &[bool], selected: usize, i: usize, system: &ConstraintSystem) -> f64 {
    let count_violation = |c: usize| {
        (system.n_min().saturating_sub(c) + c.saturating_sub(system.n_max())) as f64
    };
    let active_neighbors = system.neighbors(i).iter().filter(|&&j| bits[j]).count() as f64;
    // every selected neighbour pair contributes two ordered rows
    if bits[i] {
        count_violation(selected - 1) - count_violation(selected) - 2.0 * active_neighbors
    } else {
        count_violation(selected + 1) - count_violation(selected) + 2.0 * active_neighbors
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farm::{CandidateGrid, Point, TurbineSpec};

    fn line(n: usize, step: f64, n_min: usize, n_max: usize) -> ConstraintSystem {
        let pts = (0..n).map(|i| Point::new(step * i as f64, 0.0)).collect();
        let grid = CandidateGrid::from_points(pts).unwrap();
        ConstraintSystem::build(&grid, &TurbineSpec::iea37_3_4mw(), 2.0, n_min, n_max).unwrap()
    }

    /// Brute-force violation count used as the oracle for greedy steps.
    fn violation_oracle(bits: &[bool], sys: &ConstraintSystem) -> usize {
        let c = bits.iter().filter(|&&b| b).count();
        let mut v = sys.n_min().saturating_sub(c) + c.saturating_sub(sys.n_max());
        for i in 0..bits.len() {
            for j in 0..bits.len() {
                if i != j && bits[i] && bits[j] && sys.neighbors(i).contains(&j) {
                    v += 1;
                }
            }
        }
        v
    }

    #[test]
    fn feasible_binary_is_unchanged() {
        let sys = line(5, 200.0, 1, 3);
        let rho = [1.0, 0.0, 1.0, 0.0, 1.0];
        let r = round_design(&rho, 0.5, &sys);
        assert_eq!(r.bits, vec![true, false, true, false, true]);
        assert!(!r.repaired && r.feasible);
    }

    #[test]
    fn low_densities_are_filled_to_minimum() {
        let sys = line(6, 200.0, 3, 6);
        let r = round_design(&[0.49; 6], 0.5, &sys);
        // greedy with lowest-index ties: 0, then 2, then 4
        assert_eq!(r.bits, vec![true, false, true, false, true, false]);
        assert!(r.repaired && r.feasible);
        assert_eq!(violation_oracle(&r.bits, &sys), 0);
    }

    #[test]
    fn crowded_pair_is_thinned() {
        let sys = line(2, 200.0, 1, 2);
        let r = round_design(&[0.9, 0.9], 0.5, &sys);
        assert_eq!(r.count(), 1);
        assert_eq!(r.bits, vec![false, true]);
        assert!(r.repaired && r.feasible);
    }

    #[test]
    fn infeasible_request_is_flagged() {
        // three sites all mutually adjacent, yet two turbines required
        let pts = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0), Point::new(50.0, 80.0)];
        let grid = CandidateGrid::from_points(pts).unwrap();
        let sys = ConstraintSystem::build(&grid, &TurbineSpec::iea37_3_4mw(), 2.0, 2, 3).unwrap();
        let r = round_design(&[0.0; 3], 0.5, &sys);
        assert!(!r.feasible);
    }

    #[test]
    fn greedy_deltas_match_oracle() {
        let sys = line(7, 200.0, 2, 4);
        let mut state = 7u64;
        for _ in 0..100 {
            let bits: Vec<bool> = (0..7)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (state >> 40) & 1 == 1
                })
                .collect();
            let sel = bits.iter().filter(|&&b| b).count();
            for i in 0..7 {
                let mut flipped = bits.clone();
                flipped[i] = !flipped[i];
                let expected = violation_oracle(&flipped, &sys) as f64 - violation_oracle(&bits, &sys) as f64;
                assert_eq!(flip_delta(&bits, sel, i, &sys), expected);
            }
        }
    }
}
