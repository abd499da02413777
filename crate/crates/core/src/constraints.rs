//! Turbine-count (volume) and minimum-spacing constraints.
//!
//! Every constraint is affine in the raw densities, so all Jacobians are
//! constant and assembled once.

use std::io::Write;
use std::path::Path;

use crate::error::{check_len, invalid, Error, Result};
use crate::farm::{CandidateGrid, TurbineSpec};

/// Default minimum spacing in rotor diameters.
pub const DEFAULT_SPACING_FACTOR: f64 = 2.0;

/// Pairwise spacing structure: neighbour sets and the rows of `H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spacing {
    /// `neighbors[i]` holds every `j != i` within the minimum distance, ascending.
    pub neighbors: Vec<Vec<usize>>,
    /// Row `r` of `H` has unit entries in columns `rows[r].0` and `rows[r].1`.
    /// Both orderings of each neighbour pair are present.
    pub rows: Vec<(usize, usize)>,
}

impl Spacing {
    pub fn unordered_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().filter(|&(i, j)| i < j)
    }
}

/// Neighbour sets `{ j != i : |p_i - p_j| <= factor D }` and the matching
/// rows of `g = rho_i + rho_j - 1`.
pub fn build_spacing(grid: &CandidateGrid, turbine: &TurbineSpec, factor: f64) -> Result<Spacing> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(invalid("spacing factor must be positive"));
    }
    let limit = factor * turbine.rotor_diameter;
    let pts = grid.points();
    let n = pts.len();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if pts[i].distance(&pts[j]) <= limit {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    let rows = neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
        .collect();
    Ok(Spacing { neighbors, rows })
}

/// Values and (constant) gradients of the two volume constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeValues {
    /// `-sum(rho)/N + N_min/N`
    pub g_min: f64,
    /// `sum(rho)/N - N_max/N`
    pub g_max: f64,
    pub grad_min: Vec<f64>,
    pub grad_max: Vec<f64>,
}

pub fn volume_constraints(rho: &[f64], n_min: usize, n_max: usize) -> Result<VolumeValues> {
    let n = rho.len();
    validate_counts(n, n_min, n_max)?;
    let nf = n as f64;
    let mean = rho.iter().sum::<f64>() / nf;
    Ok(VolumeValues {
        g_min: -mean + n_min as f64 / nf,
        g_max: mean - n_max as f64 / nf,
        grad_min: vec![-1.0 / nf; n],
        grad_max: vec![1.0 / nf; n],
    })
}

fn validate_counts(n: usize, n_min: usize, n_max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if n_min > n_max {
        return Err(invalid(format!("N_min ({n_min}) exceeds N_max ({n_max})")));
    }
    if n_max > n {
        return Err(invalid(format!("N_max ({n_max}) exceeds the number of sites ({n})")));
    }
    Ok(())
}

/// Full constraint set of the layout problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    n: usize,
    n_min: usize,
    n_max: usize,
    spacing: Spacing,
}

impl ConstraintSystem {
    pub fn new(n: usize, n_min: usize, n_max: usize, spacing: Spacing) -> Result<Self> {
        validate_counts(n, n_min, n_max)?;
        check_len("spacing neighbour sets", n, spacing.neighbors.len())?;
        Ok(Self {
            n,
            n_min,
            n_max,
            spacing,
        })
    }

    pub fn build(
        grid: &CandidateGrid,
        turbine: &TurbineSpec,
        factor: f64,
        n_min: usize,
        n_max: usize,
    ) -> Result<Self> {
        Self::new(grid.len(), n_min, n_max, build_spacing(grid, turbine, factor)?)
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn v_min(&self) -> f64 {
        self.n_min as f64 / self.n as f64
    }

    pub fn v_max(&self) -> f64 {
        self.n_max as f64 / self.n as f64
    }

    pub fn spacing(&self) -> &Spacing {
        &self.spacing
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.spacing.neighbors[i]
    }

    /// Total number of constraint rows: two volume rows plus the rows of `H`.
    pub fn len(&self) -> usize {
        2 + self.spacing.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self, rho: &[f64]) -> Result<VolumeValues> {
        check_len("design length", self.n, rho.len())?;
        volume_constraints(rho, self.n_min, self.n_max)
    }

    /// All constraint values in row order `[g_min, g_max, H rho - 1]`.
    pub fn values(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let vol = self.volume(rho)?;
        let mut out = Vec::with_capacity(self.len());
        out.push(vol.g_min);
        out.push(vol.g_max);
        out.extend(self.spacing.rows.iter().map(|&(i, j)| rho[i] + rho[j] - 1.0));
        Ok(out)
    }

    /// Constant Jacobian as sparse rows of `(column, value)`, matching
    /// [`ConstraintSystem::values`].
    pub fn jacobian(&self) -> Vec<Vec<(usize, f64)>> {
        let inv = 1.0 / self.n as f64;
        let mut rows = Vec::with_capacity(self.len());
        rows.push((0..self.n).map(|j| (j, -inv)).collect());
        rows.push((0..self.n).map(|j| (j, inv)).collect());
        rows.extend(self.spacing.rows.iter().map(|&(i, j)| {
            let mut r = vec![(i, 1.0), (j, 1.0)];
            r.sort_unstable_by_key(|e| e.0);
            r
        }));
        rows
    }

    pub fn max_violation(&self, rho: &[f64]) -> Result<f64> {
        Ok(self.values(rho)?.into_iter().fold(0.0, f64::max))
    }

    /// Sum of positive parts of all constraint rows, with the volume rows
    /// rescaled to turbine counts. For binary layouts this is the count
    /// shortfall/excess plus the number of violated spacing rows.
    pub fn total_violation(&self, bits: &[bool]) -> f64 {
        let count = bits.iter().filter(|&&b| b).count();
        let short = self.n_min.saturating_sub(count);
        let excess = count.saturating_sub(self.n_max);
        let crowded = self
            .spacing
            .rows
            .iter()
            .filter(|&&(i, j)| bits[i] && bits[j])
            .count();
        (short + excess + crowded) as f64
    }

    pub fn is_feasible_binary(&self, bits: &[bool]) -> bool {
        bits.len() == self.n && self.total_violation(bits) == 0.0
    }

    /// Writes the unordered neighbour pairs as CSV `i,j,distance`.
    pub fn write_pairs_csv(&self, grid: &CandidateGrid, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(w, "i,j,distance").map_err(io_err)?;
        for (i, j) in self.spacing.unordered_pairs() {
            let d = grid.points()[i].distance(&grid.points()[j]);
            writeln!(w, "{i},{j},{d:.6}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Spacing rows `H rho - 1`.
pub fn spacing_values(rho: &[f64], system: &ConstraintSystem) -> Result<Vec<f64>> {
    check_len("design length", system.sites(), rho.len())?;
    Ok(system
        .spacing()
        .rows
        .iter()
        .map(|&(i, j)| rho[i] + rho[j] - 1.0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farm::{generate_circular_grid, GridMode, Point};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iea() -> TurbineSpec {
        TurbineSpec::iea37_3_4mw()
    }

    fn pair(d: f64) -> CandidateGrid {
        CandidateGrid::from_points(vec![Point::new(0.0, 0.0), Point::new(d, 0.0)]).unwrap()
    }

    #[test]
    fn neighbour_pairs() {
        let s = build_spacing(&pair(200.0), &iea(), 2.0).unwrap();
        assert_eq!(s.rows, vec![(0, 1), (1, 0)]);
        let s = build_spacing(&pair(400.0), &iea(), 2.0).unwrap();
        assert!(s.rows.is_empty());
        // tie at exactly 2D counts
        let s = build_spacing(&pair(260.0), &iea(), 2.0).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert!(build_spacing(&pair(1.0), &iea(), 0.0).is_err());
    }

    #[test]
    fn lattice_neighbours_are_four_connected() {
        let grid = generate_circular_grid(1300.0, 200.0, GridMode::Offset).unwrap();
        let s = build_spacing(&grid, &iea(), 2.0).unwrap();
        let pts = grid.points();
        for (i, list) in s.neighbors.iter().enumerate() {
            // oracle: integer lattice offsets of exactly one step
            let expected: Vec<usize> = (0..pts.len())
                .filter(|&j| {
                    let di = ((pts[j].x - pts[i].x) / 200.0).round() as i64;
                    let dj = ((pts[j].y - pts[i].y) / 200.0).round() as i64;
                    di.abs() + dj.abs() == 1
                })
                .collect();
            assert_eq!(list, &expected);
        }
        assert_eq!(s.rows.len(), 2 * s.unordered_pairs().count());
    }

    #[test]
    fn volume_values() {
        let v = volume_constraints(&[1.0; 124], 16, 64).unwrap();
        assert_relative_eq!(v.g_min, -1.0 + 16.0 / 124.0, max_relative = 1e-14);
        assert!((v.g_min + 0.87097).abs() < 1e-5);
        let v = volume_constraints(&[0.0; 124], 16, 64).unwrap();
        assert_relative_eq!(v.g_min, 16.0 / 124.0);
        let mut rho = vec![0.0; 124];
        rho[..64].fill(1.0);
        let v = volume_constraints(&rho, 16, 64).unwrap();
        assert!(v.g_max.abs() < 1e-15);
        assert_eq!(v.grad_min, vec![-1.0 / 124.0; 124]);
        assert!(volume_constraints(&[0.0; 4], 3, 2).is_err());
    }

    #[test]
    fn spacing_values_cases() {
        let sys = ConstraintSystem::build(&pair(200.0), &iea(), 2.0, 0, 2).unwrap();
        assert_eq!(spacing_values(&[1.0, 1.0], &sys).unwrap(), vec![1.0, 1.0]);
        assert_eq!(spacing_values(&[1.0, 0.0], &sys).unwrap(), vec![0.0, 0.0]);
        assert_eq!(spacing_values(&[0.5, 0.5], &sys).unwrap(), vec![0.0, 0.0]);
        assert!(spacing_values(&[0.5], &sys).is_err());
        assert_eq!(sys.len(), 4);
        let jac = sys.jacobian();
        assert_eq!(jac[2], vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn binary_feasibility_matches_distance_scan() {
        let grid = generate_circular_grid(700.0, 200.0, GridMode::Offset).unwrap();
        let sys = ConstraintSystem::build(&grid, &iea(), 2.0, 0, grid.len()).unwrap();
        let n = grid.len();
        let mut state = 12345u64;
        for _ in 0..200 {
            let bits: Vec<bool> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 33).is_multiple_of(4)
                })
                .collect();
            let pts = grid.points();
            let crowded = (0..n).any(|i| {
                (0..n).any(|j| i != j && bits[i] && bits[j] && pts[i].distance(&pts[j]) <= 260.0)
            });
            assert_eq!(sys.is_feasible_binary(&bits), !crowded);
        }
    }

    proptest! {
        #[test]
        fn constraints_are_affine(
            a in proptest::collection::vec(0.0f64..=1.0, 12),
            b in proptest::collection::vec(0.0f64..=1.0, 12),
        ) {
            let pts = (0..12).map(|i| Point::new(200.0 * (i % 4) as f64, 200.0 * (i / 4) as f64)).collect();
            let grid = CandidateGrid::from_points(pts).unwrap();
            let sys = ConstraintSystem::build(&grid, &iea(), 2.0, 2, 8).unwrap();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (ga, gb, gm) = (sys.values(&a).unwrap(), sys.values(&b).unwrap(), sys.values(&mid).unwrap());
            for r in 0..gm.len() {
                prop_assert!((gm[r] - 0.5 * (ga[r] + gb[r])).abs() < 1e-14);
            }
            for i in 0..12 {
                for &j in sys.neighbors(i) {
                    prop_assert!(sys.neighbors(j).contains(&i));
                }
            }
        }
    }
}
