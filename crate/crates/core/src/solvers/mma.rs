//! Method of Moving Asymptotes for
//!
//! ```text
//! minimize    f0(x) + a0 z + sum_i (c_i y_i + d_i y_i^2 / 2)
//! subject to  f_i(x) - a_i z - y_i <= 0,   xmin <= x <= xmax,   y, z >= 0
//! ```
//!
//! Asymptote rules and constants follow Svanberg's 2007 reference
//! implementation (`mmasub`/`subsolv`), with the convex separable
//! subproblem solved by the same primal-dual interior-point method. The
//! constraint Jacobian is stored by rows; entries that are structurally zero
//! stay zero in the approximation, which keeps the Newton systems sparse for
//! affine constraints.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use log::debug;

use crate::error::{Error, Result};

/// Sparse Jacobian row: `(column, derivative)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// Largest KKT residual accepted at the last barrier level. Each level
/// targets `0.9 * epsi` within 200 Newton steps; on flat objectives the
/// smallest levels can stall slightly above that without affecting `x`.
pub const SUBPROBLEM_RESIDUAL_LIMIT: f64 = 1e-3;

/// Fixed MMA constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmaConstants {
    pub asy_init: f64,
    pub asy_incr: f64,
    pub asy_decr: f64,
    /// Fraction of the distance to the asymptote kept as a bound.
    pub albefa: f64,
    pub raa0: f64,
    /// Final barrier parameter of the subproblem solver.
    pub epsimin: f64,
    pub a0: f64,
    /// Cost of the elastic variables `y` (linear and quadratic).
    pub c: f64,
    pub d: f64,
}

impl Default for MmaConstants {
    fn default() -> Self {
        Self {
            asy_init: 0.5,
            asy_incr: 1.2,
            asy_decr: 0.7,
            albefa: 0.1,
            raa0: 1e-5,
            epsimin: 1e-9,
            a0: 1.0,
            c: 1000.0,
            d: 1.0,
        }
    }
}

/// MMA state carried between outer iterations.
#[derive(Debug, Clone)]
pub struct Mma {
    n: usize,
    m: usize,
    iter: usize,
    low: Vec<f64>,
    upp: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
    consts: MmaConstants,
    /// Newton iterations used by the last subproblem solve.
    pub last_newton_steps: usize,
}

/// Inputs of one outer MMA iteration.
pub struct MmaInput<'a> {
    pub x: &'a [f64],
    pub xmin: &'a [f64],
    pub xmax: &'a [f64],
    /// Move limit as a fraction of `xmax - xmin`.
    pub move_limit: f64,
    pub df0dx: &'a [f64],
    pub fval: &'a [f64],
    pub dfdx: &'a [SparseRow],
}

impl Mma {
    pub fn new(n: usize, m: usize, consts: MmaConstants) -> Self {
        Self {
            n,
            m,
            iter: 0,
            low: vec![0.0; n],
            upp: vec![0.0; n],
            xold1: Vec::new(),
            xold2: Vec::new(),
            consts,
            last_newton_steps: 0,
        }
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    /// Builds and solves the MMA subproblem at `input.x`, returning the new
    /// design.
    pub fn update(&mut self, input: &MmaInput<'_>) -> Result<Vec<f64>> {
        let (n, m) = (self.n, self.m);
        let c = &self.consts;
        if input.fval.len() != m || input.dfdx.len() != m || input.x.len() != n {
            return Err(Error::Solver("MMA input dimensions do not match".into()));
        }
        self.iter += 1;
        let x = input.x;
        if self.iter == 1 {
            self.xold1 = x.to_vec();
            self.xold2 = x.to_vec();
        }

        // asymptotes
        for j in 0..n {
            let range = input.xmax[j] - input.xmin[j];
            if self.iter < 3 {
                self.low[j] = x[j] - c.asy_init * range;
                self.upp[j] = x[j] + c.asy_init * range;
            } else {
                let trend = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let factor = if trend > 0.0 {
                    c.asy_incr
                } else if trend < 0.0 {
                    c.asy_decr
                } else {
                    1.0
                };
                let low = x[j] - factor * (self.xold1[j] - self.low[j]);
                let upp = x[j] + factor * (self.upp[j] - self.xold1[j]);
                self.low[j] = low.max(x[j] - 10.0 * range).min(x[j] - 0.01 * range);
                self.upp[j] = upp.min(x[j] + 10.0 * range).max(x[j] + 0.01 * range);
            }
        }

        // move limits
        let mut alfa = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for j in 0..n {
            let range = input.xmax[j] - input.xmin[j];
            alfa[j] = (self.low[j] + c.albefa * (x[j] - self.low[j]))
                .max(x[j] - input.move_limit * range)
                .max(input.xmin[j]);
            beta[j] = (self.upp[j] - c.albefa * (self.upp[j] - x[j]))
                .min(x[j] + input.move_limit * range)
                .min(input.xmax[j]);
        }

        // convex approximation
        let ux2: Vec<f64> = (0..n).map(|j| (self.upp[j] - x[j]).powi(2)).collect();
        let xl2: Vec<f64> = (0..n).map(|j| (x[j] - self.low[j]).powi(2)).collect();
        let raa_over_range: Vec<f64> = (0..n)
            .map(|j| c.raa0 / (input.xmax[j] - input.xmin[j]).max(1e-5))
            .collect();
        let mut p0 = vec![0.0; n];
        let mut q0 = vec![0.0; n];
        for j in 0..n {
            let g = input.df0dx[j];
            let (pp, qq) = (g.max(0.0), (-g).max(0.0));
            let pq = 0.001 * (pp + qq) + raa_over_range[j];
            p0[j] = (pp + pq) * ux2[j];
            q0[j] = (qq + pq) * xl2[j];
        }
        let mut rows = Vec::with_capacity(m);
        let mut b = vec![0.0; m];
        for (i, row) in input.dfdx.iter().enumerate() {
            let mut entries = Vec::with_capacity(row.len());
            let mut bi = -input.fval[i];
            for &(j, g) in row {
                let (pp, qq) = (g.max(0.0), (-g).max(0.0));
                let pq = 0.001 * (pp + qq) + raa_over_range[j];
                let p = (pp + pq) * ux2[j];
                let q = (qq + pq) * xl2[j];
                bi += p / (self.upp[j] - x[j]) + q / (x[j] - self.low[j]);
                entries.push(Entry { col: j, p, q });
            }
            b[i] = bi;
            rows.push(entries);
        }

        let sub = Subproblem {
            n,
            m,
            low: &self.low,
            upp: &self.upp,
            alfa: &alfa,
            beta: &beta,
            p0: &p0,
            q0: &q0,
            rows: &rows,
            b: &b,
            a0: c.a0,
            a: vec![0.0; m],
            c: vec![c.c; m],
            d: vec![c.d; m],
        };
        let (xnew, steps) = sub.solve(c.epsimin)?;
        self.last_newton_steps = steps;
        self.xold2 = std::mem::replace(&mut self.xold1, x.to_vec());
        Ok(xnew)
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    col: usize,
    p: f64,
    q: f64,
}

struct Subproblem<'a> {
    n: usize,
    m: usize,
    low: &'a [f64],
    upp: &'a [f64],
    alfa: &'a [f64],
    beta: &'a [f64],
    p0: &'a [f64],
    q0: &'a [f64],
    rows: &'a [Vec<Entry>],
    b: &'a [f64],
    a0: f64,
    a: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

/// Primal-dual iterate of the subproblem.
#[derive(Debug, Clone)]
struct State {
    x: Vec<f64>,
    y: Vec<f64>,
    z: f64,
    lam: Vec<f64>,
    xsi: Vec<f64>,
    eta: Vec<f64>,
    mu: Vec<f64>,
    zet: f64,
    s: Vec<f64>,
}

impl State {
    fn axpy(&self, step: f64, dir: &State) -> State {
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(u, v)| u + step * v).collect()
        };
        State {
            x: add(&self.x, &dir.x),
            y: add(&self.y, &dir.y),
            z: self.z + step * dir.z,
            lam: add(&self.lam, &dir.lam),
            xsi: add(&self.xsi, &dir.xsi),
            eta: add(&self.eta, &dir.eta),
            mu: add(&self.mu, &dir.mu),
            zet: self.zet + step * dir.zet,
            s: add(&self.s, &dir.s),
        }
    }
}

impl Subproblem<'_> {
    /// `p0 + P' lam` and `q0 + Q' lam`.
    fn plam_qlam(&self, lam: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut plam = self.p0.to_vec();
        let mut qlam = self.q0.to_vec();
        for (row, &l) in self.rows.iter().zip(lam) {
            for e in row {
                plam[e.col] += e.p * l;
                qlam[e.col] += e.q * l;
            }
        }
        (plam, qlam)
    }

    /// `P / (u - x) + Q / (x - l)` per row.
    fn gvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.p / (self.upp[e.col] - x[e.col]) + e.q / (x[e.col] - self.low[e.col]))
                    .sum()
            })
            .collect()
    }

    /// KKT residual vector of the perturbed system.
    fn residual(&self, st: &State, epsi: f64) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let (plam, qlam) = self.plam_qlam(&st.lam);
        let gvec = self.gvec(&st.x);
        let mut r = Vec::with_capacity(3 * n + 4 * m + 2);
        for j in 0..n {
            let ux = self.upp[j] - st.x[j];
            let xl = st.x[j] - self.low[j];
            r.push(plam[j] / (ux * ux) - qlam[j] / (xl * xl) - st.xsi[j] + st.eta[j]);
        }
        for i in 0..m {
            r.push(self.c[i] + self.d[i] * st.y[i] - st.mu[i] - st.lam[i]);
        }
        r.push(self.a0 - st.zet - dot(&self.a, &st.lam));
        for i in 0..m {
            r.push(gvec[i] - self.a[i] * st.z - st.y[i] + st.s[i] - self.b[i]);
        }
        for j in 0..n {
            r.push(st.xsi[j] * (st.x[j] - self.alfa[j]) - epsi);
        }
        for j in 0..n {
            r.push(st.eta[j] * (self.beta[j] - st.x[j]) - epsi);
        }
        for i in 0..m {
            r.push(st.mu[i] * st.y[i] - epsi);
        }
        r.push(st.zet * st.z - epsi);
        for i in 0..m {
            r.push(st.lam[i] * st.s[i] - epsi);
        }
        r
    }

    fn solve(&self, epsimin: f64) -> Result<(Vec<f64>, usize)> {
        let (n, m) = (self.n, self.m);
        let mut st = State {
            x: (0..n).map(|j| 0.5 * (self.alfa[j] + self.beta[j])).collect(),
            y: vec![1.0; m],
            z: 1.0,
            lam: vec![1.0; m],
            xsi: (0..n)
                .map(|j| (1.0 / (0.5 * (self.beta[j] - self.alfa[j]))).max(1.0))
                .collect(),
            eta: (0..n)
                .map(|j| (1.0 / (0.5 * (self.beta[j] - self.alfa[j]))).max(1.0))
                .collect(),
            mu: self.c.iter().map(|&ci| (0.5 * ci).max(1.0)).collect(),
            zet: 1.0,
            s: vec![1.0; m],
        };
        let mut epsi = 1.0;
        let mut total_steps = 0;
        let mut final_residual = 0.0;
        while epsi > epsimin {
            let mut res = self.residual(&st, epsi);
            let mut resnorm = norm(&res);
            let mut resmax = max_abs(&res);
            let mut inner = 0;
            while resmax > 0.9 * epsi && inner < 200 {
                inner += 1;
                total_steps += 1;
                let dir = self.newton_direction(&st, epsi)?;
                let mut step = self.max_step(&st, &dir);
                let mut trial = st.clone();
                let mut newnorm = 2.0 * resnorm;
                let mut halvings = 0;
                while newnorm > resnorm && halvings < 50 {
                    halvings += 1;
                    trial = st.axpy(step, &dir);
                    res = self.residual(&trial, epsi);
                    newnorm = norm(&res);
                    step /= 2.0;
                }
                st = trial;
                resnorm = newnorm;
                resmax = max_abs(&res);
            }
            if !resnorm.is_finite() {
                return Err(Error::Solver(format!(
                    "MMA subproblem diverged at barrier {epsi:e} (x = {:?})",
                    st.x
                )));
            }
            if resmax > 0.9 * epsi {
                // the reference code moves on to the next barrier level
                // here; the final level is checked below
                debug!("MMA subproblem: barrier {epsi:e} left at residual {resmax:e} after {inner} steps");
            }
            final_residual = resmax;
            epsi *= 0.1;
        }
        if !(final_residual <= SUBPROBLEM_RESIDUAL_LIMIT) {
            return Err(Error::Solver(format!(
                "MMA subproblem did not converge: residual {final_residual:e} after \
                 {total_steps} Newton steps; x = {:?}, lam = {:?}",
                st.x, st.lam
            )));
        }
        Ok((st.x, total_steps))
    }

    /// Fraction-to-boundary step length (factor 1.01 as in the reference
    /// implementation), capped at 1.
    fn max_step(&self, st: &State, dir: &State) -> f64 {
        let mut worst: f64 = 1.0;
        let mut push = |v: f64, dv: f64| {
            let s = -1.01 * dv / v;
            if s > worst {
                worst = s;
            }
        };
        for i in 0..self.m {
            push(st.y[i], dir.y[i]);
            push(st.lam[i], dir.lam[i]);
            push(st.mu[i], dir.mu[i]);
            push(st.s[i], dir.s[i]);
        }
        push(st.z, dir.z);
        push(st.zet, dir.zet);
        for j in 0..self.n {
            push(st.xsi[j], dir.xsi[j]);
            push(st.eta[j], dir.eta[j]);
            push(st.x[j] - self.alfa[j], dir.x[j]);
            push(self.beta[j] - st.x[j], -dir.x[j]);
        }
        1.0 / worst
    }

    fn newton_direction(&self, st: &State, epsi: f64) -> Result<State> {
        let (n, m) = (self.n, self.m);
        let x = &st.x;
        let (plam, qlam) = self.plam_qlam(&st.lam);
        let gvec = self.gvec(x);

        let mut delx = vec![0.0; n];
        let mut diagx = vec![0.0; n];
        let mut uxinv2 = vec![0.0; n];
        let mut xlinv2 = vec![0.0; n];
        for j in 0..n {
            let ux = self.upp[j] - x[j];
            let xl = x[j] - self.low[j];
            uxinv2[j] = 1.0 / (ux * ux);
            xlinv2[j] = 1.0 / (xl * xl);
            let dpsidx = plam[j] * uxinv2[j] - qlam[j] * xlinv2[j];
            delx[j] = dpsidx - epsi / (x[j] - self.alfa[j]) + epsi / (self.beta[j] - x[j]);
            diagx[j] = 2.0 * (plam[j] / (ux * ux * ux) + qlam[j] / (xl * xl * xl))
                + st.xsi[j] / (x[j] - self.alfa[j])
                + st.eta[j] / (self.beta[j] - x[j]);
        }
        // GG = P diag(1/(u-x)^2) - Q diag(1/(x-l)^2), same sparsity as the Jacobian
        let gg: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| (e.col, e.p * uxinv2[e.col] - e.q * xlinv2[e.col]))
                    .collect()
            })
            .collect();
        let dely: Vec<f64> = (0..m)
            .map(|i| self.c[i] + self.d[i] * st.y[i] - st.lam[i] - epsi / st.y[i])
            .collect();
        let delz = self.a0 - dot(&self.a, &st.lam) - epsi / st.z;
        let dellam: Vec<f64> = (0..m)
            .map(|i| gvec[i] - self.a[i] * st.z - st.y[i] - self.b[i] + epsi / st.lam[i])
            .collect();
        let diagy: Vec<f64> = (0..m).map(|i| self.d[i] + st.mu[i] / st.y[i]).collect();
        let diaglamyi: Vec<f64> = (0..m).map(|i| st.s[i] / st.lam[i] + 1.0 / diagy[i]).collect();

        let (dx, dz, dlam) = if m < n {
            // (m+1) system in (dlam, dz)
            let mut aa = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut scaled = DMatrix::<f64>::zeros(m, n);
            for (i, row) in gg.iter().enumerate() {
                for &(j, v) in row {
                    scaled[(i, j)] = v / diagx[j].sqrt();
                }
            }
            let gram = &scaled * scaled.transpose();
            for i in 0..m {
                for k in 0..m {
                    aa[(i, k)] = gram[(i, k)];
                }
                aa[(i, i)] += diaglamyi[i];
                aa[(i, m)] = self.a[i];
                aa[(m, i)] = self.a[i];
            }
            aa[(m, m)] = -st.zet / st.z;
            let mut bb = DVector::<f64>::zeros(m + 1);
            for (i, row) in gg.iter().enumerate() {
                let gdx: f64 = row.iter().map(|&(j, v)| v * delx[j] / diagx[j]).sum();
                bb[i] = dellam[i] + dely[i] / diagy[i] - gdx;
            }
            bb[m] = delz;
            let sol = aa
                .lu()
                .solve(&bb)
                .ok_or_else(|| Error::Solver("singular MMA Newton system".into()))?;
            let dlam: Vec<f64> = (0..m).map(|i| sol[i]).collect();
            let mut gtl = vec![0.0; n];
            for (row, &l) in gg.iter().zip(&dlam) {
                for &(j, v) in row {
                    gtl[j] += v * l;
                }
            }
            let dx: Vec<f64> = (0..n).map(|j| -delx[j] / diagx[j] - gtl[j] / diagx[j]).collect();
            (dx, sol[m], dlam)
        } else {
            // (n+1) system in (dx, dz)
            let dellamyi: Vec<f64> = (0..m).map(|i| dellam[i] + dely[i] / diagy[i]).collect();
            let w: Vec<f64> = diaglamyi.iter().map(|d| 1.0 / d).collect();
            let mut bx = delx.clone();
            let mut axz = vec![0.0; n];
            let mut azz = st.zet / st.z;
            for (i, row) in gg.iter().enumerate() {
                for &(j, vj) in row {
                    bx[j] += vj * dellamyi[i] * w[i];
                    axz[j] -= vj * self.a[i] * w[i];
                }
                azz += self.a[i] * self.a[i] * w[i];
            }
            let bz = delz - (0..m).map(|i| self.a[i] * dellamyi[i] / diaglamyi[i]).sum::<f64>();
            let neg_bx: Vec<f64> = bx.iter().map(|v| -v).collect();
            let sol = solve_primal(&diagx, &gg, &w, &diaglamyi, &[&neg_bx, &axz])?;
            let (x1, x2) = (&sol[0], &sol[1]);
            let schur = azz - dot(&axz, x2);
            let dz = (-bz - dot(&axz, x1)) / schur;
            if !dz.is_finite() {
                return Err(Error::Solver("singular MMA Newton system".into()));
            }
            let sol: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b * dz).chain([dz]).collect();
            let dx: Vec<f64> = (0..n).map(|j| sol[j]).collect();
            let dz = sol[n];
            let dlam: Vec<f64> = gg
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let gdx: f64 = row.iter().map(|&(j, v)| v * dx[j]).sum();
                    gdx / diaglamyi[i] - dz * self.a[i] / diaglamyi[i] + dellamyi[i] / diaglamyi[i]
                })
                .collect();
            (dx, dz, dlam)
        };

        let dy: Vec<f64> = (0..m).map(|i| -dely[i] / diagy[i] + dlam[i] / diagy[i]).collect();
        let dxsi: Vec<f64> = (0..n)
            .map(|j| {
                let g = x[j] - self.alfa[j];
                -st.xsi[j] + epsi / g - st.xsi[j] * dx[j] / g
            })
            .collect();
        let deta: Vec<f64> = (0..n)
            .map(|j| {
                let g = self.beta[j] - x[j];
                -st.eta[j] + epsi / g + st.eta[j] * dx[j] / g
            })
            .collect();
        let dmu: Vec<f64> = (0..m)
            .map(|i| -st.mu[i] + epsi / st.y[i] - st.mu[i] * dy[i] / st.y[i])
            .collect();
        let dzet = -st.zet + epsi / st.z - st.zet * dz / st.z;
        let ds: Vec<f64> = (0..m)
            .map(|i| -st.s[i] + epsi / st.lam[i] - st.s[i] * dlam[i] / st.lam[i])
            .collect();
        Ok(State {
            x: dx,
            y: dy,
            z: dz,
            lam: dlam,
            xsi: dxsi,
            eta: deta,
            mu: dmu,
            zet: dzet,
            s: ds,
        })
    }
}

/// Rows with more nonzeros than this enter the primal Newton matrix as
/// low-rank updates instead of sparse entries.
const LOW_RANK_ROW_NNZ: usize = 64;

/// Solves `(diag(dx) + sum_i w_i g_i g_i') X = R` for each right-hand side.
///
/// Short rows are assembled into a sparse matrix and factored by sparse
/// Cholesky; long rows are added back with the Woodbury identity, using
/// `winv = 1 / w` for the capacitance diagonal.
fn solve_primal(
    diagx: &[f64],
    rows: &[Vec<(usize, f64)>],
    w: &[f64],
    winv: &[f64],
    rhs: &[&[f64]],
) -> Result<Vec<Vec<f64>>> {
    let n = diagx.len();
    let singular = || Error::Solver("singular MMA Newton system".into());
    let mut coo = CooMatrix::new(n, n);
    for (j, &d) in diagx.iter().enumerate() {
        coo.push(j, j, d);
    }
    let mut dense = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() > LOW_RANK_ROW_NNZ {
            dense.push(i);
            continue;
        }
        for &(j, vj) in row {
            for &(k, vk) in row {
                coo.push(j, k, w[i] * vj * vk);
            }
        }
    }
    let chol = CscCholesky::factor(&CscMatrix::from(&coo)).map_err(|_| singular())?;

    let mut r = DMatrix::<f64>::zeros(n, rhs.len());
    for (c, col) in rhs.iter().enumerate() {
        r.column_mut(c).copy_from_slice(col);
    }
    let mut y = chol.solve(&r);
    if !dense.is_empty() {
        let mut u = DMatrix::<f64>::zeros(n, dense.len());
        for (c, &i) in dense.iter().enumerate() {
            for &(j, v) in &rows[i] {
                u[(j, c)] += v;
            }
        }
        let z = chol.solve(&u);
        let mut cap = u.transpose() * &z;
        for (c, &i) in dense.iter().enumerate() {
            cap[(c, c)] += winv[i];
        }
        let coef = cap
            .lu()
            .solve(&(u.transpose() * &y))
            .ok_or_else(singular)?;
        y -= z * coef;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok((0..rhs.len()).map(|c| y.column(c).iter().copied().collect()).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Runs plain MMA on a smooth problem given closures.
    fn run(
        x0: Vec<f64>,
        xmin: Vec<f64>,
        xmax: Vec<f64>,
        iters: usize,
        f: impl Fn(&[f64]) -> (f64, Vec<f64>, Vec<f64>, Vec<SparseRow>),
    ) -> Vec<f64> {
        let (_, _, g0, rows) = f(&x0);
        let mut mma = Mma::new(x0.len(), g0.len(), MmaConstants::default());
        let _ = rows;
        let mut x = x0;
        for _ in 0..iters {
            let (_, df0, g, dg) = f(&x);
            x = mma
                .update(&MmaInput {
                    x: &x,
                    xmin: &xmin,
                    xmax: &xmax,
                    move_limit: 0.5,
                    df0dx: &df0,
                    fval: &g,
                    dfdx: &dg,
                })
                .unwrap();
        }
        x
    }

    #[test]
    fn linear_objective_with_budget() {
        // max x0 + 2 x1 + 3 x2 subject to sum(x) <= 1.5 on [0,1]^3 -> (0, 0.5, 1)
        let x = run(vec![0.3; 3], vec![0.0; 3], vec![1.0; 3], 60, |x| {
            let f0 = -(x[0] + 2.0 * x[1] + 3.0 * x[2]);
            let g = vec![x.iter().sum::<f64>() - 1.5];
            let dg = vec![vec![(0, 1.0), (1, 1.0), (2, 1.0)]];
            (f0, vec![-1.0, -2.0, -3.0], g, dg)
        });
        assert!(x[0] < 1e-4, "{x:?}");
        assert!((x[1] - 0.5).abs() < 1e-4, "{x:?}");
        assert!((x[2] - 1.0).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn svanberg_toy_problem() {
        // minimize x1^2 + x2^2 + x3^2 subject to
        // (x1-5)^2 + (x2-2)^2 + (x3-1)^2 <= 9 and (x1-3)^2 + (x2-4)^2 + (x3-3)^2 <= 9
        // known optimum approximately (2.0175, 1.7800, 1.2376)
        let x = run(vec![4.0, 3.0, 2.0], vec![0.0; 3], vec![5.0; 3], 80, |x| {
            let f0 = x.iter().map(|v| v * v).sum::<f64>();
            let df0 = x.iter().map(|v| 2.0 * v).collect();
            let g1 = (x[0] - 5.0).powi(2) + (x[1] - 2.0).powi(2) + (x[2] - 1.0).powi(2) - 9.0;
            let g2 = (x[0] - 3.0).powi(2) + (x[1] - 4.0).powi(2) + (x[2] - 3.0).powi(2) - 9.0;
            let dg = vec![
                vec![(0, 2.0 * (x[0] - 5.0)), (1, 2.0 * (x[1] - 2.0)), (2, 2.0 * (x[2] - 1.0))],
                vec![(0, 2.0 * (x[0] - 3.0)), (1, 2.0 * (x[1] - 4.0)), (2, 2.0 * (x[2] - 3.0))],
            ];
            (f0, df0, vec![g1, g2], dg)
        });
        let expected = [2.0175, 1.7800, 1.2376];
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-3, "{x:?}");
        }
    }

    #[test]
    fn many_constraints_use_primal_system() {
        // n = 2, m = 3 exercises the (n+1)-dimensional Newton system
        let x = run(vec![0.2, 0.2], vec![0.0; 2], vec![1.0; 2], 60, |x| {
            let f0 = -(x[0] + x[1]);
            let g = vec![x[0] + x[1] - 1.0, x[0] - 0.7, x[1] - 0.7];
            let dg = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)]];
            (f0, vec![-1.0, -1.0], g, dg)
        });
        assert!((x[0] + x[1] - 1.0).abs() < 1e-4, "{x:?}");
        assert!(x[0] <= 0.7 + 1e-6 && x[1] <= 0.7 + 1e-6);
    }

    #[test]
    fn respects_move_limit_and_bounds() {
        let mut mma = Mma::new(2, 1, MmaConstants::default());
        let x = [0.5, 0.5];
        let out = mma
            .update(&MmaInput {
                x: &x,
                xmin: &[0.0, 0.0],
                xmax: &[1.0, 1.0],
                move_limit: 0.1,
                df0dx: &[-100.0, 100.0],
                fval: &[-10.0],
                dfdx: &[vec![(0, 1.0), (1, 1.0)]],
            })
            .unwrap();
        assert!(out[0] <= 0.6 + 1e-12 && out[0] > 0.5);
        assert!(out[1] >= 0.4 - 1e-12 && out[1] < 0.5);
    }
}
