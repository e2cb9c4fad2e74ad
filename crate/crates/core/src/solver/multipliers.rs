//! Multiplier search for the binding power/ACI constraints.
//!
//! For a fixed active set `A` and a set of constraint rows with weights
//! `w_k,i ≥ 0` (1 for the total-power row, ϖ for an ACI row), stationarity
//! gives `P_i(λ) = c/μ_i(λ) − β_i` with `μ_i = α + Σ_k w_k,i·λ_k`,
//! `c = (1−α)/ln 2` and `β_i = K_i/C_i`. The residuals
//! `R_k(λ) = Σ_{i∈A} w_k,i·P_i(λ) − cap_k` are the gradient of the concave
//! function `Φ(λ) = Σ_i c·ln μ_i − Σ_k λ_k·(cap_k + Σ_i w_k,i·β_i)`, so the
//! multipliers solve `max Φ` over `λ ≥ 0`: `λ_k > 0` forces `R_k = 0` and
//! `λ_k = 0` leaves `R_k ≤ 0`.

use crate::error::{Error, Result};

/// Relative residual at which the search stops.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERS: usize = 100;
const MAX_SWEEPS: usize = 5_000;
const ARMIJO: f64 = 1e-4;

/// One binding constraint: per-subcarrier weights and its cap.
pub(crate) struct Row<'a> {
    pub weights: RowWeights<'a>,
    pub cap: f64,
}

#[derive(Clone, Copy)]
pub(crate) enum RowWeights<'a> {
    Unit,
    Aci(&'a [f64]),
}

impl RowWeights<'_> {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            RowWeights::Unit => 1.0,
            RowWeights::Aci(w) => w[i],
        }
    }
}

/// Inputs shared by every evaluation.
pub(crate) struct DualProblem<'a> {
    pub alpha: f64,
    pub c: f64,
    /// `β_i = K_i / C_i`, indexed by subcarrier.
    pub base: &'a [f64],
    pub active: &'a [usize],
    pub rows: &'a [Row<'a>],
}

impl DualProblem<'_> {
    pub fn mu(&self, i: usize, lambda: &[f64]) -> f64 {
        self.alpha
            + self
                .rows
                .iter()
                .zip(lambda)
                .map(|(r, l)| r.weights.at(i) * l)
                .sum::<f64>()
    }

    /// Residuals `R_k` and their magnitude scales.
    pub fn residuals(&self, lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.rows.len();
        let mut r = vec![0.0; m];
        let mut scale = vec![0.0; m];
        for &i in self.active {
            let mu = self.mu(i, lambda);
            let p = self.c / mu - self.base[i];
            let mag = self.c / mu + self.base[i];
            for (k, row) in self.rows.iter().enumerate() {
                let w = row.weights.at(i);
                r[k] += w * p;
                scale[k] += w * mag;
            }
        }
        for (k, row) in self.rows.iter().enumerate() {
            r[k] -= row.cap;
            scale[k] += row.cap;
        }
        (r, scale)
    }

    fn objective(&self, lambda: &[f64]) -> f64 {
        let mut phi = 0.0;
        for &i in self.active {
            phi += self.c * self.mu(i, lambda).ln();
        }
        for (k, row) in self.rows.iter().enumerate() {
            let s: f64 = self
                .active
                .iter()
                .map(|&i| row.weights.at(i) * self.base[i])
                .sum();
            phi -= lambda[k] * (row.cap + s);
        }
        phi
    }

    /// Hessian of Φ, negative semidefinite.
    fn hessian(&self, lambda: &[f64]) -> Vec<Vec<f64>> {
        let m = self.rows.len();
        let mut h = vec![vec![0.0; m]; m];
        for &i in self.active {
            let mu = self.mu(i, lambda);
            let curv = self.c / (mu * mu);
            for a in 0..m {
                let wa = self.rows[a].weights.at(i);
                if wa == 0.0 {
                    continue;
                }
                for b in 0..m {
                    h[a][b] -= wa * self.rows[b].weights.at(i) * curv;
                }
            }
        }
        h
    }

    /// Each violated row's multiplier as if it bound alone, with
    /// `μ_i ≈ w_i·λ` on the row's support; exact for the unit row.
    fn initial_guess(&self) -> Vec<f64> {
        let (r, _) = self.residuals(&vec![0.0; self.rows.len()]);
        self.rows
            .iter()
            .zip(&r)
            .map(|(row, rk)| {
                if *rk <= 0.0 {
                    return 0.0;
                }
                let (mut count, mut offset) = (0.0, row.cap);
                for &i in self.active {
                    let w = row.weights.at(i);
                    if w > 0.0 {
                        count += 1.0;
                        offset += w * self.base[i];
                    }
                }
                let guess = count * self.c / offset;
                match row.weights {
                    RowWeights::Unit => (guess - self.alpha).max(0.0),
                    RowWeights::Aci(_) => guess,
                }
            })
            .collect()
    }

    fn converged(&self, lambda: &[f64], r: &[f64], scale: &[f64]) -> bool {
        lambda.iter().zip(r).zip(scale).all(|((l, rk), s)| {
            let tol = RESIDUAL_TOL * s.max(f64::MIN_POSITIVE);
            if *l > 0.0 {
                rk.abs() <= tol
            } else {
                *rk <= tol
            }
        })
    }
}

/// Closed-form total-power multiplier on a known active set. Negative values
/// mean the cap is slack for that set.
pub(crate) fn total_power_multiplier(
    alpha: f64,
    c: f64,
    base_sum: f64,
    count: usize,
    cap: f64,
) -> Result<f64> {
    let denominator = cap + base_sum;
    if !(denominator > 0.0) {
        return Err(Error::CapIncompatible { denominator });
    }
    Ok(count as f64 * c / denominator - alpha)
}

/// Maximizes Φ over `λ ≥ 0` from `start` (missing entries start at zero):
/// projected Newton with Armijo backtracking, then cyclic one-dimensional
/// bisection if Newton stalls.
pub(crate) fn solve_from(problem: &DualProblem<'_>, start: &[f64]) -> Result<Vec<f64>> {
    let m = problem.rows.len();
    if m == 0 || problem.active.is_empty() {
        return Ok(vec![0.0; m]);
    }
    let mut lambda: Vec<f64> = (0..m)
        .map(|k| start.get(k).copied().unwrap_or(0.0).max(0.0))
        .collect();
    if start.is_empty() {
        lambda = problem.initial_guess();
    }

    for _ in 0..MAX_NEWTON_ITERS {
        let (r, scale) = problem.residuals(&lambda);
        if problem.converged(&lambda, &r, &scale) {
            return Ok(lambda);
        }
        // rows pinned at the bound with an outward gradient stay at zero
        let free: Vec<usize> = (0..m).filter(|&k| lambda[k] > 0.0 || r[k] > 0.0).collect();
        if free.is_empty() {
            return Ok(lambda);
        }
        let h = problem.hessian(&lambda);
        // ACI weights sit many decades below the unit power row; Jacobi
        // scaling keeps the pivots comparable
        let free: Vec<usize> = free.into_iter().filter(|&k| h[k][k] < 0.0).collect();
        if free.is_empty() {
            break;
        }
        let d: Vec<f64> = free.iter().map(|&k| (-h[k][k]).sqrt()).collect();
        let sub: Vec<Vec<f64>> = free
            .iter()
            .zip(&d)
            .map(|(&a, da)| {
                free.iter()
                    .zip(&d)
                    .map(|(&b, db)| -h[a][b] / (da * db))
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = free.iter().zip(&d).map(|(&a, da)| r[a] / da).collect();
        // fewer active subcarriers than rows leaves the Hessian singular;
        // a diagonal step is still an ascent direction
        let step = solve_dense(sub, rhs.clone()).unwrap_or(rhs);
        let mut direction = vec![0.0; m];
        for (slot, &k) in free.iter().enumerate() {
            direction[k] = step[slot] / d[slot];
        }

        let phi0 = problem.objective(&lambda);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = lambda
                .iter()
                .zip(&direction)
                .map(|(l, d)| (l + t * d).max(0.0))
                .collect();
            let gain: f64 = r
                .iter()
                .zip(trial.iter().zip(&lambda))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let phi = problem.objective(&trial);
            let slack = 1e-14 * phi0.abs().max(1.0);
            if phi >= phi0 + ARMIJO * gain - slack {
                lambda = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    coordinate_bisection(problem, lambda)
}

/// Cyclic exact maximization along each coordinate. `R_k` is strictly
/// decreasing in `λ_k`, so each coordinate step is a bracketed bisection.
fn coordinate_bisection(problem: &DualProblem<'_>, mut lambda: Vec<f64>) -> Result<Vec<f64>> {
    let m = problem.rows.len();
    for _ in 0..MAX_SWEEPS {
        let (r, scale) = problem.residuals(&lambda);
        if problem.converged(&lambda, &r, &scale) {
            return Ok(lambda);
        }
        for k in 0..m {
            let resid_at = |v: f64, lambda: &mut Vec<f64>| {
                let keep = lambda[k];
                lambda[k] = v;
                let (r, _) = problem.residuals(lambda);
                lambda[k] = keep;
                r[k]
            };
            if resid_at(0.0, &mut lambda) <= 0.0 {
                lambda[k] = 0.0;
                continue;
            }
            let mut lo = 0.0;
            let mut hi = lambda[k].max(1.0);
            let mut grow = 0;
            while resid_at(hi, &mut lambda) > 0.0 {
                lo = hi;
                hi *= 2.0;
                grow += 1;
                if grow > 2_000 || !hi.is_finite() {
                    let (r, _) = problem.residuals(&lambda);
                    return Err(Error::RootFinding { residual: r });
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if resid_at(mid, &mut lambda) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lambda[k] = 0.5 * (lo + hi);
        }
    }
    let (r, scale) = problem.residuals(&lambda);
    if problem.converged(&lambda, &r, &scale) {
        Ok(lambda)
    } else {
        Err(Error::RootFinding { residual: r })
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
/// `None` when the matrix is numerically singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * norm {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for j in col..n {
                    a[row][j] -= f * a[col][j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row][j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
