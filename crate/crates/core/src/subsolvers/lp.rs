//! Weighted least-absolute-deviation fits by linear programming.
//!
//! The primal LP `min Σ w_k (u_k + v_k)  s.t.  X β + u − v = y,  u, v ≥ 0` has `k` rows,
//! which is the large dimension. We instead run a bounded-variable primal simplex on its
//! dual
//!
//! ```text
//! max  yᵀλ   s.t.  Xᵀλ = 0,   −w ≤ λ ≤ w
//! ```
//!
//! whose basis is only `m × m`. The negated simplex multipliers of the `m` equality rows are
//! the regression coefficients, and the reduced cost of `λ_k` is minus the residual of row
//! `k`, so dual optimality of the simplex is exactly the sign condition of a LAD optimum.
//! Basic rows are interpolated (zero residual).

use nalgebra::{DMatrix, DVector};

use crate::data::DenseMatrix;
use crate::error::{AidError, Result};

#[derive(Debug, Clone, Copy)]
pub struct WeightedLadInstance<'a> {
    pub x: &'a DenseMatrix,
    pub y: &'a [f64],
    pub weights: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadSolution {
    pub beta: Vec<f64>,
    /// `Σ w_k |y_k − x_k·β|` evaluated at `beta`.
    pub objective: f64,
    /// `yᵀλ` at the final basis; equals `objective` up to rounding.
    pub dual_objective: f64,
    pub iterations: usize,
}

/// Solve `min_β Σ_k w_k |y_k − x_k·β|` exactly.
pub fn solve_weighted_lad(inst: &WeightedLadInstance<'_>) -> Result<LadSolution> {
    let k = inst.x.rows();
    let m = inst.x.cols();
    if k == 0 {
        return Err(AidError::InvalidInput("weighted LAD needs at least one row".into()));
    }
    if inst.y.len() != k || inst.weights.len() != k {
        return Err(AidError::InvalidInput("weighted LAD dimensions are inconsistent".into()));
    }
    if inst.weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(AidError::InvalidInput("weighted LAD weights must be positive".into()));
    }
    if m == 0 {
        let objective = inst.y.iter().zip(inst.weights).map(|(y, w)| w * y.abs()).sum();
        return Ok(LadSolution { beta: vec![], objective, dual_objective: objective, iterations: 0 });
    }
    let mut s = Simplex::new(inst);
    s.run()?;
    let beta = s.multipliers()?;
    let objective = lad_objective(inst.x, inst.y, inst.weights, &beta);
    let dual_objective = (0..k).map(|j| inst.y[j] * s.value[j]).sum();
    Ok(LadSolution { beta, objective, dual_objective, iterations: s.iterations })
}

/// `Σ_k w_k |y_k − x_k·β|`.
pub fn lad_objective(x: &DenseMatrix, y: &[f64], w: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|j| w[j] * (y[j] - dot(x.row(j), beta)).abs())
        .sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const DEGENERATE_BEFORE_BLAND: usize = 50;

struct Simplex<'a> {
    x: &'a DenseMatrix,
    y: &'a [f64],
    k: usize,
    m: usize,
    /// Sign of each artificial column `σ_i e_i`.
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
    bland: bool,
    degenerate_run: usize,
    scale: f64,
}

enum Step {
    Optimal,
    Moved,
}

impl<'a> Simplex<'a> {
    fn new(inst: &WeightedLadInstance<'a>) -> Self {
        let (x, y, w) = (inst.x, inst.y, inst.weights);
        let (k, m) = (x.rows(), x.cols());
        let n_var = k + m;
        let mut lo = vec![0.0; n_var];
        let mut hi = vec![f64::INFINITY; n_var];
        let mut value = vec![0.0; n_var];

        // Start every λ_k at the bound matching the sign of an initial residual.
        let start = least_squares_start(x, y, w);
        for j in 0..k {
            lo[j] = -w[j];
            hi[j] = w[j];
            let r = y[j] - start.as_ref().map_or(0.0, |b| dot(x.row(j), b));
            value[j] = if r > 0.0 { w[j] } else { -w[j] };
        }
        let mut residual = vec![0.0; m];
        for j in 0..k {
            for (r, xv) in residual.iter_mut().zip(x.row(j)) {
                *r -= xv * value[j];
            }
        }
        let art_sign: Vec<f64> = residual.iter().map(|&r| if r < 0.0 { -1.0 } else { 1.0 }).collect();
        for i in 0..m {
            value[k + i] = residual[i].abs();
        }
        let mut is_basic = vec![false; n_var];
        let basis: Vec<usize> = (k..k + m).collect();
        for &b in &basis {
            is_basic[b] = true;
        }
        let scale = 1.0
            + (0..k)
                .map(|j| w[j] * x.row(j).iter().fold(0.0f64, |a, v| a.max(v.abs())))
                .sum::<f64>();
        let mut cost = vec![0.0; n_var];
        cost[k..].iter_mut().for_each(|c| *c = 1.0);
        Simplex {
            x,
            y,
            k,
            m,
            art_sign,
            lo,
            hi,
            cost,
            value,
            basis,
            is_basic,
            iterations: 0,
            max_iterations: 50 * (k + m) + 10_000,
            bland: false,
            degenerate_run: 0,
            scale,
        }
    }

    fn column(&self, v: usize) -> DVector<f64> {
        if v < self.k {
            DVector::from_row_slice(self.x.row(v))
        } else {
            let mut c = DVector::zeros(self.m);
            c[v - self.k] = self.art_sign[v - self.k];
            c
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.m, self.m);
        for (r, &v) in self.basis.iter().enumerate() {
            b.set_column(r, &self.column(v));
        }
        b
    }

    fn run(&mut self) -> Result<()> {
        // Phase 1: drive the artificials to zero.
        loop {
            let infeas: f64 = self.value[self.k..].iter().zip(&self.is_basic[self.k..]).filter(|(_, &b)| b).map(|(v, _)| v.abs()).sum();
            if infeas <= 1e-12 * self.scale {
                break;
            }
            match self.iterate()? {
                Step::Optimal => {
                    let infeas: f64 = self.value[self.k..].iter().map(|v| v.abs()).sum();
                    if infeas > 1e-9 * self.scale {
                        return Err(AidError::Numerical(format!(
                            "LAD simplex phase 1 stalled with infeasibility {infeas:.3e}"
                        )));
                    }
                    break;
                }
                Step::Moved => {}
            }
        }

        // Artificials are fixed at zero from now on; pivot basic ones out where possible.
        for i in 0..self.m {
            let v = self.k + i;
            self.lo[v] = 0.0;
            self.hi[v] = 0.0;
            self.cost[v] = 0.0;
            if !self.is_basic[v] {
                self.value[v] = 0.0;
            }
        }
        self.drive_out_artificials()?;
        for j in 0..self.k {
            self.cost[j] = -self.y[j];
        }
        self.bland = false;
        self.degenerate_run = 0;

        // Phase 2.
        while let Step::Moved = self.iterate()? {}
        Ok(())
    }

    fn drive_out_artificials(&mut self) -> Result<()> {
        for r in 0..self.m {
            if self.basis[r] < self.k {
                continue;
            }
            let bt = self.basis_matrix().transpose().lu();
            let mut e = DVector::zeros(self.m);
            e[r] = 1.0;
            let z = bt.solve(&e).ok_or_else(|| AidError::Numerical("singular simplex basis".into()))?;
            let mut best = None;
            let mut best_abs = 0.0;
            for j in 0..self.k {
                if self.is_basic[j] {
                    continue;
                }
                let row = self.x.row(j);
                let rho: f64 = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                let norm = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if rho.abs() > 1e-7 * norm.max(1e-300) && rho.abs() > best_abs {
                    best_abs = rho.abs();
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let leaving = self.basis[r];
                self.is_basic[leaving] = false;
                self.value[leaving] = 0.0;
                self.basis[r] = j;
                self.is_basic[j] = true;
            }
            // Otherwise the row is redundant (rank-deficient X); the artificial stays basic at 0.
        }
        self.refresh_basics()?;
        Ok(())
    }

    /// Recompute basic values from the nonbasic ones: `B x_B = −N x_N`.
    fn refresh_basics(&mut self) -> Result<()> {
        let lu = self.basis_matrix().lu();
        let mut rhs = DVector::zeros(self.m);
        for j in 0..self.k {
            if !self.is_basic[j] && self.value[j] != 0.0 {
                let v = self.value[j];
                for (r, xv) in rhs.iter_mut().zip(self.x.row(j)) {
                    *r -= xv * v;
                }
            }
        }
        for i in 0..self.m {
            let v = self.k + i;
            if !self.is_basic[v] {
                rhs[i] -= self.art_sign[i] * self.value[v];
            }
        }
        let xb = lu.solve(&rhs).ok_or_else(|| AidError::Numerical("singular simplex basis".into()))?;
        for (r, &v) in self.basis.iter().enumerate() {
            self.value[v] = xb[r];
        }
        Ok(())
    }

    fn multipliers_vec(&self) -> Result<DVector<f64>> {
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&v| self.cost[v]));
        self.basis_matrix()
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or_else(|| AidError::Numerical("singular simplex basis".into()))
    }

    /// Phase-2 costs are `−y`, so the coefficients are the negated multipliers.
    fn multipliers(&self) -> Result<Vec<f64>> {
        Ok(self.multipliers_vec()?.iter().map(|v| -v).collect())
    }

    fn iterate(&mut self) -> Result<Step> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(AidError::NonConvergence { iterations: self.iterations, violation: f64::NAN });
        }
        self.refresh_basics()?;
        let pi = self.multipliers_vec()?;

        // Pricing.
        let mut entering: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for v in 0..self.k + self.m {
            if self.is_basic[v] || self.hi[v] <= self.lo[v] {
                continue;
            }
            let api = if v < self.k {
                dot(self.x.row(v), pi.as_slice())
            } else {
                self.art_sign[v - self.k] * pi[v - self.k]
            };
            let d = self.cost[v] - api;
            let tol = COST_TOL * (1.0 + self.cost[v].abs() + api.abs());
            let at_upper = self.value[v] >= self.hi[v];
            let improving = if at_upper { d > tol } else { d < -tol };
            if !improving {
                continue;
            }
            if self.bland {
                entering = Some((v, d));
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = Some((v, d));
            }
        }
        let Some((q, d)) = entering else {
            return Ok(Step::Optimal);
        };
        let dir = if d < 0.0 { 1.0 } else { -1.0 };

        let alpha = self
            .basis_matrix()
            .lu()
            .solve(&self.column(q))
            .ok_or_else(|| AidError::Numerical("singular simplex basis".into()))?;
        let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let piv_tol = PIVOT_TOL * amax.max(1.0);

        let mut t_best = self.hi[q] - self.lo[q];
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_key = 0.0;
        for r in 0..self.m {
            let v = self.basis[r];
            let a = dir * alpha[r];
            let (limit, to_upper) = if a > piv_tol {
                ((self.value[v] - self.lo[v]) / a, false)
            } else if a < -piv_tol {
                if self.hi[v].is_infinite() {
                    continue;
                }
                ((self.hi[v] - self.value[v]) / -a, true)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let tie_tol = 1e-12 * (1.0 + t_best.abs().min(limit));
            let key = if self.bland { -(v as f64) } else { a.abs() };
            if limit < t_best - tie_tol {
                t_best = limit;
                leave = Some((r, to_upper));
                leave_key = key;
            } else if limit <= t_best + tie_tol && leave.is_some() && key > leave_key {
                // Ties with a bound flip keep the flip; ties between rows prefer the larger pivot.
                t_best = t_best.min(limit);
                leave = Some((r, to_upper));
                leave_key = key;
            }
        }
        if t_best.is_infinite() {
            return Err(AidError::Numerical("LAD simplex found an unbounded ray".into()));
        }

        if t_best <= 1e-14 * self.scale {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_BEFORE_BLAND {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        match leave {
            None => {
                // Bound flip of the entering variable.
                self.value[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            }
            Some((r, to_upper)) => {
                let v = self.basis[r];
                self.value[q] += dir * t_best;
                self.value[v] = if to_upper { self.hi[v] } else { self.lo[v] };
                if v >= self.k {
                    self.lo[v] = 0.0;
                    self.hi[v] = 0.0;
                    self.value[v] = 0.0;
                }
                self.is_basic[v] = false;
                self.is_basic[q] = true;
                self.basis[r] = q;
            }
        }
        Ok(Step::Moved)
    }
}

/// Weighted least-squares coefficients used only to pick a starting sign pattern.
fn least_squares_start(x: &DenseMatrix, y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let m = x.cols();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for j in 0..x.rows() {
        let r = x.row(j);
        for a in 0..m {
            rhs[a] += w[j] * r[a] * y[j];
            for b in 0..m {
                gram[(a, b)] += w[j] * r[a] * r[b];
            }
        }
    }
    let sol = gram.cholesky()?.solve(&rhs);
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weighted_median(y: &[f64], w: &[f64]) -> f64 {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let half = w.iter().sum::<f64>() / 2.0;
        let mut acc = 0.0;
        for &i in &idx {
            acc += w[i];
            if acc >= half {
                return y[i];
            }
        }
        unreachable!()
    }

    fn intercept_only(y: &[f64], w: &[f64]) -> LadSolution {
        let x = DenseMatrix::new(y.len(), 1, vec![1.0; y.len()]).unwrap();
        solve_weighted_lad(&WeightedLadInstance { x: &x, y, weights: w }).unwrap()
    }

    #[test]
    fn intercept_only_is_the_weighted_median() {
        let s = intercept_only(&[1.0, 2.0, 10.0], &[1.0, 1.0, 1.0]);
        assert!((s.beta[0] - 2.0).abs() < 1e-12);
        assert!((s.objective - 9.0).abs() < 1e-12);
        assert_eq!(weighted_median(&[1.0, 2.0, 10.0], &[1.0, 1.0, 1.0]), 2.0);

        let s = intercept_only(&[1.0, 2.0, 10.0], &[1.0, 1.0, 5.0]);
        assert!((s.beta[0] - 10.0).abs() < 1e-12);
        assert!((s.objective - 17.0).abs() < 1e-12);
        assert_eq!(weighted_median(&[1.0, 2.0, 10.0], &[1.0, 1.0, 5.0]), 10.0);
    }

    #[test]
    fn exact_fit_has_zero_objective() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64, (i * i) as f64 * 0.1]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 * r[0] - 2.0 * r[1] + 3.0 * r[2]).collect();
        let s = solve_weighted_lad(&WeightedLadInstance { x: &x, y: &y, weights: &[1.0; 8] }).unwrap();
        assert!(s.objective < 1e-9, "{}", s.objective);
    }

    #[test]
    fn rank_deficient_design_still_solves() {
        // Second column duplicates the first.
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, 1.0, i as f64]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y = [0.0, 1.5, 1.9, 3.2, 4.0, 4.8];
        let s = solve_weighted_lad(&WeightedLadInstance { x: &x, y: &y, weights: &[1.0; 6] }).unwrap();
        let x2 = DenseMatrix::from_rows(&rows.iter().map(|r| vec![r[0], r[2]]).collect::<Vec<_>>()).unwrap();
        let s2 = solve_weighted_lad(&WeightedLadInstance { x: &x2, y: &y, weights: &[1.0; 6] }).unwrap();
        assert!((s.objective - s2.objective).abs() < 1e-10);
    }

    #[test]
    fn primal_and_dual_objectives_agree() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, (i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..30).map(|i| ((i * 7919) % 31) as f64 / 7.0).collect();
        let w: Vec<f64> = (0..30).map(|i| 1.0 + (i % 4) as f64).collect();
        let s = solve_weighted_lad(&WeightedLadInstance { x: &x, y: &y, weights: &w }).unwrap();
        assert!((s.objective - s.dual_objective).abs() <= 1e-9 * (1.0 + s.objective));
    }
}
