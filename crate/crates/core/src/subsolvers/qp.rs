//! Dual quadratic programs of the form
//!
//! ```text
//! min ½ αᵀQα − pᵀα   s.t.  yᵀα = 0,  lo ≤ α ≤ hi,   Q_ij = y_i y_j K_ij
//! ```
//!
//! solved by pairwise (SMO) updates with second-order working-set selection, followed by
//! an active-set polish that solves the KKT system on the free variables so the returned
//! point is accurate to rounding rather than to the SMO stopping tolerance.

use nalgebra::{DMatrix, DVector};

use super::kernel::KernelMatrix;
use crate::error::{AidError, Result};

pub struct BoxQp<'a> {
    pub kernel: &'a dyn KernelMatrix,
    pub y: &'a [f64],
    pub lo: &'a [f64],
    pub hi: &'a [f64],
    pub p: &'a [f64],
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// Stop when the maximal KKT violation `max_up(−y G) − min_low(−y G)` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Column cache budget, in matrix entries.
    pub cache_entries: usize,
    pub polish: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { tolerance: 1e-9, max_iterations: 10_000_000, cache_entries: 1 << 25, polish: true }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    /// `Qα − p`, recomputed from scratch at the end.
    pub gradient: Vec<f64>,
    /// Multiplier of the equality constraint; the SVM bias.
    pub bias: f64,
    /// Whether `bias` is pinned by at least one free variable.
    pub has_free: bool,
    pub violation: f64,
    pub iterations: usize,
}

const TAU: f64 = 1e-12;

pub fn solve_box_qp(qp: &BoxQp<'_>, opts: &QpOptions) -> Result<QpSolution> {
    let n = qp.kernel.size();
    if qp.y.len() != n || qp.lo.len() != n || qp.hi.len() != n || qp.p.len() != n {
        return Err(AidError::InvalidInput("dual QP dimensions are inconsistent".into()));
    }
    for t in 0..n {
        if !(qp.lo[t] <= 0.0 && 0.0 <= qp.hi[t]) {
            return Err(AidError::InvalidInput("dual QP bounds must contain zero".into()));
        }
    }
    let mut s = Smo::new(qp, opts);
    s.run()?;
    if opts.polish {
        s.polish();
    }
    Ok(s.finish())
}

struct ColumnCache {
    cols: Vec<Option<Vec<f64>>>,
    stamp: Vec<u64>,
    clock: u64,
    held: usize,
    budget: usize,
}

impl ColumnCache {
    fn new(n: usize, budget_entries: usize) -> Self {
        ColumnCache {
            cols: vec![None; n],
            stamp: vec![0; n],
            clock: 0,
            held: 0,
            budget: (budget_entries / n.max(1)).max(2),
        }
    }

    fn get(&mut self, kernel: &dyn KernelMatrix, j: usize) -> &[f64] {
        self.clock += 1;
        self.stamp[j] = self.clock;
        if self.cols[j].is_none() {
            if self.held >= self.budget {
                let victim = (0..self.cols.len())
                    .filter(|&c| c != j && self.cols[c].is_some())
                    .min_by_key(|&c| self.stamp[c])
                    .expect("cache holds at least one column");
                self.cols[victim] = None;
                self.held -= 1;
            }
            let mut col = vec![0.0; self.cols.len()];
            kernel.column(j, &mut col);
            self.cols[j] = Some(col);
            self.held += 1;
        }
        self.cols[j].as_deref().unwrap()
    }
}

struct Smo<'a, 'q> {
    qp: &'q BoxQp<'a>,
    opts: &'q QpOptions,
    n: usize,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
    cache: ColumnCache,
    iterations: usize,
}

impl<'a, 'q> Smo<'a, 'q> {
    fn new(qp: &'q BoxQp<'a>, opts: &'q QpOptions) -> Self {
        let n = qp.kernel.size();
        Smo {
            qp,
            opts,
            n,
            alpha: vec![0.0; n],
            grad: qp.p.iter().map(|v| -v).collect(),
            diag: (0..n).map(|t| qp.kernel.diag(t)).collect(),
            cache: ColumnCache::new(n, opts.cache_entries),
            iterations: 0,
        }
    }

    #[inline]
    fn in_up(&self, t: usize) -> bool {
        if self.qp.y[t] > 0.0 {
            self.alpha[t] < self.qp.hi[t]
        } else {
            self.alpha[t] > self.qp.lo[t]
        }
    }

    #[inline]
    fn in_low(&self, t: usize) -> bool {
        if self.qp.y[t] > 0.0 {
            self.alpha[t] > self.qp.lo[t]
        } else {
            self.alpha[t] < self.qp.hi[t]
        }
    }

    /// `(max over up of −yG, argmax, min over low of −yG)`.
    fn extremes(&self) -> (f64, Option<usize>, f64) {
        let mut gmax = f64::NEG_INFINITY;
        let mut imax = None;
        let mut gmin = f64::INFINITY;
        for t in 0..self.n {
            let v = -self.qp.y[t] * self.grad[t];
            if self.in_up(t) && v > gmax {
                gmax = v;
                imax = Some(t);
            }
            if self.in_low(t) && v < gmin {
                gmin = v;
            }
        }
        (gmax, imax, gmin)
    }

    fn violation(&self) -> f64 {
        let (gmax, _, gmin) = self.extremes();
        if gmax.is_finite() && gmin.is_finite() {
            (gmax - gmin).max(0.0)
        } else {
            0.0
        }
    }

    fn run(&mut self) -> Result<()> {
        let y = self.qp.y;
        let mut qi = vec![0.0; self.n];
        let mut refreshes = 0;
        loop {
            let (gmax, imax, gmin) = self.extremes();
            let converged = match imax {
                None => true,
                Some(_) => !gmin.is_finite() || gmax - gmin <= self.opts.tolerance,
            };
            if converged {
                // Guard against drift in the incrementally maintained gradient.
                let before = self.grad.clone();
                self.recompute_gradient();
                let drift = before.iter().zip(&self.grad).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
                refreshes += 1;
                if drift <= 0.1 * self.opts.tolerance || refreshes > 5 || self.violation() <= self.opts.tolerance {
                    return Ok(());
                }
                continue;
            }
            let i = imax.unwrap();
            self.iterations += 1;
            if self.iterations > self.opts.max_iterations {
                return Err(AidError::NonConvergence { iterations: self.iterations, violation: gmax - gmin });
            }

            let ki = self.cache.get(self.qp.kernel, i);
            qi.copy_from_slice(ki);
            let kii = self.diag[i];

            let mut j = None;
            let mut best = f64::INFINITY;
            for t in 0..self.n {
                if !self.in_low(t) {
                    continue;
                }
                let v = -y[t] * self.grad[t];
                let b = gmax - v;
                if b <= 0.0 {
                    continue;
                }
                let mut a = kii + self.diag[t] - 2.0 * qi[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j = Some(t);
                }
            }
            let Some(j) = j else {
                return Ok(());
            };

            let b = gmax + y[j] * self.grad[j];
            let mut a = kii + self.diag[j] - 2.0 * qi[j];
            if a <= 0.0 {
                a = TAU;
            }
            // Move α_i by y_i·s and α_j by −y_j·s, which keeps yᵀα fixed.
            let room_i = if y[i] > 0.0 { self.qp.hi[i] - self.alpha[i] } else { self.alpha[i] - self.qp.lo[i] };
            let room_j = if y[j] > 0.0 { self.alpha[j] - self.qp.lo[j] } else { self.qp.hi[j] - self.alpha[j] };
            let s_opt = b / a;
            let s = s_opt.min(room_i).min(room_j);
            if !s.is_finite() {
                return Err(AidError::Numerical("dual QP is unbounded along a pair direction".into()));
            }
            let old_i = self.alpha[i];
            let old_j = self.alpha[j];
            self.alpha[i] = if s == room_i {
                if y[i] > 0.0 { self.qp.hi[i] } else { self.qp.lo[i] }
            } else {
                old_i + y[i] * s
            };
            self.alpha[j] = if s == room_j {
                if y[j] > 0.0 { self.qp.lo[j] } else { self.qp.hi[j] }
            } else {
                old_j - y[j] * s
            };
            let di = self.alpha[i] - old_i;
            let dj = self.alpha[j] - old_j;

            let kj = self.cache.get(self.qp.kernel, j);
            // Q_ti = y_t y_i K_ti
            let (ci, cj) = (y[i] * di, y[j] * dj);
            for t in 0..self.n {
                self.grad[t] += y[t] * (ci * qi[t] + cj * kj[t]);
            }
        }
    }

    fn recompute_gradient(&mut self) {
        let coef: Vec<f64> = self.alpha.iter().zip(self.qp.y).map(|(a, y)| a * y).collect();
        let s = self.qp.kernel.combine(&coef);
        for t in 0..self.n {
            self.grad[t] = self.qp.y[t] * s[t] - self.qp.p[t];
        }
    }

    fn is_free(&self, t: usize) -> bool {
        self.alpha[t] > self.qp.lo[t] && self.alpha[t] < self.qp.hi[t]
    }

    /// Solve the KKT conditions exactly on the current free set and keep the result if it
    /// stays inside the box and does not worsen the KKT violation.
    fn polish(&mut self) {
        let free: Vec<usize> = (0..self.n).filter(|&t| self.is_free(t)).collect();
        if free.is_empty() || free.len() > 2000 {
            return;
        }
        let f = free.len();
        let y = self.qp.y;
        let mut a = DMatrix::<f64>::zeros(f + 1, f + 1);
        for (r, &u) in free.iter().enumerate() {
            for (c, &v) in free.iter().enumerate().skip(r) {
                let q = y[u] * y[v] * self.qp.kernel.entry(u, v);
                a[(r, c)] = q;
                a[(c, r)] = q;
            }
            a[(r, f)] = y[u];
            a[(f, r)] = y[u];
        }
        let mut rhs = DVector::<f64>::zeros(f + 1);
        for (r, &u) in free.iter().enumerate() {
            rhs[r] = -self.grad[u];
        }
        rhs[f] = -self.alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>();

        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(delta) = svd.solve(&rhs, 1e-12 * smax.max(1e-300)) else {
            return;
        };

        let before_alpha = self.alpha.clone();
        let before_grad = self.grad.clone();
        let before_violation = self.violation();
        for (r, &u) in free.iter().enumerate() {
            let v = self.alpha[u] + delta[r];
            let (lo, hi) = (self.qp.lo[u], self.qp.hi[u]);
            let slack = 1e-13 * (1.0 + lo.abs().min(hi.abs()).min(v.abs()));
            if v < lo - slack || v > hi + slack {
                self.alpha = before_alpha;
                return;
            }
            self.alpha[u] = v.clamp(lo, hi);
        }
        self.recompute_gradient();
        let after = self.violation();
        if after > before_violation.max(1e-13) {
            self.alpha = before_alpha;
            self.grad = before_grad;
        }
    }

    fn bias(&self) -> (f64, bool) {
        let y = self.qp.y;
        let free: Vec<usize> = (0..self.n).filter(|&t| self.is_free(t)).collect();
        if !free.is_empty() {
            let b = free.iter().map(|&t| -y[t] * self.grad[t]).sum::<f64>() / free.len() as f64;
            return (b, true);
        }
        // Midpoint of the interval of multipliers consistent with the KKT conditions.
        let mut lb = f64::NEG_INFINITY;
        let mut ub = f64::INFINITY;
        for t in 0..self.n {
            let v = -y[t] * self.grad[t];
            let at_lo = self.alpha[t] <= self.qp.lo[t];
            if (at_lo && y[t] > 0.0) || (!at_lo && y[t] < 0.0) {
                lb = lb.max(v);
            } else {
                ub = ub.min(v);
            }
        }
        let b = match (lb.is_finite(), ub.is_finite()) {
            (true, true) => 0.5 * (lb + ub),
            (true, false) => lb,
            (false, true) => ub,
            (false, false) => 0.0,
        };
        (b, false)
    }

    fn finish(self) -> QpSolution {
        let violation = self.violation();
        let (bias, has_free) = self.bias();
        QpSolution { alpha: self.alpha, gradient: self.grad, bias, has_free, violation, iterations: self.iterations }
    }
}
