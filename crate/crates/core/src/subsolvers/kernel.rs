use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Features;
use crate::error::{AidError, Result};

/// Kernel function choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelKind {
    pub fn eval(&self, features: &Features, i: usize, j: usize) -> f64 {
        match *self {
            KernelKind::Linear => features.row_dot(i, j),
            KernelKind::Rbf { gamma } => {
                let d = features.row_dot(i, i) + features.row_dot(j, j) - 2.0 * features.row_dot(i, j);
                (-gamma * d.max(0.0)).exp()
            }
        }
    }

    /// Kernel value between row `i` of `a` and row `j` of `b`.
    pub fn eval_cross(&self, a: &Features, i: usize, b: &Features, j: usize) -> f64 {
        let bj = b.dense_row(j);
        match *self {
            KernelKind::Linear => a.dot(i, &bj),
            KernelKind::Rbf { gamma } => (-gamma * a.sq_dist(i, &bj)).exp(),
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = AidError;

    /// Parses `linear` or `rbf:GAMMA`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(KernelKind::Linear);
        }
        if let Some(g) = s.strip_prefix("rbf:") {
            let gamma: f64 = g
                .parse()
                .map_err(|_| AidError::Config(format!("bad RBF gamma {g:?}")))?;
            if gamma > 0.0 && gamma.is_finite() {
                return Ok(KernelKind::Rbf { gamma });
            }
            return Err(AidError::Config("RBF gamma must be positive".into()));
        }
        Err(AidError::Config(format!("unknown kernel {s:?}; expected linear or rbf:GAMMA")))
    }
}

/// Symmetric positive semidefinite kernel matrix accessed by entry or column.
pub trait KernelMatrix: Sync {
    fn size(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j);
        }
    }

    /// `s_t = Σ_j coef_j K(t, j)` for every `t`.
    fn combine(&self, coef: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .into_par_iter()
            .map(|t| {
                coef.iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(j, c)| c * self.entry(t, j))
                    .sum()
            })
            .collect()
    }
}

/// Linear kernel over feature rows, never materialized.
pub struct LinearKernel<'a> {
    rows: &'a Features,
}

impl<'a> LinearKernel<'a> {
    pub fn new(rows: &'a Features) -> Self {
        LinearKernel { rows }
    }

    pub fn weight_vector(&self, coef: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.rows.n_cols()];
        for (j, &c) in coef.iter().enumerate() {
            if c != 0.0 {
                self.rows.add_row_scaled(j, c, &mut w);
            }
        }
        w
    }
}

impl KernelMatrix for LinearKernel<'_> {
    fn size(&self) -> usize {
        self.rows.n_rows()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows.row_dot(i, j)
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        let xj = self.rows.dense_row(j);
        out.par_iter_mut().enumerate().with_min_len(512).for_each(|(i, o)| *o = self.rows.dot(i, &xj));
    }

    fn combine(&self, coef: &[f64]) -> Vec<f64> {
        let w = self.weight_vector(coef);
        (0..self.size()).into_par_iter().with_min_len(512).map(|t| self.rows.dot(t, &w)).collect()
    }
}

/// Kernel over feature rows evaluated on demand.
pub struct FunctionKernel<'a> {
    rows: &'a Features,
    kind: KernelKind,
}

impl<'a> FunctionKernel<'a> {
    pub fn new(rows: &'a Features, kind: KernelKind) -> Self {
        FunctionKernel { rows, kind }
    }
}

impl KernelMatrix for FunctionKernel<'_> {
    fn size(&self) -> usize {
        self.rows.n_rows()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.kind.eval(self.rows, i, j)
    }
}

/// Dense symmetric kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Largest Gram matrix side we are willing to store.
pub const MAX_GRAM_SIZE: usize = 20_000;

impl GramMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(AidError::InvalidInput("Gram matrix must be square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                    return Err(AidError::InvalidInput(format!("Gram matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GramMatrix { n, data })
    }

    /// Kernel matrix of all rows of `features`.
    pub fn from_features(features: &Features, kind: KernelKind) -> Result<Self> {
        let n = features.n_rows();
        if n > MAX_GRAM_SIZE {
            return Err(AidError::InvalidInput(format!(
                "kernel path stores an n x n Gram matrix and supports n <= {MAX_GRAM_SIZE}, got n = {n}"
            )));
        }
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate().skip(i) {
                *v = kind.eval(features, i, j);
            }
        });
        for i in 0..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        Ok(GramMatrix { n, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl KernelMatrix for GramMatrix {
    fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(j));
    }

    fn combine(&self, coef: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|t| self.row(t).iter().zip(coef).map(|(k, c)| k * c).sum())
            .collect()
    }
}
