use serde::{Deserialize, Serialize};

use crate::error::{AidError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(AidError::InvalidInput(format!(
                "dense matrix of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(AidError::InvalidInput(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(cols: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indptr.is_empty() || indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return Err(AidError::InvalidInput("sparse row pointer is inconsistent".into()));
        }
        if indices.len() != values.len() {
            return Err(AidError::InvalidInput("sparse index and value arrays differ in length".into()));
        }
        for w in indptr.windows(2) {
            if w[1] < w[0] {
                return Err(AidError::InvalidInput("sparse row pointer decreases".into()));
            }
            let idx = &indices[w[0]..w[1]];
            if idx.windows(2).any(|p| p[1] <= p[0]) {
                return Err(AidError::InvalidInput("sparse indices must be strictly increasing".into()));
            }
            if idx.last().is_some_and(|&j| j >= cols) {
                return Err(AidError::InvalidInput("sparse index out of range".into()));
            }
        }
        Ok(SparseMatrix { rows: indptr.len() - 1, cols, indptr, indices, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let r = d.row_mut(i);
            for (&j, &v) in idx.iter().zip(val) {
                r[j] = v;
            }
        }
        d
    }
}

/// Feature rows of a dataset, dense or sparse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Dense(d) => d.rows(),
            Features::Sparse(s) => s.rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Features::Dense(d) => d.cols(),
            Features::Sparse(s) => s.cols(),
        }
    }

    /// Inner product of row `i` with a dense vector.
    #[inline]
    pub fn dot(&self, i: usize, v: &[f64]) -> f64 {
        match self {
            Features::Dense(d) => d.row(i).iter().zip(v).map(|(a, b)| a * b).sum(),
            Features::Sparse(s) => {
                let (idx, val) = s.row(i);
                idx.iter().zip(val).map(|(&j, &x)| x * v[j]).sum()
            }
        }
    }

    /// `out += scale * row_i`
    #[inline]
    pub fn add_row_scaled(&self, i: usize, scale: f64, out: &mut [f64]) {
        match self {
            Features::Dense(d) => {
                for (o, x) in out.iter_mut().zip(d.row(i)) {
                    *o += scale * x;
                }
            }
            Features::Sparse(s) => {
                let (idx, val) = s.row(i);
                for (&j, &x) in idx.iter().zip(val) {
                    out[j] += scale * x;
                }
            }
        }
    }

    /// Inner product of rows `i` and `j`.
    pub fn row_dot(&self, i: usize, j: usize) -> f64 {
        match self {
            Features::Dense(d) => d.row(i).iter().zip(d.row(j)).map(|(a, b)| a * b).sum(),
            Features::Sparse(s) => {
                let (ia, va) = s.row(i);
                let (ib, vb) = s.row(j);
                let (mut p, mut q, mut acc) = (0, 0, 0.0);
                while p < ia.len() && q < ib.len() {
                    match ia[p].cmp(&ib[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[p] * vb[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match self {
            Features::Dense(d) => d.row(i).to_vec(),
            Features::Sparse(s) => {
                let mut out = vec![0.0; s.cols()];
                let (idx, val) = s.row(i);
                for (&j, &x) in idx.iter().zip(val) {
                    out[j] = x;
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Features::Dense(d) => d.clone(),
            Features::Sparse(s) => s.to_dense(),
        }
    }

    /// Squared Euclidean distance between row `i` and a dense point.
    pub fn sq_dist(&self, i: usize, p: &[f64]) -> f64 {
        match self {
            Features::Dense(d) => d.row(i).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum(),
            Features::Sparse(_) => {
                let pn: f64 = p.iter().map(|x| x * x).sum();
                (self.row_dot(i, i) - 2.0 * self.dot(i, p) + pn).max(0.0)
            }
        }
    }

    /// Arithmetic mean of the given rows.
    pub fn mean_of(&self, members: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_cols()];
        for &i in members {
            self.add_row_scaled(i, 1.0, &mut c);
        }
        let inv = 1.0 / members.len() as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Copy with an all-ones column appended.
    pub fn with_intercept(&self) -> Features {
        match self {
            Features::Dense(d) => {
                let m = d.cols() + 1;
                let mut data = Vec::with_capacity(d.rows() * m);
                for i in 0..d.rows() {
                    data.extend_from_slice(d.row(i));
                    data.push(1.0);
                }
                Features::Dense(DenseMatrix { rows: d.rows(), cols: m, data })
            }
            Features::Sparse(s) => {
                let mut indptr = vec![0];
                let mut indices = Vec::with_capacity(s.indices.len() + s.rows());
                let mut values = Vec::with_capacity(s.values.len() + s.rows());
                for i in 0..s.rows() {
                    let (idx, val) = s.row(i);
                    indices.extend_from_slice(idx);
                    values.extend_from_slice(val);
                    indices.push(s.cols());
                    values.push(1.0);
                    indptr.push(indices.len());
                }
                Features::Sparse(SparseMatrix { rows: s.rows(), cols: s.cols() + 1, indptr, indices, values })
            }
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        match self {
            Features::Dense(d) => d.data.iter().all(|v| v.is_finite()),
            Features::Sparse(s) => s.values.iter().all(|v| v.is_finite()),
        }
    }
}

/// Response or label vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Real-valued response (regression).
    Response(Vec<f64>),
    /// Class labels in {-1, +1}.
    Labels(Vec<f64>),
    /// Class labels where `None` marks an unlabeled entry.
    Partial(Vec<Option<f64>>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Response(v) | Target::Labels(v) => v.len(),
            Target::Partial(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Features,
    pub target: Target,
    /// Whether the last feature column is an appended all-ones column.
    pub intercept: bool,
}

impl Dataset {
    pub fn new(features: Features, target: Target) -> Result<Self> {
        if features.n_rows() != target.len() {
            return Err(AidError::InvalidInput(format!(
                "{} feature rows but {} targets",
                features.n_rows(),
                target.len()
            )));
        }
        if !features.all_finite() {
            return Err(AidError::InvalidInput("feature values must be finite".into()));
        }
        match &target {
            Target::Response(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(AidError::InvalidInput("response values must be finite".into()));
                }
            }
            Target::Labels(y) => check_labels(y.iter().copied())?,
            Target::Partial(y) => check_labels(y.iter().flatten().copied())?,
        }
        Ok(Dataset { features, target, intercept: false })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn m(&self) -> usize {
        self.features.n_cols()
    }

    /// Append an all-ones column. No-op when one is already present.
    pub fn with_intercept(mut self) -> Self {
        if !self.intercept {
            self.features = self.features.with_intercept();
            self.intercept = true;
        }
        self
    }

    pub fn response(&self) -> Result<&[f64]> {
        match &self.target {
            Target::Response(y) => Ok(y),
            _ => Err(AidError::InvalidInput("dataset has no real-valued response".into())),
        }
    }

    pub fn labels(&self) -> Result<&[f64]> {
        match &self.target {
            Target::Labels(y) => Ok(y),
            _ => Err(AidError::InvalidInput("dataset is not fully labeled".into())),
        }
    }

    pub fn partial_labels(&self) -> Result<&[Option<f64>]> {
        match &self.target {
            Target::Partial(y) => Ok(y),
            _ => Err(AidError::InvalidInput("dataset has no unlabeled entries marker".into())),
        }
    }
}

fn check_labels(mut labels: impl Iterator<Item = f64>) -> Result<()> {
    if labels.all(|v| v == 1.0 || v == -1.0) {
        Ok(())
    } else {
        Err(AidError::InvalidInput("labels must be -1 or +1".into()))
    }
}
