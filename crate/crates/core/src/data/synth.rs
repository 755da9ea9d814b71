use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DenseMatrix, Features, Target};
use super::rng::{self, STREAM_FEATURES, STREAM_GEOMETRY, STREAM_MASK, STREAM_RESPONSE};
use crate::error::{AidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lad,
    Svm,
    S3vm,
}

/// Parameters of a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub m: usize,
    /// Laplace scale of the regression noise.
    pub noise_scale: f64,
    /// Distance between the two class means.
    pub separation: f64,
    /// Share of entries that keep their label (semi-supervised only).
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn lad(n: usize, m: usize, seed: u64) -> Self {
        SyntheticSpec { kind: ProblemKind::Lad, n, m, noise_scale: 1.0, separation: 0.0, labeled_fraction: 1.0, seed }
    }

    pub fn svm(n: usize, m: usize, seed: u64) -> Self {
        SyntheticSpec { kind: ProblemKind::Svm, n, m, noise_scale: 0.0, separation: 2.0, labeled_fraction: 1.0, seed }
    }

    pub fn s3vm(n: usize, m: usize, labeled_fraction: f64, seed: u64) -> Self {
        SyntheticSpec { kind: ProblemKind::S3vm, n, m, noise_scale: 0.0, separation: 2.0, labeled_fraction, seed }
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    match spec.kind {
        ProblemKind::Lad => generate_lad(spec),
        ProblemKind::Svm => generate_svm(spec),
        ProblemKind::S3vm => generate_s3vm(spec),
    }
}

fn gaussian_matrix(n: usize, m: usize, seed: u64) -> DenseMatrix {
    let mut r = rng::stream(seed, STREAM_FEATURES);
    let data: Vec<f64> = (0..n * m).map(|_| StandardNormal.sample(&mut r)).collect();
    DenseMatrix::new(n, m, data).expect("sized above")
}

/// Standard normal features, standard normal true coefficients and Laplace noise.
pub fn generate_lad(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n <= spec.m || spec.m == 0 {
        return Err(AidError::Config(format!("LAD instances need n > m >= 1 (n = {}, m = {})", spec.n, spec.m)));
    }
    if !(spec.noise_scale >= 0.0) {
        return Err(AidError::Config("noise scale must be nonnegative".into()));
    }
    let x = gaussian_matrix(spec.n, spec.m, spec.seed);
    let mut g = rng::stream(spec.seed, STREAM_GEOMETRY);
    let beta: Vec<f64> = (0..spec.m).map(|_| StandardNormal.sample(&mut g)).collect();
    let mut r = rng::stream(spec.seed, STREAM_RESPONSE);
    let y: Vec<f64> = (0..spec.n)
        .map(|i| {
            let signal: f64 = x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
            signal + laplace(&mut r, spec.noise_scale)
        })
        .collect();
    Dataset::new(Features::Dense(x), Target::Response(y))
}

fn laplace<R: Rng>(r: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = r.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn blobs(spec: &SyntheticSpec) -> Result<(DenseMatrix, Vec<f64>)> {
    if spec.n < 2 || spec.m == 0 {
        return Err(AidError::Config("classification instances need n >= 2 and m >= 1".into()));
    }
    // Balanced labels in a seeded order.
    let mut labels: Vec<f64> = (0..spec.n).map(|i| if i < spec.n.div_ceil(2) { 1.0 } else { -1.0 }).collect();
    let mut r = rng::stream(spec.seed, STREAM_RESPONSE);
    labels.shuffle(&mut r);

    let mut g = rng::stream(spec.seed, STREAM_GEOMETRY);
    let mut dir: Vec<f64> = (0..spec.m).map(|_| StandardNormal.sample(&mut g)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    dir.iter_mut().for_each(|v| *v /= norm);

    let mut x = gaussian_matrix(spec.n, spec.m, spec.seed);
    for (i, &y) in labels.iter().enumerate() {
        for (v, d) in x.row_mut(i).iter_mut().zip(&dir) {
            *v += y * 0.5 * spec.separation * d;
        }
    }
    Ok((x, labels))
}

/// Two unit-variance Gaussian blobs whose means are `separation` apart.
pub fn generate_svm(spec: &SyntheticSpec) -> Result<Dataset> {
    let (x, y) = blobs(spec)?;
    Dataset::new(Features::Dense(x), Target::Labels(y))
}

/// Blobs as in [`generate_svm`] with all but `round(labeled_fraction · n)` labels removed.
/// At least one entry of each class stays labeled.
pub fn generate_s3vm(spec: &SyntheticSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&spec.labeled_fraction) {
        return Err(AidError::Config("labeled fraction must lie in [0, 1]".into()));
    }
    let (x, y) = blobs(spec)?;
    let n = spec.n;
    let keep = ((spec.labeled_fraction * n as f64).round() as usize).clamp(2, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, STREAM_MASK));
    let mut labeled = vec![false; n];
    // First one of each class, then fill in seeded order.
    for class in [1.0, -1.0] {
        if let Some(&i) = order.iter().find(|&&i| y[i] == class) {
            labeled[i] = true;
        }
    }
    let mut count = labeled.iter().filter(|&&l| l).count();
    for &i in &order {
        if count >= keep {
            break;
        }
        if !labeled[i] {
            labeled[i] = true;
            count += 1;
        }
    }
    let target = Target::Partial(y.iter().zip(&labeled).map(|(&v, &l)| l.then_some(v)).collect());
    Dataset::new(Features::Dense(x), target)
}
