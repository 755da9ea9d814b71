//! Cluster partitions and the one-pass k-means initializers.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::rng::{self, STREAM_CLUSTER_SAMPLE};
use crate::data::{DenseMatrix, Features, ProblemKind};
use crate::error::{AidError, Result};
use crate::subsolvers::{
    solve_weighted_lad, solve_weighted_svm, FunctionKernel, KernelKind, SvmInput, WeightedLadInstance,
    WeightedSvmInstance,
};

/// Assignment of entries `0..n` to non-empty, disjoint clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
    generation: u64,
}

impl ClusterPartition {
    /// Build from per-entry labels. Cluster ids follow the order of the label values; labels
    /// with no entries are dropped.
    pub fn from_labels(labels: &[usize]) -> Self {
        let max = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); max];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        Self::from_groups_unchecked(labels.len(), groups)
    }

    fn from_groups_unchecked(n: usize, groups: Vec<Vec<usize>>) -> Self {
        let members: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        let mut assignment = vec![usize::MAX; n];
        for (k, g) in members.iter().enumerate() {
            for &i in g {
                assignment[i] = k;
            }
        }
        ClusterPartition { assignment, members, generation: 0 }
    }

    /// Build from explicit member lists, which must partition `0..n`.
    pub fn from_groups(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for g in &groups {
            for &i in g {
                if i >= n || seen[i] {
                    return Err(AidError::InvalidInput("groups do not partition the entries".into()));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(AidError::InvalidInput("groups do not cover every entry".into()));
        }
        let groups = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        Ok(Self::from_groups_unchecked(n, groups))
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_groups_unchecked(n, (0..n).map(|i| vec![i]).collect())
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.members.iter().map(|g| g.len() as f64).collect()
    }

    pub fn all_singletons(&self) -> bool {
        self.members.len() == self.assignment.len()
    }

    /// Replace cluster `k` by the non-empty `groups`, which must partition its members.
    /// The first non-empty group keeps id `k`; the others are appended.
    pub fn split_cluster(&mut self, k: usize, groups: Vec<Vec<usize>>) -> Result<()> {
        if k >= self.members.len() {
            return Err(AidError::InvalidInput(format!("no cluster {k}")));
        }
        let total: usize = groups.iter().map(Vec::len).sum();
        if total != self.members[k].len()
            || groups.iter().flatten().any(|&i| i >= self.n() || self.assignment[i] != k)
        {
            return Err(AidError::InvalidInput(format!("groups do not partition cluster {k}")));
        }
        let mut seen = std::collections::HashSet::with_capacity(total);
        if !groups.iter().flatten().all(|&i| seen.insert(i)) {
            return Err(AidError::InvalidInput(format!("groups overlap in cluster {k}")));
        }
        let mut nonempty = groups.into_iter().filter(|g| !g.is_empty()).map(|mut g| {
            g.sort_unstable();
            g
        });
        let first = nonempty.next().expect("cluster is non-empty");
        self.members[k] = first;
        for g in nonempty {
            let id = self.members.len();
            for &i in &g {
                self.assignment[i] = id;
            }
            self.members.push(g);
        }
        self.generation += 1;
        Ok(())
    }

    /// Check the partition invariants.
    pub fn validate(&self) -> Result<()> {
        let mut count = 0;
        for (k, g) in self.members.iter().enumerate() {
            if g.is_empty() {
                return Err(AidError::InvalidInput(format!("cluster {k} is empty")));
            }
            for &i in g {
                if self.assignment.get(i) != Some(&k) {
                    return Err(AidError::InvalidInput(format!("entry {i} is inconsistent with cluster {k}")));
                }
            }
            count += g.len();
        }
        if count != self.n() {
            return Err(AidError::InvalidInput("clusters do not cover every entry exactly once".into()));
        }
        Ok(())
    }
}

/// Centroid of every cluster. `rows[j]` maps local entry `j` to its feature row; `None`
/// means the identity.
pub fn centroids(x: &Features, clusters: &[Vec<usize>], rows: Option<&[usize]>) -> DenseMatrix {
    let m = x.n_cols();
    let data: Vec<f64> = clusters
        .par_iter()
        .flat_map_iter(|g| {
            let mut c = vec![0.0; m];
            for &j in g {
                x.add_row_scaled(rows.map_or(j, |r| r[j]), 1.0, &mut c);
            }
            let inv = 1.0 / g.len() as f64;
            c.into_iter().map(move |v| v * inv)
        })
        .collect();
    DenseMatrix::new(clusters.len(), m, data).expect("sized by construction")
}

/// Mean of `values` over each cluster.
pub fn cluster_means(values: &[f64], clusters: &[Vec<usize>]) -> Vec<f64> {
    clusters
        .iter()
        .map(|g| g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64)
        .collect()
}

/// Which initializer built a partition, recorded in run logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    LadResidual2d,
    SvmDistance1d,
    S3vmFeatureSpace,
}

/// Rows sampled to fit the model that drives an initializer.
pub fn sample_size(n: usize, m: usize) -> usize {
    (10 * m).max(200).min(n)
}

/// Initial aggregation rate for a problem of `n` entries and `m` features.
pub fn initial_rate(n: usize, m: usize, problem: ProblemKind) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    match problem {
        ProblemKind::Lad => {
            if mf * nf > 5e8 {
                (3.0 * mf / nf).max(0.0005)
            } else {
                (2.0 * mf / nf).max(0.0005)
            }
        }
        ProblemKind::Svm => (1.1 * mf / nf).max(0.0001),
        ProblemKind::S3vm => {
            if n <= 10_000 {
                0.01
            } else {
                0.0001
            }
        }
    }
}

/// Smallest admissible initial cluster count.
pub fn min_clusters(m: usize, problem: ProblemKind) -> usize {
    match problem {
        ProblemKind::Lad => m + 1,
        ProblemKind::Svm => 2,
        ProblemKind::S3vm => 10,
    }
}

/// `ceil(rate · n)`, guarding against rounding just above an integer.
pub fn clusters_for_rate(n: usize, rate: f64) -> usize {
    let raw = rate * n as f64;
    let r = raw.round();
    let k = if (raw - r).abs() <= 1e-9 * raw.max(1.0) { r } else { raw.ceil() };
    k.max(1.0) as usize
}

/// Initial cluster count `k0` from the default rate formulas, raised to the problem minimum
/// and capped at `n`.
pub fn initial_cluster_count(n: usize, m: usize, problem: ProblemKind) -> Result<usize> {
    if n == 0 || m == 0 {
        return Err(AidError::InvalidInput("need at least one entry and one feature".into()));
    }
    if problem == ProblemKind::Lad && n <= m {
        return Err(AidError::InvalidInput(format!("LAD needs n > m (n = {n}, m = {m})")));
    }
    let k = clusters_for_rate(n, initial_rate(n, m, problem)).max(min_clusters(m, problem));
    Ok(k.min(n))
}

/// Split `k` clusters over groups of the given sizes, proportionally with at least one per
/// non-empty group and at most the group size.
pub fn proportional_split(sizes: &[usize], k: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut out: Vec<usize> = sizes
        .iter()
        .map(|&s| if s == 0 { 0 } else { (k * s / total).clamp(1, s) })
        .collect();
    let mut assigned: usize = out.iter().sum();
    // Largest remainders first.
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = (k * sizes[a]) % total;
        let rb = (k * sizes[b]) % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    let mut cursor = 0;
    let mut idle = 0;
    while assigned < k && idle < order.len() {
        let g = order[cursor % order.len()];
        cursor += 1;
        if out[g] < sizes[g] {
            out[g] += 1;
            assigned += 1;
            idle = 0;
        } else {
            idle += 1;
        }
    }
    while assigned > k {
        let Some(g) = (0..sizes.len()).filter(|&g| out[g] > 1).max_by_key(|&g| out[g]) else {
            break;
        };
        out[g] -= 1;
        assigned -= 1;
    }
    out
}

/// Positions `floor((j + ½)·len/k)` of `k` quantile seeds in a sorted list of length `len`.
fn quantile_positions(len: usize, k: usize) -> Vec<usize> {
    (0..k).map(|j| (((2 * j + 1) * len) / (2 * k)).min(len - 1)).collect()
}

/// One k-means assignment step: each point goes to its nearest seed, ties to the lower seed.
pub fn assign_nearest(points: &[Vec<f64>], seeds: &[Vec<f64>]) -> Vec<usize> {
    points
        .par_iter()
        .with_min_len(256)
        .map(|p| nearest(p, seeds))
        .collect()
}

fn nearest(p: &[f64], seeds: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (s, seed) in seeds.iter().enumerate() {
        let d: f64 = p.iter().zip(seed).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = s;
        }
    }
    best
}

/// Nearest seed in 1-D for ascending `seeds`, ties to the lower seed.
fn nearest_sorted(v: f64, seeds: &[f64]) -> usize {
    let pos = seeds.partition_point(|&s| s < v);
    let mut best = pos.min(seeds.len() - 1);
    // Walk left over equal values so ties go to the lowest index.
    if pos > 0 {
        let left = pos - 1;
        if (v - seeds[left]).abs() <= (seeds[best] - v).abs() {
            best = left;
        }
    }
    while best > 0 && seeds[best - 1] == seeds[best] {
        best -= 1;
    }
    best
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

fn sample_indices(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, STREAM_CLUSTER_SAMPLE);
    let mut idx = index::sample(&mut r, n, size).into_vec();
    idx.sort_unstable();
    idx
}

fn dense_rows(x: &Features, idx: &[usize]) -> DenseMatrix {
    let m = x.n_cols();
    let mut data = Vec::with_capacity(idx.len() * m);
    for &i in idx {
        data.extend(x.dense_row(i));
    }
    DenseMatrix::new(idx.len(), m, data).expect("sized above")
}

fn full_column_rank(x: &DenseMatrix) -> bool {
    if x.rows() < x.cols() {
        return false;
    }
    let mat = nalgebra::DMatrix::from_row_slice(x.rows(), x.cols(), x.as_slice());
    let sv = mat.singular_values();
    let smax = sv.max();
    smax > 0.0 && sv.iter().all(|&s| s > 1e-10 * smax)
}

/// Initial clusters for LAD: fit on a sample, then one assignment step on the standardized
/// (residual, response) pairs with seeds at quantiles of their sum.
pub fn init_lad_clusters(x: &Features, y: &[f64], k0: usize, seed: u64) -> Result<ClusterPartition> {
    let n = x.n_rows();
    let m = x.n_cols();
    if y.len() != n {
        return Err(AidError::InvalidInput("response length differs from row count".into()));
    }
    if k0 <= m {
        return Err(AidError::Config(format!("LAD needs more than m = {m} initial clusters, got {k0}")));
    }
    let k0 = k0.min(n);
    let idx = sample_indices(n, sample_size(n, m), seed);
    let sx = dense_rows(x, &idx);
    if !full_column_rank(&sx) {
        return Ok(quantile_bins(y, k0));
    }
    let sy: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let fit = match solve_weighted_lad(&WeightedLadInstance { x: &sx, y: &sy, weights: &vec![1.0; idx.len()] }) {
        Ok(f) => f,
        Err(_) => return Ok(quantile_bins(y, k0)),
    };
    let r: Vec<f64> = (0..n).into_par_iter().map(|i| y[i] - x.dot(i, &fit.beta)).collect();

    let sd_y = std_dev(y);
    let sd_r = std_dev(&r);
    let scale_y = if sd_y > 0.0 { 1.0 / sd_y } else { 1.0 };
    // Residual spread at rounding level carries no information.
    let scale_r = if sd_r > 1e-9 * (1.0 + sd_y) { 1.0 / sd_r } else { 0.0 };
    let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![r[i] * scale_r, y[i] * scale_y]).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (pts[a][0] + pts[a][1]).total_cmp(&(pts[b][0] + pts[b][1])).then(a.cmp(&b)));
    let seeds: Vec<Vec<f64>> = quantile_positions(n, k0).into_iter().map(|q| pts[order[q]].clone()).collect();
    Ok(ClusterPartition::from_labels(&assign_nearest(&pts, &seeds)))
}

/// Equal-count bins of the response.
fn quantile_bins(y: &[f64], k: usize) -> ClusterPartition {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * k / n;
    }
    ClusterPartition::from_labels(&labels)
}

/// 1-D clustering of `values[members]` with `k` seeds at quantiles; returns groups of members.
fn cluster_1d(values: &[f64], members: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut sorted: Vec<f64> = members.iter().map(|&i| values[i]).collect();
    sorted.sort_by(f64::total_cmp);
    let seeds: Vec<f64> = quantile_positions(sorted.len(), k).into_iter().map(|q| sorted[q]).collect();
    let mut groups = vec![Vec::new(); k];
    for &i in members {
        groups[nearest_sorted(values[i], &seeds)].push(i);
    }
    groups
}

/// Initial clusters for SVM: fit on a sample, then cluster each class separately on the
/// decision value of the sample model. Clusters are label-pure.
pub fn init_svm_clusters(
    x: &Features,
    labels: &[f64],
    k0: usize,
    seed: u64,
    kernel: KernelKind,
    penalty: f64,
) -> Result<ClusterPartition> {
    let n = x.n_rows();
    if labels.len() != n {
        return Err(AidError::InvalidInput("label length differs from row count".into()));
    }
    let pos: Vec<usize> = (0..n).filter(|&i| labels[i] > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| labels[i] < 0.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(AidError::InvalidInput("SVM clustering needs both labels".into()));
    }
    if k0 < 2 {
        return Err(AidError::Config("SVM needs at least 2 initial clusters".into()));
    }

    let mut idx = sample_indices(n, sample_size(n, x.n_cols()), seed);
    for class in [&pos, &neg] {
        if !idx.iter().any(|i| class.binary_search(i).is_ok()) {
            idx.push(class[0]);
        }
    }
    idx.sort_unstable();
    let sample = Features::Dense(dense_rows(x, &idx));
    let sy: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
    let weights = vec![1.0; idx.len()];
    let decision: Vec<f64> = match kernel {
        KernelKind::Linear => {
            let s = solve_weighted_svm(&WeightedSvmInstance { input: SvmInput::Linear(&sample), labels: &sy, weights: &weights, penalty })?;
            let w = s.w.expect("linear solve yields w");
            (0..n).into_par_iter().map(|i| x.dot(i, &w) + s.b).collect()
        }
        KernelKind::Rbf { .. } => {
            let km = FunctionKernel::new(&sample, kernel);
            let s = solve_weighted_svm(&WeightedSvmInstance { input: SvmInput::Kernel(&km), labels: &sy, weights: &weights, penalty })?;
            let sv: Vec<(usize, f64)> = s
                .dual
                .alpha
                .iter()
                .enumerate()
                .filter(|(_, a)| **a > 0.0)
                .map(|(j, a)| (j, a * sy[j]))
                .collect();
            (0..n)
                .into_par_iter()
                .map(|i| sv.iter().map(|&(j, c)| c * kernel.eval_cross(x, i, &sample, j)).sum::<f64>() + s.b)
                .collect()
        }
    };

    let split = proportional_split(&[pos.len(), neg.len()], k0);
    let mut groups = cluster_1d(&decision, &pos, split[0]);
    groups.extend(cluster_1d(&decision, &neg, split[1]));
    ClusterPartition::from_groups(n, groups)
}

/// Initial clusters for the semi-supervised problem, over local indices of the labeled and
/// unlabeled entries. `labeled_y[j]` is the label of local labeled entry `j`.
#[derive(Debug, Clone)]
pub struct S3vmInit {
    pub labeled: ClusterPartition,
    pub unlabeled: ClusterPartition,
}

pub fn init_s3vm_clusters(
    x: &Features,
    labeled_idx: &[usize],
    labeled_y: &[f64],
    unlabeled_idx: &[usize],
    k0: usize,
    seed: u64,
) -> Result<S3vmInit> {
    if k0 < 10 {
        return Err(AidError::Config("semi-supervised SVM needs at least 10 initial clusters".into()));
    }
    let pos: Vec<usize> = (0..labeled_idx.len()).filter(|&j| labeled_y[j] > 0.0).collect();
    let neg: Vec<usize> = (0..labeled_idx.len()).filter(|&j| labeled_y[j] < 0.0).collect();
    let split = proportional_split(&[pos.len(), neg.len(), unlabeled_idx.len()], k0);

    let mut lgroups = feature_space_groups(x, labeled_idx, &pos, split[0], seed);
    lgroups.extend(feature_space_groups(x, labeled_idx, &neg, split[1], seed));
    let all_u: Vec<usize> = (0..unlabeled_idx.len()).collect();
    let ugroups = feature_space_groups(x, unlabeled_idx, &all_u, split[2], seed);
    Ok(S3vmInit {
        labeled: ClusterPartition::from_groups(labeled_idx.len(), lgroups)?,
        unlabeled: ClusterPartition::from_groups(unlabeled_idx.len(), ugroups)?,
    })
}

/// One assignment step in feature space for local entries `members` (rows `global[j]`), with
/// seeds at quantiles of the projection on the leading principal direction.
fn feature_space_groups(x: &Features, global: &[usize], members: &[usize], k: usize, seed: u64) -> Vec<Vec<usize>> {
    if members.is_empty() || k == 0 {
        return Vec::new();
    }
    let pts: Vec<Vec<f64>> = members.iter().map(|&j| x.dense_row(global[j])).collect();
    let dir = leading_direction(&pts, seed);
    let proj: Vec<f64> = pts.iter().map(|p| p.iter().zip(&dir).map(|(a, b)| a * b).sum()).collect();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
    let seeds: Vec<Vec<f64>> = quantile_positions(pts.len(), k.min(pts.len()))
        .into_iter()
        .map(|q| pts[order[q]].clone())
        .collect();
    let assign = assign_nearest(&pts, &seeds);
    let mut groups = vec![Vec::new(); seeds.len()];
    for (p, &s) in assign.iter().enumerate() {
        groups[s].push(members[p]);
    }
    groups
}

/// Power iteration on the covariance of `pts`.
fn leading_direction(pts: &[Vec<f64>], seed: u64) -> Vec<f64> {
    use rand::Rng;
    let m = pts[0].len();
    let n = pts.len() as f64;
    let mut mean = vec![0.0; m];
    for p in pts {
        for (a, b) in mean.iter_mut().zip(p) {
            *a += b / n;
        }
    }
    let mut r = rng::stream(seed, STREAM_CLUSTER_SAMPLE + 1);
    let mut v: Vec<f64> = (0..m).map(|_| r.random::<f64>() - 0.5).collect();
    for _ in 0..30 {
        let mut next = vec![0.0; m];
        for p in pts {
            let c: f64 = p.iter().zip(&mean).zip(&v).map(|((a, mu), vv)| (a - mu) * vv).sum();
            for ((o, a), mu) in next.iter_mut().zip(p).zip(&mean) {
                *o += c * (a - mu);
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            break;
        }
        v = next.into_iter().map(|a| a / norm).collect();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: Vec<Vec<f64>>) -> Features {
        Features::Dense(DenseMatrix::from_rows(&rows).unwrap())
    }

    #[test]
    fn rate_examples() {
        assert_eq!(initial_cluster_count(200_000, 10, ProblemKind::Lad).unwrap(), 100);
        assert_eq!(initial_cluster_count(100, 5, ProblemKind::Lad).unwrap(), 10);
        let r = initial_rate(30_000, 10, ProblemKind::Svm);
        assert!((r - 1.1 * 10.0 / 30_000.0).abs() < 1e-15);
        assert!(initial_cluster_count(5, 5, ProblemKind::Lad).is_err());
        assert_eq!(initial_cluster_count(10_000, 3, ProblemKind::S3vm).unwrap(), 100);
        assert_eq!(initial_cluster_count(10_001, 3, ProblemKind::S3vm).unwrap(), 10);
    }

    #[test]
    fn split_examples() {
        let mut p = ClusterPartition::from_groups(4, vec![vec![1, 2, 3], vec![0]]).unwrap();
        p.split_cluster(0, vec![vec![1], vec![2, 3]]).unwrap();
        assert_eq!(p.clusters(), &[vec![1], vec![0], vec![2, 3]]);
        assert_eq!(p.generation(), 1);
        p.validate().unwrap();

        let mut q = ClusterPartition::from_groups(2, vec![vec![0, 1]]).unwrap();
        q.split_cluster(0, vec![vec![0, 1], vec![]]).unwrap();
        assert_eq!(q.clusters(), &[vec![0, 1]]);

        let mut r = ClusterPartition::from_groups(4, vec![vec![0, 1, 2, 3]]).unwrap();
        r.split_cluster(0, vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        assert_eq!(r.num_clusters(), 4);
        assert!(r.split_cluster(0, vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn lad_collinear_points_bin_by_response() {
        let x = dense((1..=6).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (1..=6).map(|i| 2.0 * i as f64).collect();
        let p = init_lad_clusters(&x, &y, 2, 0).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn lad_one_seed_per_point_gives_singletons() {
        let x = dense((0..12).map(|i| vec![1.0, (i as f64).sin()]).collect());
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos() * 3.0).collect();
        let p = init_lad_clusters(&x, &y, 12, 4).unwrap();
        assert!(p.all_singletons());
    }

    #[test]
    fn svm_examples() {
        let x = dense(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let p = init_svm_clusters(&x, &[1.0, -1.0], 2, 0, KernelKind::Linear, 0.1).unwrap();
        assert!(p.all_singletons());

        let mut rows = vec![vec![2.0, 2.0]; 5];
        rows.extend((0..5).map(|i| vec![-2.0 - i as f64, 0.5 * i as f64]));
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect();
        let p = init_svm_clusters(&dense(rows), &y, 6, 0, KernelKind::Linear, 0.1).unwrap();
        let positive_clusters = p.clusters().iter().filter(|g| y[g[0]] > 0.0).count();
        assert_eq!(positive_clusters, 1);
        for g in p.clusters() {
            assert!(g.iter().all(|&i| y[i] == y[g[0]]));
        }
    }

    #[test]
    fn svm_separated_classes_get_two_clusters_each() {
        // Classes along the first axis; the sample model separates them, and the 1-D step
        // with seeds at quantiles 1 and 3 of each class splits it in halves.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            rows.push(vec![3.0 + i as f64, 0.0]);
            y.push(1.0);
            rows.push(vec![-3.0 - i as f64, 0.0]);
            y.push(-1.0);
        }
        let p = init_svm_clusters(&dense(rows.clone()), &y, 4, 0, KernelKind::Linear, 0.1).unwrap();
        assert_eq!(p.num_clusters(), 4);
        for g in p.clusters() {
            assert!(g.iter().all(|&i| y[i] == y[g[0]]));
            assert_eq!(g.len(), 5);
            let near: Vec<bool> = g.iter().map(|&i| rows[i][0].abs() < 8.0).collect();
            assert!(near.iter().all(|&b| b == near[0]));
        }
    }

    #[test]
    fn blobs_split_by_nearest_mean() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let c = if i < 10 { 5.0 } else { -5.0 };
                vec![c + (i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()]
            })
            .collect();
        let a = assign_nearest(&pts, &[vec![5.0, 0.0], vec![-5.0, 0.0]]);
        assert!(a[..10].iter().all(|&s| s == 0) && a[10..].iter().all(|&s| s == 1));
    }

    #[test]
    fn s3vm_identical_unlabeled_points_form_one_cluster() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        rows.extend(vec![vec![0.5, 0.5]; 100]);
        let x = dense(rows);
        let labeled: Vec<usize> = (0..10).collect();
        let ly: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect();
        let unlabeled: Vec<usize> = (10..110).collect();
        let init = init_s3vm_clusters(&x, &labeled, &ly, &unlabeled, 10, 1).unwrap();
        assert_eq!(init.unlabeled.num_clusters(), 1);
        assert!(init.labeled.num_clusters() <= 4);
        for g in init.labeled.clusters() {
            assert!(g.iter().all(|&j| ly[j] == ly[g[0]]));
        }
    }

    #[test]
    fn proportional_split_respects_floors_and_caps() {
        assert_eq!(proportional_split(&[5, 5, 100], 10), vec![1, 1, 8]);
        assert_eq!(proportional_split(&[1, 1000], 2), vec![1, 1]);
        assert_eq!(proportional_split(&[3, 0, 3], 10), vec![3, 0, 3]);
        assert_eq!(proportional_split(&[50, 50], 4).iter().sum::<usize>(), 4);
    }
}
