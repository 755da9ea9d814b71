//! Comparison metrics and aggregation-rate diagnostics.

use serde::{Deserialize, Serialize};

/// AID against a direct full-data solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// AID time over direct time.
    pub rho: f64,
    /// `(E_aid − E_direct)/E_direct`.
    pub delta: f64,
    /// Training classification rate of AID minus that of the direct solve.
    pub gamma: Option<f64>,
    pub final_rate: f64,
    pub iterations: usize,
    pub aid_objective: f64,
    pub direct_objective: f64,
    pub aid_seconds: f64,
    pub direct_seconds: f64,
}

impl Metrics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        aid_objective: f64,
        direct_objective: f64,
        aid_seconds: f64,
        direct_seconds: f64,
        final_rate: f64,
        iterations: usize,
        gamma: Option<f64>,
    ) -> Self {
        Metrics {
            rho: aid_seconds.max(1e-9) / direct_seconds.max(1e-9),
            delta: relative_difference(aid_objective, direct_objective),
            gamma,
            final_rate,
            iterations,
            aid_objective,
            direct_objective,
            aid_seconds,
            direct_seconds,
        }
    }
}

/// `(a − b)/b`, with 0 when both are 0 and infinity when only `b` is.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    if b != 0.0 {
        (a - b) / b
    } else if a == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Cluster counts split by distance to the fitted hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSplit {
    pub near_entries: usize,
    pub far_entries: usize,
    pub near_clusters: usize,
    pub far_clusters: usize,
    pub near_rate: f64,
    pub far_rate: f64,
}

/// A cluster is near when the |mean residual| of its members is below the median |residual|
/// over all entries. Each group's rate is its cluster count over its member count.
pub fn rate_split(clusters: &[Vec<usize>], residual: &[f64]) -> RateSplit {
    let mut abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        abs[n / 2]
    } else {
        0.5 * (abs[n / 2 - 1] + abs[n / 2])
    };
    let (mut near_clusters, mut near_entries) = (0, 0);
    for g in clusters {
        if (g.iter().map(|&i| residual[i]).sum::<f64>() / g.len() as f64).abs() < median {
            near_clusters += 1;
            near_entries += g.len();
        }
    }
    let far_clusters = clusters.len() - near_clusters;
    let far_entries = n - near_entries;
    let ratio = |c: usize, e: usize| if e == 0 { 0.0 } else { c as f64 / e as f64 };
    RateSplit {
        near_entries,
        far_entries,
        near_clusters,
        far_clusters,
        near_rate: ratio(near_clusters, near_entries),
        far_rate: ratio(far_clusters, far_entries),
    }
}
