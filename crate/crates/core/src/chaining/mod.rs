//! Finite metric spaces and generic chaining functionals.
//!
//! Evaluation of the gamma functionals is exact for a given admissible
//! sequence; finding a good sequence is a separate search problem
//! ([`build_admissible_greedy`] for any size, [`gamma_exhaustive`] as an
//! exact oracle for `|T| <= 16`).

mod cover;
mod io;
mod partition;
mod sequence;

pub use cover::{covering_number, dudley_integral};
pub use io::{parse_metric_space, parse_sequence, write_metric_space, write_sequence};
pub use partition::{gamma_prime_value, intersect_partitions, PartitionSequence};
pub use sequence::{
    build_admissible_greedy, chain_maps, gamma_exhaustive, gamma_exhaustive_sequence,
    gamma_truncated_value, gamma_value,
    level_cap, truncation_level, AdmissibleSequence, ChainMaps,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{ensure, Error, Result};

/// Absolute tolerance for the symmetry and triangle checks.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Index set `T = {0, .., size-1}` with one or more named distance matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    size: usize,
    metrics: BTreeMap<String, Vec<f64>>,
}

/// Borrowed view of one distance matrix.
#[derive(Clone, Copy, Debug)]
pub struct Metric<'a> {
    size: usize,
    dist: &'a [f64],
}

impl<'a> Metric<'a> {
    #[inline]
    pub fn d(&self, s: usize, t: usize) -> f64 {
        self.dist[s * self.size + t]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `d(t, set) = min_{s in set} d(t, s)`.
    pub fn dist_to_set(&self, t: usize, set: &[usize]) -> f64 {
        set.iter().map(|&s| self.d(t, s)).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    pub fn diameter_of(&self, cell: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (k, &s) in cell.iter().enumerate() {
            for &t in &cell[k + 1..] {
                best = best.max(self.d(s, t)).max(self.d(t, s));
            }
        }
        best
    }
}

fn validate_matrix(size: usize, dist: &[f64]) -> Result<()> {
    ensure!(
        dist.len() == size * size,
        Validation,
        "distance matrix has {} entries, expected {}",
        dist.len(),
        size * size
    );
    ensure!(
        dist.iter().all(|d| d.is_finite() && *d >= 0.0),
        Validation,
        "distances must be finite and nonnegative"
    );
    let d = |s: usize, t: usize| dist[s * size + t];
    for s in 0..size {
        ensure!(d(s, s) == 0.0, Validation, "d({s},{s}) = {} != 0", d(s, s));
        for t in s + 1..size {
            ensure!(
                (d(s, t) - d(t, s)).abs() <= METRIC_TOLERANCE,
                Validation,
                "asymmetric distances d({s},{t}) = {} vs d({t},{s}) = {}",
                d(s, t),
                d(t, s)
            );
        }
    }
    for s in 0..size {
        for t in 0..size {
            let dst = d(s, t);
            for r in 0..size {
                ensure!(
                    dst <= d(s, r) + d(r, t) + METRIC_TOLERANCE,
                    Validation,
                    "triangle inequality fails: d({s},{t}) > d({s},{r}) + d({r},{t})"
                );
            }
        }
    }
    Ok(())
}

impl FiniteMetricSpace {
    /// Space with a single metric given as a row-major `size x size` matrix.
    pub fn new(size: usize, metric_id: &str, dist: Vec<f64>) -> Result<Self> {
        ensure!(size >= 1, Validation, "metric space must have at least one point");
        let mut space = FiniteMetricSpace {
            size,
            metrics: BTreeMap::new(),
        };
        space.insert_metric(metric_id, dist)?;
        Ok(space)
    }

    pub fn with_metric(mut self, metric_id: &str, dist: Vec<f64>) -> Result<Self> {
        self.insert_metric(metric_id, dist)?;
        Ok(self)
    }

    fn insert_metric(&mut self, metric_id: &str, dist: Vec<f64>) -> Result<()> {
        ensure!(
            !metric_id.is_empty() && !metric_id.chars().any(char::is_whitespace),
            Validation,
            "metric id `{metric_id}` must be a nonempty token"
        );
        ensure!(
            !self.metrics.contains_key(metric_id),
            Validation,
            "duplicate metric id `{metric_id}`"
        );
        validate_matrix(self.size, &dist)?;
        self.metrics.insert(metric_id.to_string(), dist);
        Ok(())
    }

    /// Euclidean distances between points in `R^k`.
    pub fn from_points(metric_id: &str, points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for s in 0..n {
            for t in 0..n {
                ensure!(
                    points[s].len() == points[t].len(),
                    Validation,
                    "points have inconsistent dimensions"
                );
                dist[s * n + t] = points[s]
                    .iter()
                    .zip(&points[t])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
            }
        }
        FiniteMetricSpace::new(n, metric_id, dist)
    }

    /// Points on the real line with `d(s, t) = |x_s - x_t|`.
    pub fn from_line(metric_id: &str, xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        let dist = (0..n * n).map(|k| (xs[k / n] - xs[k % n]).abs()).collect();
        FiniteMetricSpace::new(n, metric_id, dist)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn metric_ids(&self) -> impl Iterator<Item = &str> {
        self.metrics.keys().map(String::as_str)
    }

    pub fn metric(&self, metric_id: &str) -> Result<Metric<'_>> {
        self.metrics
            .get(metric_id)
            .map(|dist| Metric {
                size: self.size,
                dist,
            })
            .ok_or_else(|| Error::Lookup(metric_id.to_string()))
    }

    /// Every metric multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        ensure!(c > 0.0 && c.is_finite(), Domain, "scale must be positive, got {c}");
        Ok(FiniteMetricSpace {
            size: self.size,
            metrics: self
                .metrics
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|d| d * c).collect()))
                .collect(),
        })
    }

    /// Relabel points: new point `k` is old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.size;
        let mut seen = vec![false; n];
        ensure!(perm.len() == n, Validation, "permutation has wrong length");
        for &p in perm {
            ensure!(p < n && !seen[p], Validation, "not a permutation");
            seen[p] = true;
        }
        Ok(FiniteMetricSpace {
            size: n,
            metrics: self
                .metrics
                .iter()
                .map(|(k, v)| {
                    let m = (0..n * n).map(|i| v[perm[i / n] * n + perm[i % n]]).collect();
                    (k.clone(), m)
                })
                .collect(),
        })
    }

    /// Sub-space induced by `subset` (in the given order).
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        ensure!(!subset.is_empty(), Validation, "empty subset");
        ensure!(
            subset.iter().all(|&s| s < self.size),
            Validation,
            "subset index out of range"
        );
        let n = self.size;
        let k = subset.len();
        Ok(FiniteMetricSpace {
            size: k,
            metrics: self
                .metrics
                .iter()
                .map(|(id, v)| {
                    let m = (0..k * k).map(|i| v[subset[i / k] * n + subset[i % k]]).collect();
                    (id.clone(), m)
                })
                .collect(),
        })
    }
}

pub fn diameter(space: &FiniteMetricSpace, metric_id: &str) -> Result<f64> {
    Ok(space.metric(metric_id)?.diameter())
}
