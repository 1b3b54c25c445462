//! Seeded Monte Carlo tensor-valued processes over a finite index set.
//!
//! Every family is linear in a random weight vector `w in R^K`:
//! `X_t = sum_k w_k c_k(t) B_k` with Hermitian basis tensors `B_k` and a
//! deterministic coefficient map `c : T -> R^K`. Only the law of `w` differs.
//! Trajectory `s` draws its weights from `stream_rng(seed, s)`, so ensembles
//! do not depend on the number of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::FiniteMetricSpace;
use crate::error::{ensure, Error, Result};
use crate::report::{BoundReport, DEFAULT_MARGIN_SE};
use crate::rng::stream_rng;
use crate::tensor::{DenseTensor, GaugeNorm};

/// Law of the weight vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Family {
    /// i.i.d. standard normal weights.
    GaussianLinear,
    /// i.i.d. symmetric exponential (Laplace) weights.
    SubexponentialLinear,
    /// i.i.d. signs; `X_t` is the endpoint of the path of partial sums.
    RademacherMartingale,
    /// i.i.d. uniform weights on `[-sqrt 3, sqrt 3]` (mean 0, variance 1).
    IidBernstein,
    /// Laplace weights for the first `K - gaussian_terms` coordinates,
    /// Gaussian for the rest.
    MixedLinear { gaussian_terms: usize },
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::GaussianLinear => "gaussian_linear",
            Family::SubexponentialLinear => "subexponential_linear",
            Family::RademacherMartingale => "rademacher_martingale",
            Family::IidBernstein => "iid_bernstein",
            Family::MixedLinear { .. } => "mixed_linear",
        }
    }

    /// Whether coordinate `k` of `K` is sub-Gaussian (as opposed to Laplace).
    pub fn is_gaussian_coordinate(&self, k: usize, dim: usize) -> bool {
        match *self {
            Family::SubexponentialLinear => false,
            Family::MixedLinear { gaussian_terms } => k + gaussian_terms >= dim,
            _ => true,
        }
    }

    /// One draw of coordinate `k` of the weight vector.
    pub fn sample_weight<R: Rng>(&self, k: usize, dim: usize, rng: &mut R) -> f64 {
        match *self {
            Family::GaussianLinear => StandardNormal.sample(rng),
            Family::SubexponentialLinear => laplace(rng),
            Family::RademacherMartingale => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::IidBernstein => 3f64.sqrt() * rng.random_range(-1.0..=1.0),
            Family::MixedLinear { .. } => {
                if self.is_gaussian_coordinate(k, dim) {
                    StandardNormal.sample(rng)
                } else {
                    laplace(rng)
                }
            }
        }
    }
}

fn laplace<R: Rng>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.random::<bool>() {
        e
    } else {
        -e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ProcessSpec {
    pub family: Family,
    /// `index_map[t]` is the coefficient vector `c(t)` of length `K`.
    pub index_map: Vec<Vec<f64>>,
    pub basis: Vec<DenseTensor>,
    pub tail_beta: f64,
    pub metric_scale: f64,
    #[serde(default)]
    pub gauge: GaugeNorm,
}

#[derive(Deserialize)]
struct RawSpec {
    family: Family,
    index_map: Vec<Vec<f64>>,
    basis: Vec<DenseTensor>,
    tail_beta: f64,
    metric_scale: f64,
    #[serde(default)]
    gauge: GaugeNorm,
}

impl TryFrom<RawSpec> for ProcessSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        ProcessSpec::new(r.family, r.index_map, r.basis, r.tail_beta, r.metric_scale, r.gauge)
    }
}

impl ProcessSpec {
    pub fn new(
        family: Family,
        index_map: Vec<Vec<f64>>,
        basis: Vec<DenseTensor>,
        tail_beta: f64,
        metric_scale: f64,
        gauge: GaugeNorm,
    ) -> Result<Self> {
        ensure!(!basis.is_empty(), Validation, "basis must hold at least one tensor");
        let shape = basis[0].shape();
        ensure!(shape.is_square(), Validation, "basis tensors must be square, got {shape}");
        for (k, b) in basis.iter().enumerate() {
            ensure!(b.shape() == shape, Validation, "basis tensor {k} has shape {}, expected {shape}", b.shape());
            ensure!(b.is_hermitian(b.default_tolerance()), Validation, "basis tensor {k} is not Hermitian");
        }
        let dim = basis.len();
        ensure!(!index_map.is_empty(), Validation, "index map must cover at least one point");
        for (t, c) in index_map.iter().enumerate() {
            ensure!(c.len() == dim, Validation, "index map entry {t} has {} coefficients, expected {dim}", c.len());
            ensure!(c.iter().all(|x| x.is_finite()), Validation, "index map entry {t} is not finite");
        }
        ensure!(metric_scale > 0.0 && metric_scale.is_finite(), Validation, "metric scale must be positive");
        ensure!(tail_beta > 0.0 && tail_beta.is_finite(), Validation, "tail exponent must be positive");
        if let Family::MixedLinear { gaussian_terms } = family {
            ensure!(gaussian_terms <= dim, Validation, "{gaussian_terms} Gaussian terms exceed K = {dim}");
        }
        Ok(ProcessSpec {
            family,
            index_map,
            basis,
            tail_beta,
            metric_scale,
            gauge,
        })
    }

    /// `|T|`.
    pub fn size(&self) -> usize {
        self.index_map.len()
    }

    /// `K`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `sum_k coeff_k B_k`.
    pub fn combine(&self, coeff: impl Fn(usize) -> f64) -> DenseTensor {
        let mut acc = DenseTensor::zeros(self.basis[0].shape().clone());
        for (k, b) in self.basis.iter().enumerate() {
            acc.axpy(coeff(k), b).expect("basis shapes agree");
        }
        acc
    }

    /// `X_t` for a weight vector.
    pub fn value(&self, weights: &[f64], t: usize) -> DenseTensor {
        self.combine(|k| weights[k] * self.index_map[t][k])
    }

    /// `X_t - X_s`, formed from coefficient differences.
    pub fn increment(&self, weights: &[f64], t: usize, s: usize) -> DenseTensor {
        self.combine(|k| weights[k] * (self.index_map[t][k] - self.index_map[s][k]))
    }

    /// Partial sums `X_{t,0} = 0, .., X_{t,K} = X_t`.
    pub fn martingale_path(&self, weights: &[f64], t: usize) -> Vec<DenseTensor> {
        let mut path = vec![DenseTensor::zeros(self.basis[0].shape().clone())];
        for (k, b) in self.basis.iter().enumerate() {
            let mut next = path[k].clone();
            next.axpy(weights[k] * self.index_map[t][k], b).expect("basis shapes agree");
            path.push(next);
        }
        path
    }

    fn max_basis_norm(&self, keep: impl Fn(usize) -> bool) -> f64 {
        (0..self.dim())
            .filter(|&k| keep(k))
            .map(|k| self.basis[k].norm(self.gauge))
            .fold(0.0, f64::max)
    }

    fn coefficient_metric(&self, keep: impl Fn(usize) -> bool + Copy) -> Vec<f64> {
        let n = self.size();
        let scale = self.metric_scale * self.max_basis_norm(keep);
        let mut d = vec![0.0; n * n];
        for s in 0..n {
            for t in 0..n {
                let sq: f64 = (0..self.dim())
                    .filter(|&k| keep(k))
                    .map(|k| (self.index_map[t][k] - self.index_map[s][k]).powi(2))
                    .sum();
                d[s * n + t] = scale * sq.sqrt();
            }
        }
        d
    }

    /// Calibrated metric `d(s,t) = kappa * |c(t) - c(s)|_2 * max_k |B_k|_alpha`
    /// under id `"d"`. Mixed families add `"d1"` (Laplace coordinates) and
    /// `"d2"` (Gaussian coordinates).
    pub fn metric_space(&self) -> Result<FiniteMetricSpace> {
        let dim = self.dim();
        let mut space = FiniteMetricSpace::new(self.size(), "d", self.coefficient_metric(|_| true))?;
        if let Family::MixedLinear { .. } = self.family {
            let fam = self.family;
            space = space
                .with_metric("d1", self.coefficient_metric(move |k| !fam.is_gaussian_coordinate(k, dim)))?
                .with_metric("d2", self.coefficient_metric(move |k| fam.is_gaussian_coordinate(k, dim)))?;
        }
        Ok(space)
    }
}

/// Default cap on stored tensor entries (`|T| * S * entries per tensor`).
pub const DEFAULT_STORAGE_BUDGET: usize = 1 << 22;

/// Seeded samples of a process. Weights are always kept; realized tensors
/// only when they fit the storage budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub spec: ProcessSpec,
    pub seed: u64,
    pub sample_count: usize,
    weights: Vec<f64>,
    trajectories: Option<Vec<DenseTensor>>,
}

pub fn sample_ensemble(
    spec: &ProcessSpec,
    space: &FiniteMetricSpace,
    seed: u64,
    n_samples: usize,
) -> Result<Ensemble> {
    sample_ensemble_with_budget(spec, space, seed, n_samples, DEFAULT_STORAGE_BUDGET)
}

pub fn sample_ensemble_with_budget(
    spec: &ProcessSpec,
    space: &FiniteMetricSpace,
    seed: u64,
    n_samples: usize,
    storage_budget: usize,
) -> Result<Ensemble> {
    ensure!(n_samples >= 1, Validation, "at least one sample is required");
    ensure!(
        spec.size() == space.size(),
        Validation,
        "index map covers {} points but T has {}",
        spec.size(),
        space.size()
    );
    let dim = spec.dim();
    let weights: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut rng = stream_rng(seed, s as u64);
            (0..dim).map(|k| spec.family.sample_weight(k, dim, &mut rng)).collect::<Vec<_>>()
        })
        .collect();
    let stored = spec
        .size()
        .checked_mul(n_samples)
        .and_then(|x| x.checked_mul(spec.basis[0].shape().len()));
    let trajectories = match stored {
        Some(entries) if entries <= storage_budget => Some(
            (0..n_samples * spec.size())
                .into_par_iter()
                .map(|i| {
                    let (s, t) = (i / spec.size(), i % spec.size());
                    spec.value(&weights[s * dim..(s + 1) * dim], t)
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(Ensemble {
        spec: spec.clone(),
        seed,
        sample_count: n_samples,
        weights,
        trajectories,
    })
}

impl Ensemble {
    pub fn weights(&self, s: usize) -> &[f64] {
        let k = self.spec.dim();
        &self.weights[s * k..(s + 1) * k]
    }

    pub fn is_storage_reduced(&self) -> bool {
        self.trajectories.is_none()
    }

    /// Realized `X_t` of sample `s` (stored or recomputed).
    pub fn trajectory(&self, s: usize, t: usize) -> DenseTensor {
        match &self.trajectories {
            Some(v) => v[s * self.spec.size() + t].clone(),
            None => self.spec.value(self.weights(s), t),
        }
    }

    /// `|X_t - X_s|_alpha` for every sample.
    pub fn pair_norms(&self, t: usize, s: usize) -> Vec<f64> {
        (0..self.sample_count)
            .into_par_iter()
            .map(|i| self.spec.increment(self.weights(i), t, s).norm(self.spec.gauge))
            .collect()
    }

    /// Row-major `[sample][t]` table of `|X_t - X_{t0}|_alpha`.
    pub fn increment_norms(&self, t0: usize) -> Vec<f64> {
        let n = self.spec.size();
        (0..self.sample_count * n)
            .into_par_iter()
            .map(|i| {
                let (s, t) = (i / n, i % n);
                if t == t0 {
                    0.0
                } else {
                    self.spec.increment(self.weights(s), t, t0).norm(self.spec.gauge)
                }
            })
            .collect()
    }

    /// Per-sample `max_{t in subset} |X_t - X_{t0}|_alpha` (all of `T` when
    /// `subset` is `None`).
    pub fn sup_statistic(&self, t0: usize, subset: Option<&[usize]>) -> Result<Vec<f64>> {
        let n = self.spec.size();
        ensure!(t0 < n, Validation, "t0 = {t0} is outside T");
        let all: Vec<usize> = (0..n).collect();
        let subset = subset.unwrap_or(&all);
        ensure!(subset.iter().all(|&t| t < n), Validation, "subset index outside T");
        Ok((0..self.sample_count)
            .into_par_iter()
            .map(|s| {
                subset
                    .iter()
                    .map(|&t| {
                        if t == t0 {
                            0.0
                        } else {
                            self.spec.increment(self.weights(s), t, t0).norm(self.spec.gauge)
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    /// CSV with columns `sample,t,norm` of `|X_t - X_{t0}|_alpha`.
    pub fn norms_csv(&self, t0: usize) -> String {
        let n = self.spec.size();
        let mut out = String::from("sample,t,norm\n");
        for (i, v) in self.increment_norms(t0).iter().enumerate() {
            let _ = writeln!(out, "{},{},{:?}", i / n, i % n, v);
        }
        out
    }
}

fn check_ensemble_space(ens: &Ensemble, space: &FiniteMetricSpace) -> Result<()> {
    ensure!(
        ens.spec.size() == space.size(),
        Validation,
        "ensemble is over {} points but T has {}",
        ens.spec.size(),
        space.size()
    );
    Ok(())
}

/// `((1/S) sum_s x_s^p)^(1/p)`, evaluated relative to the maximum so that
/// scaling by a power of two is exact.
pub fn power_mean(xs: &[f64], p: f64) -> Result<f64> {
    ensure!(!xs.is_empty(), Validation, "no samples");
    ensure!(p >= 1.0, Domain, "moment order must be >= 1, got {p}");
    let m = xs.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let mean = xs.iter().map(|x| (x / m).powf(p)).sum::<f64>() / xs.len() as f64;
    Ok(m * mean.powf(1.0 / p))
}

/// `((1/S) sum_s max_t |X_t - X_{t0}|^p)^(1/p)`.
pub fn empirical_sup_moment(ens: &Ensemble, space: &FiniteMetricSpace, p: f64, t0: usize) -> Result<f64> {
    check_ensemble_space(ens, space)?;
    power_mean(&ens.sup_statistic(t0, None)?, p)
}

/// `max_t ((1/S) sum_s |X_t - X_{t0}|^p)^(1/p)`, the single-point moment term.
pub fn empirical_marginal_moment(ens: &Ensemble, space: &FiniteMetricSpace, p: f64, t0: usize) -> Result<f64> {
    check_ensemble_space(ens, space)?;
    ensure!(t0 < space.size(), Validation, "t0 = {t0} is outside T");
    let n = space.size();
    let table = ens.increment_norms(t0);
    let mut best = 0.0f64;
    for t in 0..n {
        let col: Vec<f64> = (0..ens.sample_count).map(|s| table[s * n + t]).collect();
        best = best.max(power_mean(&col, p)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub u_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub counts: Vec<usize>,
    pub sample_count: usize,
}

impl TailCurve {
    /// Empirical `P(x >= u)` on an ascending grid.
    pub fn from_samples(samples: &[f64], u_grid: &[f64]) -> Result<Self> {
        ensure!(!samples.is_empty(), Validation, "no samples");
        ensure!(
            u_grid.iter().all(|u| u.is_finite() && *u >= 0.0),
            Domain,
            "tail grid points must be finite and nonnegative"
        );
        ensure!(
            u_grid.windows(2).all(|w| w[0] < w[1]),
            Domain,
            "tail grid must be strictly ascending"
        );
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let counts: Vec<usize> = u_grid
            .iter()
            .map(|&u| sorted.len() - sorted.partition_point(|&x| x < u))
            .collect();
        let n = samples.len();
        Ok(TailCurve {
            u_grid: u_grid.to_vec(),
            survival: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            counts,
            sample_count: n,
        })
    }

    /// CSV with columns `u,survival,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,survival,count\n");
        for ((u, s), c) in self.u_grid.iter().zip(&self.survival).zip(&self.counts) {
            let _ = writeln!(out, "{u:?},{s:?},{c}");
        }
        out
    }
}

/// Exceedance curve of `sup_t |X_t - X_{t0}|_alpha`.
pub fn empirical_tail(ens: &Ensemble, space: &FiniteMetricSpace, t0: usize, u_grid: &[f64]) -> Result<TailCurve> {
    check_ensemble_space(ens, space)?;
    TailCurve::from_samples(&ens.sup_statistic(t0, None)?, u_grid)
}

/// Grid points `u` with empirical `P(x >= u)` close to each requested
/// survival level; duplicates and nonpositive points are dropped.
pub fn quantile_grid(samples: &[f64], survival_levels: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut grid: Vec<f64> = survival_levels
        .iter()
        .filter(|q| **q > 0.0 && **q <= 1.0)
        .map(|&q| {
            let above = ((q * n as f64).ceil() as usize).clamp(1, n);
            sorted[n - above]
        })
        .filter(|u| *u > 0.0)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub beta_hat: f64,
    pub r2: f64,
    pub points_used: usize,
}

/// Least-squares slope of `log(-log S(u))` against `log u` over grid points
/// with `0 < S(u) < 1` and `u > 0`.
pub fn fit_tail_exponent(curve: &TailCurve) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = curve
        .u_grid
        .iter()
        .zip(&curve.survival)
        .filter(|(u, s)| **u > 0.0 && **s > 0.0 && **s < 1.0)
        .map(|(u, s)| (u.ln(), (-s.ln()).ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable tail points, need at least 4",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    ensure!(sxx > 0.0, InsufficientData, "tail grid has a single distinct point");
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(TailFit {
        beta_hat: slope,
        r2,
        points_used: pts.len(),
    })
}

/// Check `P(|X_t - X_s| >= u d(s,t)) <= 2 exp(-u^beta)` for every pair and
/// every grid point; each row reports the worst pair at one `u`.
pub fn verify_increment_tail(
    ens: &Ensemble,
    space: &FiniteMetricSpace,
    metric_id: &str,
    beta: f64,
    u_grid: &[f64],
) -> Result<BoundReport> {
    check_ensemble_space(ens, space)?;
    ensure!(beta > 0.0 && beta.is_finite(), Domain, "beta must be positive");
    ensure!(
        u_grid.iter().all(|u| u.is_finite() && *u >= 0.0),
        Domain,
        "grid points must be finite and nonnegative"
    );
    let metric = space.metric(metric_id)?;
    let n = space.size();
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            let d = metric.d(s, t);
            let mut norms = ens.pair_norms(t, s);
            if d == 0.0 {
                if norms.iter().any(|&x| x > 0.0) {
                    return Err(Error::DegenerateMetric(format!(
                        "d({s},{t}) = 0 but the increments are not identically zero"
                    )));
                }
                continue;
            }
            norms.sort_by(f64::total_cmp);
            pairs.push((s, t, d, norms));
        }
    }
    let inputs = serde_json::json!({
        "family": ens.spec.family.label(),
        "metric_id": metric_id,
        "beta": beta,
        "u_grid": u_grid,
        "seed": ens.seed,
    });
    let mut report = BoundReport::new("increment_tail", inputs, ens.sample_count, DEFAULT_MARGIN_SE);
    let total = ens.sample_count as f64;
    let mut worst_ratio = 0.0f64;
    for &u in u_grid {
        let bound = 2.0 * (-u.powf(beta)).exp();
        let mut worst = (0.0, 0, 0, 0.0);
        for (s, t, d, norms) in &pairs {
            let thr = u * d;
            let freq = (norms.len() - norms.partition_point(|&x| x < thr)) as f64 / total;
            if freq > worst.0 || worst.3 == 0.0 {
                worst = (freq, *s, *t, thr);
            }
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(worst.0 / bound.min(1.0));
        }
        report.push_tail_row(format!("pair {}-{}", worst.1, worst.2), u, worst.3, bound, worst.0);
    }
    report.notes.push(format!("worst frequency/bound ratio {worst_ratio:.4}"));
    report.notes.push(format!("{} pairs with positive distance", pairs.len()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn pauli_z() -> DenseTensor {
        DenseTensor::diagonal(vec![2], &[1.0, -1.0]).unwrap()
    }

    fn line_spec(family: Family, coeffs: &[f64]) -> ProcessSpec {
        ProcessSpec::new(
            family,
            coeffs.iter().map(|&c| vec![c]).collect(),
            vec![pauli_z()],
            2.0,
            2.0,
            GaugeNorm::Spectral,
        )
        .unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_trajectory() {
        let spec = line_spec(Family::GaussianLinear, &[0.0, 0.0]);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, 1, 1).unwrap();
        assert!(ens.trajectory(0, 1).data().iter().all(|z| z.norm() == 0.0));
        assert!(!ens.is_storage_reduced());
    }

    #[test]
    fn seeded_reproducibility() {
        let spec = line_spec(Family::SubexponentialLinear, &[0.0, 1.0, 3.0]);
        let space = spec.metric_space().unwrap();
        let a = sample_ensemble(&spec, &space, 7, 50).unwrap();
        let b = sample_ensemble(&spec, &space, 7, 50).unwrap();
        assert_eq!(a, b);
        let c = sample_ensemble(&spec, &space, 8, 50).unwrap();
        assert_ne!(a.weights(0), c.weights(0));
    }

    #[test]
    fn rank_one_increment_closed_form() {
        let spec = line_spec(Family::GaussianLinear, &[0.5, 2.0]);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, 3, 20).unwrap();
        let norms = ens.pair_norms(1, 0);
        for (s, v) in norms.iter().enumerate() {
            let g = ens.weights(s)[0];
            assert!((v - g.abs() * 1.5 * pauli_z().norm(GaugeNorm::Spectral)).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_moment_examples() {
        let spec = line_spec(Family::GaussianLinear, &[1.0]);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, 3, 20).unwrap();
        assert_eq!(empirical_sup_moment(&ens, &space, 2.0, 0).unwrap(), 0.0);

        let spec = line_spec(Family::RademacherMartingale, &[0.0, 1.0, -2.0]);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, 3, 5).unwrap();
        // |w| = 1, so the sup over t of |c(t) - c(0)| is 2 on every sample.
        assert_eq!(empirical_sup_moment(&ens, &space, 1.0, 0).unwrap(), 2.0);
        assert!(empirical_sup_moment(&ens, &space, 0.5, 0).is_err());
    }

    #[test]
    fn storage_reduction_preserves_statistics() {
        let spec = line_spec(Family::IidBernstein, &[0.0, 1.0, 3.0]);
        let space = spec.metric_space().unwrap();
        let full = sample_ensemble(&spec, &space, 9, 40).unwrap();
        let lean = sample_ensemble_with_budget(&spec, &space, 9, 40, 0).unwrap();
        assert!(lean.is_storage_reduced());
        assert_eq!(full.sup_statistic(0, None).unwrap(), lean.sup_statistic(0, None).unwrap());
        assert_eq!(full.trajectory(3, 2), lean.trajectory(3, 2));
    }

    #[test]
    fn martingale_path_ends_at_value() {
        let b = vec![pauli_z(), DenseTensor::identity(Shape::square(vec![2]).unwrap()).unwrap()];
        let spec = ProcessSpec::new(
            Family::RademacherMartingale,
            vec![vec![1.0, 2.0]],
            b,
            2.0,
            1.0,
            GaugeNorm::Spectral,
        )
        .unwrap();
        let w = [1.0, -1.0];
        let path = spec.martingale_path(&w, 0);
        assert_eq!(path.len(), 3);
        assert_eq!(path[2], spec.value(&w, 0));
    }

    #[test]
    fn spec_validation() {
        let nonherm = DenseTensor::from_real(Shape::square(vec![2]).unwrap(), &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(ProcessSpec::new(Family::GaussianLinear, vec![vec![1.0]], vec![nonherm], 2.0, 1.0, GaugeNorm::Spectral).is_err());
        assert!(ProcessSpec::new(Family::GaussianLinear, vec![vec![1.0, 2.0]], vec![pauli_z()], 2.0, 1.0, GaugeNorm::Spectral).is_err());
        assert!(ProcessSpec::new(Family::GaussianLinear, vec![vec![1.0]], vec![pauli_z()], 2.0, 0.0, GaugeNorm::Spectral).is_err());
        let spec = line_spec(Family::GaussianLinear, &[0.0, 1.0]);
        let other = FiniteMetricSpace::from_line("d", &[0.0, 1.0, 2.0]).unwrap();
        assert!(sample_ensemble(&spec, &other, 0, 3).is_err());
        assert!(sample_ensemble(&spec, &spec.metric_space().unwrap(), 0, 0).is_err());
    }

    #[test]
    fn tail_curve_examples() {
        let curve = TailCurve::from_samples(&[0.5, 1.0, 2.0, 2.0], &[0.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(curve.counts, vec![4, 3, 2, 0]);
        assert_eq!(curve.survival, vec![1.0, 0.75, 0.5, 0.0]);
        assert!(TailCurve::from_samples(&[1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn fit_recovers_exact_forms() {
        let u: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
        for beta in [1.0, 2.0, 0.7] {
            let curve = TailCurve {
                survival: u.iter().map(|x: &f64| (-x.powf(beta)).exp()).collect(),
                counts: vec![0; u.len()],
                u_grid: u.clone(),
                sample_count: 1,
            };
            let fit = fit_tail_exponent(&curve).unwrap();
            assert!((fit.beta_hat - beta).abs() < 1e-6);
            assert!(fit.r2 > 1.0 - 1e-9);
        }
        let short = TailCurve::from_samples(&[1.0, 2.0], &[0.5, 1.5]).unwrap();
        assert!(matches!(fit_tail_exponent(&short), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn degenerate_metric_detected() {
        let spec = line_spec(Family::GaussianLinear, &[0.0, 1.0]);
        let ens = sample_ensemble(&spec, &spec.metric_space().unwrap(), 0, 10).unwrap();
        let zero = FiniteMetricSpace::new(2, "d", vec![0.0; 4]).unwrap();
        assert!(matches!(
            verify_increment_tail(&ens, &zero, "d", 2.0, &[1.0]),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn quantile_grid_hits_levels() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let g = quantile_grid(&xs, &[0.5, 0.1, 0.01]);
        assert_eq!(g, vec![51.0, 91.0, 100.0]);
        let c = TailCurve::from_samples(&xs, &g).unwrap();
        assert_eq!(c.survival, vec![0.5, 0.1, 0.01]);
    }
}
