//! Sparse signal tensors, random row selection of unitary measurement
//! tensors, and restricted isometry constants.
//!
//! A measurement tensor `U` has shape `(J; J)`. Selecting the row
//! multi-indices in a random set `Pi` and scaling by `sqrt(prod J / prod I)`
//! gives the sampled operator `U_Pi` of shape `(|Pi|; J)`. Restricted isometry
//! constants are computed on the unfolding: `tau_xi(A)` is the largest
//! deviation from 1 of an eigenvalue of a `xi x xi` principal block of `A^H A`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::FiniteMetricSpace;
use crate::error::{ensure, Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::tensor::{DenseTensor, Shape};

/// Largest number of supports `rip_exact` will enumerate.
pub const RIP_SUPPORT_BUDGET: u128 = 1_000_000;

/// Number of entries with `|x| > 0`.
pub fn sparsity(x: &DenseTensor) -> usize {
    sparsity_tol(x, 0.0)
}

/// Number of entries with `|x| > tol`.
pub fn sparsity_tol(x: &DenseTensor, tol: f64) -> usize {
    x.data().iter().filter(|z| z.norm() > tol).count()
}

/// Column multi-indices of the nonzero entries of a signal `(1; J)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    pub modes: Vec<usize>,
    pub indices: Vec<Vec<usize>>,
}

pub fn support(x: &DenseTensor, tol: f64) -> Result<SupportSet> {
    ensure!(x.shape().row_count() == 1, Shape, "signal tensors have one row, got {}", x.shape());
    let modes = x.shape().col_modes().to_vec();
    let indices = x
        .data()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > tol)
        .map(|(j, _)| Shape::multi_index(&modes, j))
        .collect();
    Ok(SupportSet { modes, indices })
}

/// `sqrt(prod J) * max |u_ij|`.
pub fn coherence(u: &DenseTensor) -> f64 {
    let cols = u.shape().col_count() as f64;
    cols.sqrt() * u.data().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Tensor product of unitary DFT matrices, shape `(J; J)`.
pub fn fourier_unitary(col_dims: &[usize]) -> Result<DenseTensor> {
    let shape = Shape::square(col_dims.to_vec())?;
    let norm = 1.0 / (shape.col_count() as f64).sqrt();
    DenseTensor::from_fn(shape, |r, c| {
        let ri = Shape::multi_index(col_dims, r);
        let ci = Shape::multi_index(col_dims, c);
        let phase: f64 = col_dims
            .iter()
            .zip(ri.iter().zip(&ci))
            .map(|(&j, (&a, &b))| ((a * b) % j) as f64 / j as f64)
            .sum();
        Complex64::from_polar(norm, -std::f64::consts::TAU * phase)
    })
}

/// Random selection `Pi` of measurement indices, stored as ascending linear
/// row indices of `U`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPattern {
    pub selected: Vec<usize>,
    pub source_dims: Vec<usize>,
    pub target_size: usize,
    pub seed: u64,
}

impl SamplingPattern {
    pub fn source_size(&self) -> usize {
        self.source_dims.iter().product()
    }

    pub fn inclusion_probability(&self) -> f64 {
        self.target_size as f64 / self.source_size() as f64
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        self.selected
            .iter()
            .map(|&j| Shape::multi_index(&self.source_dims, j))
            .collect()
    }
}

/// Every index of `prod J` is kept independently with probability
/// `target_size / prod J`.
pub fn draw_pattern(source_dims: &[usize], target_size: usize, seed: u64) -> Result<SamplingPattern> {
    ensure!(!source_dims.is_empty() && source_dims.iter().all(|&j| j >= 1), Domain, "source dims must be positive");
    let total = source_dims
        .iter()
        .try_fold(1usize, |a, &j| a.checked_mul(j))
        .ok_or_else(|| Error::Capacity("source index count overflows".into()))?;
    ensure!(target_size >= 1, Domain, "target size must be >= 1");
    ensure!(target_size <= total, Domain, "target size {target_size} exceeds prod J = {total}");
    let p = target_size as f64 / total as f64;
    let mut rng = stream_rng(seed, 0);
    let selected = (0..total).filter(|_| rng.random::<f64>() < p).collect();
    Ok(SamplingPattern {
        selected,
        source_dims: source_dims.to_vec(),
        target_size,
        seed,
    })
}

/// Seed of the pattern used by trial `trial` of a Monte Carlo run.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64 + 1)
}

/// `U_Pi`; `op` is `None` when `Pi` is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledOperator {
    pub scale: f64,
    pub selected: Vec<usize>,
    pub op: Option<DenseTensor>,
}

impl SampledOperator {
    pub fn is_degenerate(&self) -> bool {
        self.op.is_none()
    }

    /// `max_j sup |f_X(j)|` over unit `xi`-sparse `X`: per row, the scaled
    /// root sum of its `xi` largest squared magnitudes.
    pub fn sparse_response_max(&self, xi: usize) -> f64 {
        let Some(op) = &self.op else { return 0.0 };
        let cols = op.shape().col_count();
        op.data()
            .chunks(cols)
            .map(|row| {
                let mut sq: Vec<f64> = row.iter().map(|z| z.norm_sqr()).collect();
                sq.sort_by(|a, b| b.total_cmp(a));
                sq.iter().take(xi).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn sample_operator(u: &DenseTensor, pattern: &SamplingPattern) -> Result<SampledOperator> {
    ensure!(
        u.shape().row_modes() == pattern.source_dims.as_slice(),
        Shape,
        "pattern dims {:?} do not match operator {}",
        pattern.source_dims,
        u.shape()
    );
    let rows = u.shape().row_count();
    ensure!(pattern.selected.iter().all(|&j| j < rows), Shape, "pattern index out of range");
    let scale = (pattern.source_size() as f64 / pattern.target_size as f64).sqrt();
    if pattern.selected.is_empty() {
        return Ok(SampledOperator { scale, selected: Vec::new(), op: None });
    }
    let cols = u.shape().col_count();
    let data = pattern
        .selected
        .iter()
        .flat_map(|&j| u.data()[j * cols..(j + 1) * cols].iter().map(|z| z * scale))
        .collect();
    let shape = Shape::new(vec![pattern.selected.len()], u.shape().col_modes().to_vec())?;
    Ok(SampledOperator {
        scale,
        selected: pattern.selected.clone(),
        op: Some(DenseTensor::new(shape, data)?),
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// `max(lambda_max - 1, 1 - lambda_min)` of a Hermitian block.
fn block_deviation(g: &DMatrix<Complex64>) -> f64 {
    let (lo, hi) = match g.nrows() {
        1 => (g[(0, 0)].re, g[(0, 0)].re),
        2 => {
            let (a, d) = (g[(0, 0)].re, g[(1, 1)].re);
            let r = (((a - d) / 2.0).powi(2) + g[(0, 1)].norm_sqr()).sqrt();
            ((a + d) / 2.0 - r, (a + d) / 2.0 + r)
        }
        _ => {
            let ev = g.symmetric_eigenvalues();
            (ev.min(), ev.max())
        }
    };
    (hi - 1.0).max(1.0 - lo)
}

/// Gershgorin upper bound on `block_deviation`.
fn gershgorin_deviation(g: &DMatrix<Complex64>) -> f64 {
    (0..g.nrows())
        .map(|i| {
            let r: f64 = (0..g.ncols()).filter(|&j| j != i).map(|j| g[(i, j)].norm()).sum();
            let c = g[(i, i)].re;
            (c + r - 1.0).max(1.0 - (c - r))
        })
        .fold(0.0, f64::max)
}

/// Worst deviation over supports whose largest column is `top`, with the
/// remaining `k` columns enumerated in colexicographic order.
fn worst_with_top(gram: &DMatrix<Complex64>, top: usize, k: usize) -> f64 {
    let mut comb: Vec<usize> = (0..k).collect();
    let mut block = DMatrix::<Complex64>::zeros(k + 1, k + 1);
    let mut best = 0.0f64;
    loop {
        for a in 0..=k {
            let ca = if a == k { top } else { comb[a] };
            for b in 0..=k {
                let cb = if b == k { top } else { comb[b] };
                block[(a, b)] = gram[(ca, cb)];
            }
        }
        if gershgorin_deviation(&block) > best {
            best = best.max(block_deviation(&block));
        }
        // Next combination of `0..top` in colex order.
        let mut i = 0;
        while i < k {
            let limit = if i + 1 < k { comb[i + 1] } else { top };
            if comb[i] + 1 < limit {
                break;
            }
            i += 1;
        }
        if i == k {
            return best;
        }
        comb[i] += 1;
        for (j, c) in comb.iter_mut().enumerate().take(i) {
            *c = j;
        }
    }
}

/// Exact `tau_xi` of the unfolding of `a`. Supports of size exactly
/// `min(xi, columns)` suffice since smaller Gram blocks are principal
/// sub-blocks and their spectra interlace.
pub fn rip_exact(a: &DenseTensor, xi: usize) -> Result<f64> {
    ensure!(xi >= 1, Domain, "xi must be >= 1");
    let m = a.unfold();
    let n = m.ncols();
    let k = xi.min(n);
    let supports = binomial(n, k);
    if supports > RIP_SUPPORT_BUDGET {
        return Err(Error::Capacity(format!(
            "{supports} supports of size {k} among {n} columns exceed the budget of {RIP_SUPPORT_BUDGET}; \
             lower xi or the column count, or estimate with rip_monte_carlo on a smaller operator"
        )));
    }
    let gram = m.adjoint() * &m;
    Ok((k - 1..n)
        .into_par_iter()
        .map(|top| worst_with_top(&gram, top, k - 1))
        .reduce_with(f64::max)
        .unwrap_or(0.0))
}

/// `tau_xi` of a sampled operator; an empty selection is the zero operator
/// with constant 1.
pub fn rip_sampled(op: &SampledOperator, xi: usize) -> Result<f64> {
    match &op.op {
        Some(t) => rip_exact(t, xi),
        None => {
            ensure!(xi >= 1, Domain, "xi must be >= 1");
            Ok(1.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub xi: usize,
    pub tau: f64,
    pub source_dims: Vec<usize>,
    pub target_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub tau_values: Vec<f64>,
    pub pattern_sizes: Vec<usize>,
    pub degenerate_trials: usize,
    pub eta_hat: f64,
    /// `eta_hat -+ 3` binomial standard errors, clamped to `[0, 1]`.
    pub eta_interval: (f64, f64),
}

impl RipReport {
    /// Fraction of trials with `tau_xi >= tau`.
    pub fn eta_at(&self, tau: f64) -> f64 {
        self.tau_values.iter().filter(|&&t| t >= tau).count() as f64 / self.trials as f64
    }

    /// Columns: `trial,pattern_size,tau_xi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,pattern_size,tau_xi\n");
        for (i, (t, s)) in self.tau_values.iter().zip(&self.pattern_sizes).enumerate() {
            let _ = writeln!(out, "{i},{s},{t:?}");
        }
        out
    }
}

/// Draw `trials` patterns (trial `i` uses `trial_seed(seed, i)`) and record
/// `tau_xi(U_Pi)` for each.
pub fn rip_monte_carlo(
    u: &DenseTensor,
    target_size: usize,
    xi: usize,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<RipReport> {
    ensure!(trials >= 1, Validation, "at least one trial is required");
    ensure!(tau >= 0.0 && tau.is_finite(), Domain, "tau must be finite and >= 0");
    let dims = u.shape().row_modes().to_vec();
    let results: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let pattern = draw_pattern(&dims, target_size, trial_seed(seed, i))?;
            let op = sample_operator(u, &pattern)?;
            Ok((rip_sampled(&op, xi)?, pattern.selected.len()))
        })
        .collect::<Result<_>>()?;
    let (tau_values, pattern_sizes): (Vec<f64>, Vec<usize>) = results.into_iter().unzip();
    let degenerate_trials = pattern_sizes.iter().filter(|&&s| s == 0).count();
    let mut report = RipReport {
        xi,
        tau,
        source_dims: dims,
        target_size,
        trials,
        seed,
        tau_values,
        pattern_sizes,
        degenerate_trials,
        eta_hat: 0.0,
        eta_interval: (0.0, 0.0),
    };
    let eta = report.eta_at(tau);
    let half = 3.0 * (eta * (1.0 - eta) / trials as f64).sqrt();
    report.eta_hat = eta;
    report.eta_interval = ((eta - half).max(0.0), (eta + half).min(1.0));
    Ok(report)
}

fn ln_product(dims: &[usize]) -> Result<f64> {
    ensure!(!dims.is_empty() && dims.iter().all(|&d| d >= 1), Domain, "dimensions must be positive");
    Ok(dims.iter().map(|&d| (d as f64).ln()).sum())
}

fn check_sampling_params(xi: usize, upsilon: f64) -> Result<()> {
    ensure!(xi >= 1, Domain, "xi must be >= 1");
    ensure!(upsilon >= 1.0 && upsilon.is_finite(), Domain, "coherence must be >= 1, got {upsilon}");
    Ok(())
}

/// Smallest `prod I` the sampling condition accepts when `prod I` itself is
/// fixed inside the logarithm: `xi Y^2 tau^-2 max{C4 log^2 xi log(prod I)
/// log(prod J), C5 log(1/eta)}`.
#[allow(clippy::too_many_arguments)]
pub fn thm41_required_rows(
    xi: usize,
    upsilon: f64,
    tau: f64,
    eta: f64,
    row_dims: &[usize],
    col_dims: &[usize],
    c4: f64,
    c5: f64,
) -> Result<f64> {
    check_sampling_params(xi, upsilon)?;
    ensure!(tau > 0.0 && tau.is_finite(), Domain, "tau must be > 0, got {tau}");
    ensure!(eta > 0.0 && eta < 1.0, Domain, "eta must lie in (0, 1), got {eta}");
    ensure!(c4 > 0.0 && c5 > 0.0, Domain, "constants must be positive");
    let (li, lj) = (ln_product(row_dims)?, ln_product(col_dims)?);
    let lx = (xi as f64).ln();
    let inner = (c4 * lx * lx * li * lj).max(c5 * (1.0 / eta).ln());
    Ok(xi as f64 * upsilon * upsilon / (tau * tau) * inner)
}

#[allow(clippy::too_many_arguments)]
pub fn thm41_condition(
    xi: usize,
    upsilon: f64,
    tau: f64,
    eta: f64,
    row_dims: &[usize],
    col_dims: &[usize],
    c4: f64,
    c5: f64,
) -> Result<bool> {
    let need = thm41_required_rows(xi, upsilon, tau, eta, row_dims, col_dims, c4, c5)?;
    let rows: f64 = row_dims.iter().map(|&d| d as f64).product();
    Ok(rows >= need)
}

/// Joint scale `lambda = C4 = C5` under which the sampling condition holds at
/// exactly the sweep points whose estimated failure rate is at most `eta`.
///
/// `sweep` holds `(prod I, eta_hat)` pairs. The condition at `prod I` reads
/// `lambda <= prod I / K(prod I)` with `K` the requirement at unit constants,
/// so a consistent `lambda` exists iff every ratio on the failing side lies
/// below every ratio on the passing side; the geometric midpoint is returned.
pub fn fit_thm41_scale(
    sweep: &[(usize, f64)],
    xi: usize,
    upsilon: f64,
    tau: f64,
    eta: f64,
    col_dims: &[usize],
) -> Result<f64> {
    ensure!(!sweep.is_empty(), Validation, "empty sweep");
    let mut pts = sweep.to_vec();
    pts.sort_by_key(|p| p.0);
    let mut pass = Vec::new();
    let mut fail = Vec::new();
    for &(rows, eta_hat) in &pts {
        let k = thm41_required_rows(xi, upsilon, tau, eta, &[rows], col_dims, 1.0, 1.0)?;
        ensure!(k > 0.0, Domain, "requirement vanishes at prod I = {rows}");
        let ratio = rows as f64 / k;
        if eta_hat <= eta {
            pass.push(ratio);
        } else {
            fail.push(ratio);
        }
    }
    let lo = fail.iter().cloned().fold(0.0, f64::max);
    let hi = pass.iter().cloned().fold(f64::INFINITY, f64::min);
    match (fail.is_empty(), pass.is_empty()) {
        (true, _) => Ok(hi),
        (_, true) => Ok(2.0 * lo),
        _ if lo < hi => Ok((lo * hi).sqrt()),
        _ => Err(Error::FitFailure(format!(
            "no joint scale separates the sweep: failing ratios reach {lo}, passing ratios start at {hi}"
        ))),
    }
}

/// Four-term deviation level `G(eta)`.
pub fn thm41_g(eta: f64, xi: usize, upsilon: f64, row_dims: &[usize], col_dims: &[usize]) -> Result<f64> {
    check_sampling_params(xi, upsilon)?;
    ensure!(eta > 0.0 && eta < 1.0, Domain, "eta must lie in (0, 1), got {eta}");
    let (li, lj) = (ln_product(row_dims)?, ln_product(col_dims)?);
    let rows: f64 = row_dims.iter().map(|&d| d as f64).product();
    let r = xi as f64 / rows;
    let lx = (xi as f64).ln();
    let le = (1.0 / eta).ln();
    Ok(upsilon * r.sqrt() * li.sqrt() * lj.sqrt() * lx
        + upsilon * upsilon * r * li * lj * lx * lx
        + upsilon * (le * r).sqrt()
        + upsilon * upsilon * le * r)
}

/// Entropy-integral bound `Y sqrt(xi / prod I) log(xi sqrt(log prod I) sqrt(log prod J))`.
pub fn entropy_bound(xi: usize, upsilon: f64, row_dims: &[usize], col_dims: &[usize]) -> Result<f64> {
    ensure!(xi >= 1, Domain, "xi must be >= 1");
    let (li, lj) = (ln_product(row_dims)?, ln_product(col_dims)?);
    let rows: f64 = row_dims.iter().map(|&d| d as f64).product();
    Ok(upsilon * (xi as f64 / rows).sqrt() * (xi as f64 * li.sqrt() * lj.sqrt()).ln())
}

/// Random unit-norm `xi`-sparse signals of shape `(1; J)`; signal `i` uses
/// stream `i` of `seed`.
pub fn random_sparse_signals(col_dims: &[usize], xi: usize, count: usize, seed: u64) -> Result<Vec<DenseTensor>> {
    let shape = Shape::new(vec![1], col_dims.to_vec())?;
    let n = shape.col_count();
    ensure!(xi >= 1 && xi <= n, Domain, "xi must lie in [1, {n}]");
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            for j in 0..xi {
                let pick = rng.random_range(j..n);
                idx.swap(j, pick);
            }
            let mut data = vec![Complex64::new(0.0, 0.0); n];
            for &j in &idx[..xi] {
                data[j] = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            }
            let x = DenseTensor::new(shape.clone(), data)?;
            let norm = x.frobenius_norm();
            Ok(x.scale(1.0 / norm))
        })
        .collect()
}

/// Finite proxy for the sparse unit sphere under
/// `d_theta(X, Y) = max_j |f_X(j) - f_Y(j)| = |U_Pi (X - Y)|_inf`, metric id
/// `"d_theta"`.
pub fn d_theta_space(op: &SampledOperator, signals: &[DenseTensor]) -> Result<FiniteMetricSpace> {
    ensure!(!signals.is_empty(), Validation, "no signals");
    let m = signals.len();
    let responses: Vec<Vec<Complex64>> = match &op.op {
        Some(a) => signals
            .iter()
            .map(|x| {
                let col = DenseTensor::new(
                    Shape::new(a.shape().col_modes().to_vec(), vec![1])?,
                    x.data().to_vec(),
                )?;
                Ok(a.einstein_product(&col)?.into_data())
            })
            .collect::<Result<_>>()?,
        None => vec![Vec::new(); m],
    };
    let mut dist = vec![0.0; m * m];
    for s in 0..m {
        for t in s + 1..m {
            let d = responses[s]
                .iter()
                .zip(&responses[t])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            dist[s * m + t] = d;
            dist[t * m + s] = d;
        }
    }
    FiniteMetricSpace::new(m, "d_theta", dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(v: &[f64]) -> DenseTensor {
        DenseTensor::from_real(Shape::new(vec![1], vec![v.len()]).unwrap(), v).unwrap()
    }

    #[test]
    fn sparsity_counts() {
        assert_eq!(sparsity(&signal(&[0.0; 4])), 0);
        assert_eq!(sparsity(&signal(&[0.0, 2.0, 0.0, 0.0])), 1);
        assert_eq!(sparsity_tol(&signal(&[1e-12, 2.0, 0.0, 0.0]), 1e-9), 1);
        assert_eq!(support(&signal(&[0.0, 2.0, 0.0, 3.0]), 0.0).unwrap().indices, vec![vec![1], vec![3]]);
    }

    #[test]
    fn fourier_is_flat_unitary() {
        let f = fourier_unitary(&[2]).unwrap();
        assert!(f.data().iter().all(|z| (z.norm() - 0.5f64.sqrt()).abs() < 1e-15));
        let g = fourier_unitary(&[2, 3]).unwrap();
        assert!(g.is_unitary(1e-10));
        assert!((coherence(&g) - 1.0).abs() < 1e-10);
        let id = DenseTensor::identity(Shape::square(vec![4]).unwrap()).unwrap();
        assert_eq!(coherence(&id), 2.0);
    }

    #[test]
    fn patterns() {
        let all = draw_pattern(&[2, 3], 6, 1).unwrap();
        assert_eq!(all.selected, (0..6).collect::<Vec<_>>());
        assert_eq!(draw_pattern(&[8], 3, 5).unwrap(), draw_pattern(&[8], 3, 5).unwrap());
        assert!(draw_pattern(&[4], 5, 0).is_err());
    }

    #[test]
    fn sampled_operator_rows() {
        let u = fourier_unitary(&[4]).unwrap();
        let full = sample_operator(&u, &draw_pattern(&[4], 4, 0).unwrap()).unwrap();
        assert_eq!(full.op.unwrap().data(), u.data());
        let p = SamplingPattern { selected: vec![2], source_dims: vec![4], target_size: 2, seed: 0 };
        let one = sample_operator(&u, &p).unwrap();
        let op = one.op.unwrap();
        assert_eq!(op.shape().row_count(), 1);
        assert!((op.at(0, 1) - u.at(2, 1) * 2f64.sqrt()).norm() < 1e-15);
        let empty = SamplingPattern { selected: vec![], ..p };
        assert!(sample_operator(&u, &empty).unwrap().is_degenerate());
    }

    #[test]
    fn rip_examples() {
        let u = fourier_unitary(&[2, 2]).unwrap();
        for xi in 1..=4 {
            assert!(rip_exact(&u, xi).unwrap() < 1e-12);
        }
        let id = DenseTensor::identity(Shape::square(vec![3]).unwrap()).unwrap().scale(1.5);
        assert!((rip_exact(&id, 2).unwrap() - 1.25).abs() < 1e-12);
        assert!(rip_exact(&u, 0).is_err());
        let wide = DenseTensor::zeros(Shape::matrix(1, 64).unwrap());
        assert!(matches!(rip_exact(&wide, 6), Err(Error::Capacity(_))));
    }

    #[test]
    fn monte_carlo_extremes() {
        let u = fourier_unitary(&[8]).unwrap();
        let r = rip_monte_carlo(&u, 6, 2, 0.0, 20, 3).unwrap();
        assert_eq!(r.eta_hat, 1.0);
        let top = r.tau_values.iter().cloned().fold(0.0, f64::max);
        assert_eq!(r.eta_at(top + 1e-9), 0.0);
        assert_eq!(r, rip_monte_carlo(&u, 6, 2, 0.0, 20, 3).unwrap());
        assert_eq!(r.to_csv().lines().count(), 21);
    }

    #[test]
    fn sampling_condition_limits() {
        let base = thm41_required_rows(1, 1.0, 0.5, 0.1, &[16], &[64], 1.0, 1.0).unwrap();
        assert!((base - 4.0 * 10f64.ln()).abs() < 1e-12);
        let c4_only = thm41_required_rows(4, 1.0, 0.5, 1.0 - 1e-15, &[16], &[64], 1.0, 1.0).unwrap();
        let l4 = 4f64.ln();
        assert!((c4_only - 16.0 * l4 * l4 * 16f64.ln() * 64f64.ln()).abs() < 1e-9);
        assert!(thm41_condition(1, 0.5, 0.5, 0.1, &[16], &[64], 1.0, 1.0).is_err());
        assert!(thm41_condition(1, 1.0, 0.5, 1.0, &[16], &[64], 1.0, 1.0).is_err());
    }

    #[test]
    fn g_and_entropy() {
        let g = thm41_g(0.1, 1, 1.0, &[64], &[256]).unwrap();
        let le = 10f64.ln();
        assert!((g - ((le / 64.0).sqrt() + le / 64.0)).abs() < 1e-15);
        let a = entropy_bound(4, 1.0, &[64], &[256]).unwrap();
        let b = entropy_bound(4, 2.0, &[64], &[256]).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn d_theta_is_sup_distance() {
        let u = fourier_unitary(&[4]).unwrap();
        let op = sample_operator(&u, &draw_pattern(&[4], 4, 0).unwrap()).unwrap();
        let xs = vec![signal(&[1.0, 0.0, 0.0, 0.0]), signal(&[0.0, 1.0, 0.0, 0.0])];
        let space = d_theta_space(&op, &xs).unwrap();
        let d = space.metric("d_theta").unwrap().d(0, 1);
        // Row 2 of the 4-point DFT is (1, -1, 1, -1) / 2.
        assert!((d - 1.0).abs() < 1e-12);
    }
}
