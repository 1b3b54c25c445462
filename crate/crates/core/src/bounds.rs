//! Closed-form tail and moment bounds for suprema of tensor processes, and
//! calibration of their unnamed constants against Monte Carlo samples.
//!
//! Functions returning `(threshold, prob_bound)` state
//! `P(statistic >= threshold) <= prob_bound`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure, Error, Result};
use crate::report::BoundReport;
use crate::tensor::DenseTensor;

fn nonneg(name: &str, x: f64) -> Result<()> {
    ensure!(x >= 0.0 && x.is_finite(), Domain, "{name} must be finite and >= 0, got {x}");
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    ensure!(x > 0.0 && x.is_finite(), Domain, "{name} must be finite and > 0, got {x}");
    Ok(())
}

fn at_least_one(name: &str, x: f64) -> Result<()> {
    ensure!(x >= 1.0 && x.is_finite(), Domain, "{name} must be >= 1, got {x}");
    Ok(())
}

fn mode_product(row_modes: &[usize]) -> f64 {
    row_modes.iter().map(|&m| m as f64).product()
}

/// Constants of the chaining bounds. Fields that a bound does not use keep
/// their supplied (or unit) value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    #[serde(rename = "C_beta")]
    pub c_beta_big: f64,
    #[serde(rename = "D_beta")]
    pub d_beta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "c_beta")]
    pub c_beta: f64,
}

impl ConstantSet {
    pub fn new(c_beta_big: f64, d_beta: f64, c1: f64, c2: f64, c3: f64, c_beta: f64) -> Result<Self> {
        for (name, v) in [
            ("C_beta", c_beta_big),
            ("D_beta", d_beta),
            ("C1", c1),
            ("C2", c2),
            ("C3", c3),
            ("c_beta", c_beta),
        ] {
            positive(name, v)?;
        }
        Ok(ConstantSet {
            c_beta_big,
            d_beta,
            c1,
            c2,
            c3,
            c_beta,
        })
    }

    /// Every constant equal to 1.
    pub fn unit() -> Self {
        ConstantSet {
            c_beta_big: 1.0,
            d_beta: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c_beta: 1.0,
        }
    }
}

/// `C_beta * gamma + 2 * sup_moment`.
pub fn thm32_moment_rhs(gamma_trunc: f64, sup_moment: f64, c_beta: f64) -> Result<f64> {
    nonneg("gamma", gamma_trunc)?;
    nonneg("sup moment", sup_moment)?;
    nonneg("C_beta", c_beta)?;
    Ok(c_beta * gamma_trunc + 2.0 * sup_moment)
}

/// Threshold `e^(1/beta) (C_beta gamma + u D_beta diam)`, probability
/// `exp(-u^beta / beta)`; requires `u >= 1`.
pub fn thm32_tail(gamma_trunc: f64, diam: f64, u: f64, beta: f64, consts: &ConstantSet) -> Result<(f64, f64)> {
    nonneg("gamma", gamma_trunc)?;
    nonneg("diameter", diam)?;
    positive("beta", beta)?;
    at_least_one("u", u)?;
    let thr = (1.0 / beta).exp() * (consts.c_beta_big * gamma_trunc + u * consts.d_beta * diam);
    Ok((thr, (-u.powf(beta) / beta).exp()))
}

/// Moment growth `(E|X|^p)^(1/p) <= a p^(1/beta) + b` turned into the tail
/// `P(|X| >= e^(1/beta)(a u + b)) <= exp(-u^beta / beta)`, `u >= 1`.
pub fn moment_to_tail(a: f64, b: f64, beta: f64, u: f64) -> Result<(f64, f64)> {
    nonneg("a", a)?;
    nonneg("b", b)?;
    positive("beta", beta)?;
    at_least_one("u", u)?;
    Ok(((1.0 / beta).exp() * (a * u + b), (-u.powf(beta) / beta).exp()))
}

/// Moment bound `e^(1/2e) a p^(1/beta) (sqrt(2 pi / beta) b e^(beta/12))^(1/p)`
/// implied by `P(|X| >= e^(1/beta) a u) <= b exp(-u^beta / beta)`.
pub fn tail_to_moment(a: f64, b: f64, beta: f64, p: f64) -> Result<f64> {
    nonneg("a", a)?;
    nonneg("b", b)?;
    positive("beta", beta)?;
    at_least_one("p", p)?;
    let inner = (2.0 * PI / beta).sqrt() * b * (beta / 12.0).exp();
    Ok((1.0 / (2.0 * E)).exp() * a * p.powf(1.0 / beta) * inner.powf(1.0 / p))
}

/// `r (c_beta d + u_b)`.
pub fn lemma_a5_moment(r: f64, u_b: f64, d: f64, beta: f64, p: f64, c_beta: f64) -> Result<f64> {
    nonneg("r", r)?;
    positive("u_b", u_b)?;
    nonneg("d", d)?;
    positive("beta", beta)?;
    at_least_one("p", p)?;
    nonneg("c_beta", c_beta)?;
    Ok(r * (c_beta * d + u_b))
}

/// `(int_0^inf p v^(p-1) exp(-p v^beta / 4) dv)^(1/p)
///   = (4/p)^(1/beta) Gamma(p/beta + 1)^(1/p)`.
pub fn lemma_a5_integral_root(beta: f64, p: f64) -> f64 {
    (4.0 / p).powf(1.0 / beta) * (ln_gamma(p / beta + 1.0) / p).exp()
}

/// A valid `c_beta` for the moment lemma when `d >= 1`: the supremum over
/// `p >= 1` of [`lemma_a5_integral_root`], taken on a dense geometric grid
/// together with its `p -> inf` limit `(4 / (beta e))^(1/beta)`.
///
/// For `d < 1` the lemma's linear dependence on `d` fails (the exact bound
/// scales as `d^(1/p)`), so callers should use `max(d, 1)`.
pub fn lemma_a5_c_beta(beta: f64) -> Result<f64> {
    positive("beta", beta)?;
    let limit = (4.0 / (beta * E)).powf(1.0 / beta);
    let grid_max = (0..=4000)
        .map(|k| 10f64.powf(k as f64 * 6.0 / 4000.0))
        .map(|p| lemma_a5_integral_root(beta, p))
        .fold(0.0, f64::max);
    // Slack covers the gaps between grid points.
    Ok(grid_max.max(limit) * (1.0 + 1e-3))
}

/// Ratio of the geometric series bounding the union of chaining events,
/// `exp(2 (ln 2 - 0.75))`.
pub fn lemma_a4_ratio() -> f64 {
    (2.0 * (2f64.ln() - 0.75)).exp()
}

/// `C_1 = sum_{n>0} r^n = r / (1 - r)` with `r` from [`lemma_a4_ratio`]; about 8.30.
pub fn lemma_a4_constant() -> f64 {
    let r = lemma_a4_ratio();
    r / (1.0 - r)
}

/// Union bound `sum_{n > n'} 2^(2^(n+1)) * 2 exp(-2^n u^beta)` evaluated
/// term by term in log space, `n' = floor(log2 p)`.
pub fn lemma_a4_union_sum(p: f64, u: f64, beta: f64) -> Result<f64> {
    at_least_one("p", p)?;
    positive("beta", beta)?;
    positive("u", u)?;
    let n0 = crate::chaining::truncation_level(p)?;
    let ub = u.powf(beta);
    let mut total = 0.0;
    for n in n0 + 1..n0 + 64 {
        let scale = 2f64.powi(n as i32);
        let term = (2.0 * scale * 2f64.ln() + 2f64.ln() - scale * ub).exp();
        total += term;
        if term < total * 1e-18 {
            break;
        }
    }
    Ok(total)
}

/// Tensor Azuma bound `(prod I) exp(-u^2 / (8 sigma^2))` on
/// `P(lambda_max(X_n - X_0) >= u)`.
pub fn azuma_tail(sigma: f64, u: f64, row_modes: &[usize]) -> Result<f64> {
    positive("sigma", sigma)?;
    nonneg("u", u)?;
    Ok(mode_product(row_modes) * (-u * u / (8.0 * sigma * sigma)).exp())
}

/// `|sum_i D_i^2|_spec^(1/2)` for Hermitian difference tensors `D_i`.
pub fn cor34_metric(diffs: &[DenseTensor]) -> Result<f64> {
    let Some(first) = diffs.first() else {
        return Ok(0.0);
    };
    let mut acc = DenseTensor::zeros(first.shape().clone());
    for d in diffs {
        ensure!(d.shape() == first.shape(), Shape, "difference tensors have different shapes");
        ensure!(d.is_hermitian(d.default_tolerance()), Domain, "difference tensor is not Hermitian");
        acc = acc.add(&d.einstein_product(d)?)?;
    }
    Ok(acc.norm(crate::tensor::GaugeNorm::Spectral).sqrt())
}

/// Differences `D_i = (X_{t,i} - X_{s,i}) - (X_{t,i-1} - X_{s,i-1})` of two
/// martingale paths of equal length.
pub fn path_differences(path_t: &[DenseTensor], path_s: &[DenseTensor]) -> Result<Vec<DenseTensor>> {
    ensure!(path_t.len() == path_s.len(), Shape, "paths have different lengths");
    let gap: Vec<DenseTensor> = path_t
        .iter()
        .zip(path_s)
        .map(|(a, b)| a.sub(b))
        .collect::<Result<_>>()?;
    gap.windows(2).map(|w| w[1].sub(&w[0])).collect()
}

/// Threshold `e^(1/2)(C2 gamma_2 + D2 diam u)`, probability `e^(-u^2/2)`.
pub fn cor34_tail(gamma2: f64, diam: f64, u: f64, c2: f64, d2: f64) -> Result<(f64, f64)> {
    nonneg("gamma_2", gamma2)?;
    nonneg("diameter", diam)?;
    at_least_one("u", u)?;
    Ok((0.5f64.exp() * (c2 * gamma2 + d2 * diam * u), (-u * u / 2.0).exp()))
}

/// Markov-type conversion for mixed moment growth
/// `(E|X|^p)^(1/p) <= sum_n a_n p^(1/n) + a_extra`: threshold
/// `e (sum_n a_n u^(1/n) + a_extra)`, probability `e^(-u)`, `u >= 1`.
///
/// `a[k]` multiplies the `1/(k+1)` power.
pub fn mixed_moment_to_tail(a: &[f64], a_extra: f64, u: f64) -> Result<(f64, f64)> {
    for &x in a {
        nonneg("a_n", x)?;
    }
    nonneg("a_extra", a_extra)?;
    at_least_one("u", u)?;
    let s: f64 = a
        .iter()
        .enumerate()
        .map(|(k, an)| an * u.powf(1.0 / (k + 1) as f64))
        .sum();
    Ok((E * (s + a_extra), (-u).exp()))
}

/// `sqrt(2 pi p) p^p e^(-p + 1/(12p))`, an upper bound on `Gamma(p + 1)`.
pub fn stirling_f1(p: f64) -> f64 {
    (2.0 * PI * p).sqrt() * (p * p.ln() - p + 1.0 / (12.0 * p)).exp()
}

/// `sqrt(pi) e^(1/(6p)) (2e)^(-p/2) e^(p/(2e)) p^(p/2)`, an upper bound on
/// `Gamma(p/2 + 1)` (tight at `p = e`).
pub fn stirling_f2(p: f64) -> f64 {
    PI.sqrt() * (1.0 / (6.0 * p) - 0.5 * p * (2.0 * E).ln() + p / (2.0 * E) + 0.5 * p * p.ln()).exp()
}

/// Envelope `f_n(p) >= Gamma(p/n + 1)`: the two explicit forms for
/// `n = 1, 2`, and the Stirling upper bound at `x = p/n` beyond.
pub fn stirling_envelope(n: usize, p: f64) -> f64 {
    match n {
        1 => stirling_f1(p),
        2 => stirling_f2(p),
        _ => stirling_f1(p / n as f64),
    }
}

/// `sum_n m a_n f_n(p) p^(1/n)` with `m = a.len()`.
pub fn mixed_tail_to_moment(a: &[f64], p: f64) -> Result<f64> {
    for &x in a {
        nonneg("a_n", x)?;
    }
    at_least_one("p", p)?;
    let m = a.len() as f64;
    Ok(a.iter()
        .enumerate()
        .map(|(k, an)| {
            let n = k + 1;
            m * an * stirling_envelope(n, p) * p.powf(1.0 / n as f64)
        })
        .sum())
}

/// `C2 sum_n gamma_n + 2 sup_moment`.
pub fn thm35_moment_rhs(gammas: &[f64], sup_moment: f64, c2: f64) -> Result<f64> {
    for &g in gammas {
        nonneg("gamma_n", g)?;
    }
    nonneg("sup moment", sup_moment)?;
    nonneg("C2", c2)?;
    Ok(c2 * gammas.iter().sum::<f64>() + 2.0 * sup_moment)
}

/// Threshold `C2 sum_n gamma_n + C3 sum_n u^(1/n) diam_n`, probability `e^(-u)`.
pub fn thm35_tail(gammas: &[f64], diams: &[f64], u: f64, c2: f64, c3: f64) -> Result<(f64, f64)> {
    ensure!(gammas.len() == diams.len(), Domain, "need one diameter per gamma");
    for (&g, &d) in gammas.iter().zip(diams) {
        nonneg("gamma_n", g)?;
        nonneg("diameter", d)?;
    }
    at_least_one("u", u)?;
    let spread: f64 = diams
        .iter()
        .enumerate()
        .map(|(k, d)| u.powf(1.0 / (k + 1) as f64) * d)
        .sum();
    Ok((c2 * gammas.iter().sum::<f64>() + c3 * spread, (-u).exp()))
}

/// Tensor Bernstein bound for the average of `n` i.i.d. terms: threshold
/// `sigma sqrt(2u/n) + upsilon u / n`, probability `2 (prod I) e^(-u)`.
pub fn bernstein_tail(sigma: f64, upsilon: f64, n: usize, u: f64, row_modes: &[usize]) -> Result<(f64, f64)> {
    positive("sigma", sigma)?;
    positive("upsilon", upsilon)?;
    ensure!(n >= 1, Domain, "n must be >= 1");
    nonneg("u", u)?;
    let nf = n as f64;
    Ok((
        sigma * (2.0 * u / nf).sqrt() + upsilon * u / nf,
        2.0 * mode_product(row_modes) * (-u).exp(),
    ))
}

/// Which supremum bound a constant fit targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundFamily {
    /// Exponential tail with parameter `beta`; fits `C_beta = D_beta`.
    Thm32 { beta: f64 },
    /// Martingale family; fits `C_beta = D_beta` at `beta = 2`.
    Cor34,
    /// Mixed tails over `m` metrics; fits `C2 = C3`.
    Thm35,
    /// Empirical process; fits `C2 = C3`. `gammas = [gamma_1(d1), gamma_2(d2)]`.
    Cor46 { n: usize, sigma: f64, upsilon: f64 },
}

impl BoundFamily {
    pub fn name(&self) -> &'static str {
        match self {
            BoundFamily::Thm32 { .. } => "sup_tail_exponential",
            BoundFamily::Cor34 => "sup_tail_martingale",
            BoundFamily::Thm35 => "sup_tail_mixed",
            BoundFamily::Cor46 { .. } => "sup_tail_empirical",
        }
    }

    /// Constant set with both fitted constants equal to `scale`.
    pub fn scaled_constants(&self, base: &ConstantSet, scale: f64) -> ConstantSet {
        let mut c = *base;
        match self {
            BoundFamily::Thm32 { .. } | BoundFamily::Cor34 => {
                c.c_beta_big = scale;
                c.d_beta = scale;
            }
            BoundFamily::Thm35 | BoundFamily::Cor46 { .. } => {
                c.c2 = scale;
                c.c3 = scale;
            }
        }
        c
    }
}

/// `(threshold, prob_bound)` of the named bound at `u`.
pub fn evaluate_bound(
    family: &BoundFamily,
    gammas: &[f64],
    diams: &[f64],
    u: f64,
    consts: &ConstantSet,
) -> Result<(f64, f64)> {
    let first = |v: &[f64], what: &str| {
        v.first()
            .copied()
            .ok_or_else(|| Error::Domain(format!("missing {what}")))
    };
    match *family {
        BoundFamily::Thm32 { beta } => thm32_tail(first(gammas, "gamma")?, first(diams, "diameter")?, u, beta, consts),
        BoundFamily::Cor34 => cor34_tail(first(gammas, "gamma")?, first(diams, "diameter")?, u, consts.c_beta_big, consts.d_beta),
        BoundFamily::Thm35 => thm35_tail(gammas, diams, u, consts.c2, consts.c3),
        BoundFamily::Cor46 { n, sigma, upsilon } => {
            ensure!(gammas.len() == 2, Domain, "empirical-process bound takes [gamma_1, gamma_2]");
            crate::empirical::cor46_tail(gammas[1], gammas[0], n, sigma, upsilon, u, consts.c2, consts.c3)
        }
    }
}

/// Everything needed to compare a supremum bound with Monte Carlo samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitInputs {
    pub family: BoundFamily,
    pub gammas: Vec<f64>,
    pub diams: Vec<f64>,
    pub u_grid: Vec<f64>,
    /// Per-sample supremum statistic.
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub margin_se: f64,
    /// Constants not being fitted.
    pub base: ConstantSet,
}

/// Search box for fitted constants.
pub const FIT_RANGE: (f64, f64) = (1e-2, 1e3);

fn exceedance(sorted: &[f64], thr: f64) -> f64 {
    (sorted.len() - sorted.partition_point(|&x| x < thr)) as f64 / sorted.len() as f64
}

/// Evaluate the bound on every grid point and compare with the samples.
pub fn check_exceedance(inputs: &FitInputs, consts: &ConstantSet) -> Result<BoundReport> {
    ensure!(!inputs.samples.is_empty(), Validation, "no samples");
    let mut sorted = inputs.samples.clone();
    sorted.sort_by(f64::total_cmp);
    let echo = serde_json::to_value(inputs).expect("inputs serialize");
    let mut report = BoundReport::new(inputs.family.name(), echo, sorted.len(), inputs.margin_se);
    for &u in &inputs.u_grid {
        let (thr, prob) = evaluate_bound(&inputs.family, &inputs.gammas, &inputs.diams, u, consts)?;
        report.push_tail_row(format!("u={u}"), u, thr, prob, exceedance(&sorted, thr));
    }
    report.fitted = Some(*consts);
    Ok(report)
}

/// Smallest joint scale `lambda` in [`FIT_RANGE`] (both fitted constants set
/// to `lambda`) for which the bound holds at every grid point within the
/// binomial margin. Bisection on `log lambda`, 80 steps; the returned
/// constants always satisfy the check.
pub fn fit_constants(inputs: &FitInputs) -> Result<ConstantSet> {
    fit_constants_report(inputs).map(|(c, _)| c)
}

pub fn fit_constants_report(inputs: &FitInputs) -> Result<(ConstantSet, BoundReport)> {
    let at = |scale: f64| -> Result<(ConstantSet, BoundReport)> {
        let c = inputs.family.scaled_constants(&inputs.base, scale);
        let r = check_exceedance(inputs, &c)?;
        Ok((c, r))
    };
    let (lo, hi) = FIT_RANGE;
    let low = at(lo)?;
    if low.1.holds {
        return Ok(low);
    }
    let high = at(hi)?;
    if !high.1.holds {
        let worst = high
            .1
            .rows
            .iter()
            .find(|r| !r.holds)
            .map(|r| format!("at u = {}: empirical {} > allowance {}", r.x, r.empirical, r.allowance))
            .unwrap_or_default();
        return Err(Error::FitFailure(format!(
            "bound fails even with constants {hi}; {worst}"
        )));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if at(mid.exp())?.1.holds {
            b = mid;
        } else {
            a = mid;
        }
    }
    let (c, mut report) = at(b.exp())?;
    report.notes.push(format!("joint scale fitted in [{lo}, {hi}]"));
    Ok((c, report))
}
