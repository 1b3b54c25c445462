//! Empirical tensor processes `E_t = (1/n) sum_i (X_{t_i} - E X_{t_i})`.
//!
//! Generators are `X_{t_i} = eps_i P_{t,i}` with a fixed Hermitian parameter
//! tensor `P_{t,i}` and a scalar zero-mean weight `eps_i`, independent over
//! `i` and shared across `t`. With `a_i = max_t |P_{t,i}|_spec` the envelope
//! `A_i = a_i I` and scale `upsilon = max_i a_i` (times `sqrt 3` for the
//! uniform law) satisfy the Bernstein moment condition.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::FiniteMetricSpace;
use crate::error::{ensure, Error, Result};
use crate::report::{BoundReport, DEFAULT_MARGIN_SE};
use crate::rng::stream_rng;
use crate::tensor::{DenseTensor, GaugeNorm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// `eps = +-1`.
    Rademacher,
    /// `eps` uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

impl WeightLaw {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WeightLaw::Uniform => 3f64.sqrt() * rng.random_range(-1.0..=1.0),
        }
    }

    /// `E eps^p` for integer `p`.
    pub fn moment(&self, p: u32) -> f64 {
        if p % 2 == 1 {
            return 0.0;
        }
        match self {
            WeightLaw::Rademacher => 1.0,
            WeightLaw::Uniform => 3f64.powi(p as i32 / 2) / (p as f64 + 1.0),
        }
    }

    fn bound(&self) -> f64 {
        match self {
            WeightLaw::Rademacher => 1.0,
            WeightLaw::Uniform => 3f64.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct EmpiricalFamily {
    /// `params[t][i] = P_{t,i}`.
    pub params: Vec<Vec<DenseTensor>>,
    pub law: WeightLaw,
}

#[derive(Deserialize)]
struct RawFamily {
    params: Vec<Vec<DenseTensor>>,
    law: WeightLaw,
}

impl TryFrom<RawFamily> for EmpiricalFamily {
    type Error = Error;
    fn try_from(r: RawFamily) -> Result<Self> {
        EmpiricalFamily::new(r.params, r.law)
    }
}

impl EmpiricalFamily {
    pub fn new(params: Vec<Vec<DenseTensor>>, law: WeightLaw) -> Result<Self> {
        ensure!(!params.is_empty(), Validation, "parameter set T is empty");
        let n = params[0].len();
        ensure!(n >= 1, Validation, "need at least one probability space");
        let shape = params[0][0].shape().clone();
        ensure!(shape.is_square(), Validation, "generator tensors must be square");
        for (t, row) in params.iter().enumerate() {
            ensure!(row.len() == n, Validation, "parameter {t} has {} components, expected {n}", row.len());
            for (i, p) in row.iter().enumerate() {
                ensure!(p.shape() == &shape, Validation, "P[{t}][{i}] has shape {}, expected {shape}", p.shape());
                ensure!(p.is_hermitian(p.default_tolerance()), Validation, "P[{t}][{i}] is not Hermitian");
            }
        }
        Ok(EmpiricalFamily { params, law })
    }

    /// `points x n` diagonal parameters of size `dim` with entries uniform on
    /// `[-1, 1]`; parameter `(t, i)` uses stream `t * n + i` of `seed`.
    pub fn random_diagonal(points: usize, n: usize, dim: usize, law: WeightLaw, seed: u64) -> Result<Self> {
        ensure!(points >= 1 && n >= 1 && dim >= 1, Validation, "points, n and dim must be >= 1");
        let params = (0..points)
            .map(|t| {
                (0..n)
                    .map(|i| {
                        let mut rng = stream_rng(seed, (t * n + i) as u64);
                        let diag: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
                        DenseTensor::diagonal(vec![dim], &diag)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        EmpiricalFamily::new(params, law)
    }

    pub fn n(&self) -> usize {
        self.params[0].len()
    }

    pub fn size(&self) -> usize {
        self.params.len()
    }

    pub fn row_modes(&self) -> &[usize] {
        self.params[0][0].shape().row_modes()
    }

    /// `a_i = max_t |P_{t,i}|_spec`.
    pub fn envelope(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                self.params
                    .iter()
                    .map(|row| row[i].norm(GaugeNorm::Spectral))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn upsilon(&self) -> f64 {
        self.law.bound() * self.envelope().into_iter().fold(0.0, f64::max)
    }

    /// `sigma^2 = |(1/n) sum_i A_i^2|_spec = (1/n) sum_i a_i^2`.
    pub fn sigma_sq(&self) -> f64 {
        self.envelope().iter().map(|a| a * a).sum::<f64>() / self.n() as f64
    }

    /// Realized `X_{t_i}` for one weight draw.
    pub fn realize(&self, eps: &[f64], t: usize) -> Vec<DenseTensor> {
        self.params[t].iter().zip(eps).map(|(p, e)| p.scale(*e)).collect()
    }

    /// `E_t` for one weight draw (generators are zero-mean).
    pub fn process_value(&self, eps: &[f64], t: usize) -> DenseTensor {
        let mut acc = DenseTensor::zeros(self.params[0][0].shape().clone());
        let inv = 1.0 / self.n() as f64;
        for (p, e) in self.params[t].iter().zip(eps) {
            acc.axpy(e * inv, p).expect("shapes validated");
        }
        acc
    }

    pub fn draw_weights(&self, seed: u64, samples: usize) -> Vec<f64> {
        let n = self.n();
        (0..samples)
            .into_par_iter()
            .flat_map_iter(|s| {
                let mut rng = stream_rng(seed, s as u64);
                (0..n).map(|_| self.law.draw(&mut rng)).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Per-sample `sup_t |E_t|_spec`.
    pub fn sup_samples(&self, seed: u64, samples: usize) -> Result<Vec<f64>> {
        ensure!(samples >= 1, Validation, "at least one sample is required");
        let n = self.n();
        let eps = self.draw_weights(seed, samples);
        Ok((0..samples)
            .into_par_iter()
            .map(|s| {
                let w = &eps[s * n..(s + 1) * n];
                (0..self.size())
                    .map(|t| self.process_value(w, t).norm(GaugeNorm::Spectral))
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    /// Metric space on `T` with ids `"d1"` and `"d2"`.
    pub fn metric_space(&self) -> Result<FiniteMetricSpace> {
        let m = self.size();
        let mut d1 = vec![0.0; m * m];
        let mut d2 = vec![0.0; m * m];
        for s in 0..m {
            for t in s + 1..m {
                let (a, b) = metrics_d1_d2(self, s, t)?;
                d1[s * m + t] = a;
                d1[t * m + s] = a;
                d2[s * m + t] = b;
                d2[t * m + s] = b;
            }
        }
        FiniteMetricSpace::new(m, "d1", d1)?.with_metric("d2", d2)
    }
}

/// `(1/n) sum_i (X_i - mean_i)`.
pub fn empirical_value(samples: &[DenseTensor], means: &[DenseTensor]) -> Result<DenseTensor> {
    ensure!(!samples.is_empty(), Validation, "no samples");
    ensure!(
        samples.len() == means.len(),
        Validation,
        "{} samples for {} probability spaces",
        samples.len(),
        means.len()
    );
    let mut acc = DenseTensor::zeros(samples[0].shape().clone());
    let inv = 1.0 / samples.len() as f64;
    for (x, m) in samples.iter().zip(means) {
        acc.axpy(inv, &x.sub(m)?)?;
    }
    Ok(acc)
}

/// `d1 = max_i |P_{t,i} - P_{s,i}|`, `d2 = ((1/n) sum_i |P_{t,i} - P_{s,i}|^2)^(1/2)`
/// with the spectral norm.
pub fn metrics_d1_d2(family: &EmpiricalFamily, s: usize, t: usize) -> Result<(f64, f64)> {
    ensure!(s < family.size() && t < family.size(), Validation, "index outside T");
    let mut d1 = 0.0f64;
    let mut sq = 0.0;
    for (a, b) in family.params[t].iter().zip(&family.params[s]) {
        let diff = a.sub(b)?;
        ensure!(diff.is_hermitian(diff.default_tolerance()), Domain, "difference is not Hermitian");
        let v = diff.norm(GaugeNorm::Spectral);
        d1 = d1.max(v);
        sq += v * v;
    }
    Ok((d1, (sq / family.n() as f64).sqrt()))
}

fn cor46_check(gamma2: f64, gamma1: f64, n: usize, sigma: f64, upsilon: f64) -> Result<()> {
    ensure!(n >= 1, Domain, "n must be >= 1");
    for (name, v) in [("gamma_2", gamma2), ("gamma_1", gamma1), ("sigma", sigma), ("upsilon", upsilon)] {
        ensure!(v >= 0.0 && v.is_finite(), Domain, "{name} must be finite and >= 0, got {v}");
    }
    Ok(())
}

/// `(gamma2/sqrt n + gamma1/n) + sqrt(p) sigma/sqrt n + p upsilon/n`.
pub fn cor46_moment_rhs(gamma2: f64, gamma1: f64, n: usize, sigma: f64, upsilon: f64, p: f64) -> Result<f64> {
    cor46_check(gamma2, gamma1, n, sigma, upsilon)?;
    ensure!(p >= 1.0, Domain, "p must be >= 1, got {p}");
    let rn = (n as f64).sqrt();
    Ok(gamma2 / rn + gamma1 / n as f64 + p.sqrt() * sigma / rn + p * upsilon / n as f64)
}

/// Threshold `C2 (gamma2/sqrt n + gamma1/n) + C3 (sigma sqrt(u)/sqrt n + upsilon u/n)`,
/// probability `e^(-u)`.
#[allow(clippy::too_many_arguments)]
pub fn cor46_tail(
    gamma2: f64,
    gamma1: f64,
    n: usize,
    sigma: f64,
    upsilon: f64,
    u: f64,
    c2: f64,
    c3: f64,
) -> Result<(f64, f64)> {
    cor46_check(gamma2, gamma1, n, sigma, upsilon)?;
    ensure!(u >= 1.0 && u.is_finite(), Domain, "u must be >= 1, got {u}");
    let nf = n as f64;
    let rn = nf.sqrt();
    let thr = c2 * (gamma2 / rn + gamma1 / nf) + c3 * (sigma * u.sqrt() / rn + upsilon * u / nf);
    Ok((thr, (-u).exp()))
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// Empirical check of `E X^p <= (p! upsilon^(p-2) / 2) A^2` for every
/// generator and `p = 2, 3, 4`: the smallest eigenvalue of the gap must be at
/// least minus `margin_se` standard errors of the estimated moment.
pub fn bernstein_moment_check(family: &EmpiricalFamily, seed: u64, samples: usize) -> Result<BoundReport> {
    ensure!(samples >= 2, Validation, "need at least two samples");
    let eps = family.draw_weights(seed, samples);
    let n = family.n();
    let env = family.envelope();
    let ups = family.upsilon();
    let inputs = serde_json::json!({ "seed": seed, "samples": samples, "upsilon": ups, "law": family.law });
    let mut report = BoundReport::new("bernstein_moment_condition", inputs, samples, DEFAULT_MARGIN_SE);
    let identity = DenseTensor::identity(family.params[0][0].shape().clone())?;
    for i in 0..n {
        let col: Vec<f64> = (0..samples).map(|s| eps[s * n + i]).collect();
        for p in 2u32..=4 {
            let powers: Vec<f64> = col.iter().map(|e| e.powi(p as i32)).collect();
            let mean = powers.iter().sum::<f64>() / samples as f64;
            let var = powers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            let se = (var / samples as f64).sqrt();
            let rhs = identity.scale(factorial(p) * ups.powi(p as i32 - 2) / 2.0 * env[i] * env[i]);
            for t in 0..family.size() {
                let param = &family.params[t][i];
                let mut pp = param.clone();
                for _ in 1..p {
                    pp = pp.einstein_product(param)?;
                }
                let gap = rhs.sub(&pp.scale(mean))?;
                let lam = gap.lambda_min()?;
                let slack = DEFAULT_MARGIN_SE * se * pp.norm(GaugeNorm::Spectral);
                report.push_value_row(format!("t={t} i={i} p={p}"), p as f64, slack, -lam);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DenseTensor {
        DenseTensor::diagonal(vec![v.len()], v).unwrap()
    }

    fn family() -> EmpiricalFamily {
        EmpiricalFamily::new(
            vec![
                vec![diag(&[1.0, 0.0]), diag(&[0.5, 0.5]), diag(&[0.0, 1.0])],
                vec![diag(&[0.0, 1.0]), diag(&[1.0, -1.0]), diag(&[0.2, 0.2])],
            ],
            WeightLaw::Rademacher,
        )
        .unwrap()
    }

    #[test]
    fn empirical_value_examples() {
        let a = diag(&[1.0, 2.0]);
        let z = empirical_value(&[a.clone(), a.clone()], &[a.clone(), a.clone()]).unwrap();
        assert!(z.data().iter().all(|x| x.norm() == 0.0));
        let m = diag(&[0.5, 0.5]);
        assert_eq!(empirical_value(std::slice::from_ref(&a), std::slice::from_ref(&m)).unwrap(), a.sub(&m).unwrap());
        let xs = [diag(&[1.0, 0.0]), diag(&[2.0, 3.0]), diag(&[6.0, -3.0])];
        let zero = DenseTensor::zeros(a.shape().clone());
        let v = empirical_value(&xs, &[zero.clone(), zero.clone(), zero.clone()]).unwrap();
        assert_eq!(v.at(0, 0).re, 3.0);
        assert_eq!(v.at(1, 1).re, 0.0);
        assert!(empirical_value(&xs, &[zero]).is_err());
    }

    #[test]
    fn metric_examples() {
        let f = family();
        assert_eq!(metrics_d1_d2(&f, 1, 1).unwrap(), (0.0, 0.0));
        let (d1, d2) = metrics_d1_d2(&f, 0, 1).unwrap();
        assert!(d2 <= d1);
        assert_eq!(d1, 1.5);
        let single = EmpiricalFamily::new(vec![vec![diag(&[1.0, 0.0])], vec![diag(&[0.0, 3.0])]], WeightLaw::Uniform).unwrap();
        let (d1, d2) = metrics_d1_d2(&single, 0, 1).unwrap();
        assert_eq!(d1, d2);
        assert!(f.metric_space().is_ok());
    }

    #[test]
    fn envelope_and_variance() {
        let f = family();
        assert_eq!(f.envelope(), vec![1.0, 1.0, 1.0]);
        assert_eq!(f.upsilon(), 1.0);
        assert_eq!(f.sigma_sq(), 1.0);
    }

    #[test]
    fn zero_parameters_give_zero_process() {
        let z = DenseTensor::zeros(diag(&[0.0, 0.0]).shape().clone());
        let f = EmpiricalFamily::new(vec![vec![z.clone(), z.clone()], vec![z.clone(), z]], WeightLaw::Rademacher).unwrap();
        assert!(f.sup_samples(1, 10).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(metrics_d1_d2(&f, 0, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn cor46_examples() {
        let v = cor46_moment_rhs(0.0, 0.0, 4, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(v, 0.5 + 0.5);
        let a = cor46_moment_rhs(2.0, 0.0, 4, 0.0, 0.0, 1.0).unwrap();
        let b = cor46_moment_rhs(2.0, 0.0, 16, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(a, 2.0 * b);
        let (t, p) = cor46_tail(1.0, 2.0, 4, 2.0, 4.0, 1.0, 3.0, 5.0).unwrap();
        assert!((t - (3.0 * (0.5 + 0.5) + 5.0 * (1.0 + 1.0))).abs() < 1e-12);
        assert!((p - (-1f64).exp()).abs() < 1e-15);
        let (t1, _) = cor46_tail(1.0, 2.0, 4, 0.0, 0.0, 1.0, 3.0, 5.0).unwrap();
        let (t2, _) = cor46_tail(1.0, 2.0, 4, 0.0, 0.0, 9.0, 3.0, 5.0).unwrap();
        assert_eq!(t1, t2);
        assert!(cor46_tail(1.0, 2.0, 4, 0.0, 0.0, 0.5, 3.0, 5.0).is_err());
    }

    #[test]
    fn moment_condition_holds_for_both_laws() {
        let f = family();
        assert!(bernstein_moment_check(&f, 5, 4000).unwrap().holds);
        let u = EmpiricalFamily::new(f.params.clone(), WeightLaw::Uniform).unwrap();
        assert!(bernstein_moment_check(&u, 5, 4000).unwrap().holds);
        assert!((WeightLaw::Uniform.moment(2) - 1.0).abs() < 1e-15);
    }
}
