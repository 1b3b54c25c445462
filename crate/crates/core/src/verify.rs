//! Monte Carlo checks of the two bounds with fully explicit constants:
//! the tensor Azuma inequality and the tensor Bernstein inequality.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{azuma_tail, bernstein_tail};
use crate::error::{ensure, Result};
use crate::process::{Family, ProcessSpec};
use crate::report::{BoundReport, DEFAULT_MARGIN_SE};
use crate::rng::stream_rng;
use crate::tensor::{DenseTensor, GaugeNorm, Shape};

/// `n` random Hermitian tensors of shape `(modes; modes)`, each normalized to
/// spectral norm 1. Stream `i` of `seed` produces generator `i`.
pub fn random_hermitian_generators(modes: &[usize], n: usize, seed: u64) -> Result<Vec<DenseTensor>> {
    let shape = Shape::square(modes.to_vec())?;
    (0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let g = DenseTensor::from_fn(shape.clone(), |_, _| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            })?;
            let h = g.add(&g.conjugate_transpose())?;
            let norm = h.norm(GaugeNorm::Spectral);
            ensure!(norm > 0.0, Domain, "drew a zero generator");
            Ok(h.scale(1.0 / norm))
        })
        .collect()
}

fn check_generators(generators: &[DenseTensor]) -> Result<()> {
    ensure!(!generators.is_empty(), Validation, "no generators");
    let shape = generators[0].shape();
    for (i, g) in generators.iter().enumerate() {
        ensure!(g.shape() == shape, Validation, "generator {i} has shape {}, expected {shape}", g.shape());
        ensure!(g.is_hermitian(g.default_tolerance()), Validation, "generator {i} is not Hermitian");
    }
    Ok(())
}

#[derive(Serialize)]
struct Inputs<'a> {
    modes: &'a [usize],
    steps: usize,
    seed: u64,
    samples: usize,
    sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    upsilon: Option<f64>,
}

fn lambda_max_samples(spec: &ProcessSpec, seed: u64, samples: usize, scale: f64) -> Vec<f64> {
    let dim = spec.dim();
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let w: Vec<f64> = (0..dim).map(|k| spec.family.sample_weight(k, dim, &mut rng)).collect();
            spec.value(&w, 0).scale(scale).lambda_max().expect("Hermitian by construction")
        })
        .collect()
}

fn frequency(samples: &[f64], threshold: f64) -> f64 {
    samples.iter().filter(|&&x| x >= threshold).count() as f64 / samples.len() as f64
}

/// Rademacher martingale `X_n = sum_k eps_k D_k`. The differences satisfy
/// `(eps_k D_k)^2 = D_k^2`, so `sigma^2 = |sum_k D_k^2|`. Rows are
/// `u = m sigma` for each `m` in `multiples`.
pub fn verify_azuma(generators: &[DenseTensor], seed: u64, samples: usize, multiples: &[f64]) -> Result<BoundReport> {
    check_generators(generators)?;
    ensure!(samples >= 1, Validation, "at least one sample is required");
    let mut sq = DenseTensor::zeros(generators[0].shape().clone());
    for d in generators {
        sq.axpy(1.0, &d.einstein_product(d)?)?;
    }
    let sigma = sq.norm(GaugeNorm::Spectral).sqrt();
    ensure!(sigma > 0.0, Domain, "all martingale differences vanish");
    let spec = ProcessSpec::new(
        Family::RademacherMartingale,
        vec![vec![1.0; generators.len()]],
        generators.to_vec(),
        2.0,
        1.0,
        GaugeNorm::Spectral,
    )?;
    let modes = generators[0].shape().row_modes();
    let stats = lambda_max_samples(&spec, seed, samples, 1.0);
    let inputs = Inputs { modes, steps: generators.len(), seed, samples, sigma, upsilon: None };
    let mut report = BoundReport::new(
        "tensor_azuma",
        serde_json::to_value(inputs).expect("inputs serialize"),
        samples,
        DEFAULT_MARGIN_SE,
    );
    for &m in multiples {
        let u = m * sigma;
        report.push_tail_row(format!("u={m}sigma"), u, u, azuma_tail(sigma, u, modes)?, frequency(&stats, u));
    }
    Ok(report)
}

/// i.i.d. `X_i = w_i B_i` with `w_i` uniform on `[-sqrt 3, sqrt 3]`, averaged
/// over `n` terms. Envelopes `A_i = |B_i| I` and `upsilon = sqrt 3 max_i |B_i|`
/// satisfy the moment condition.
pub fn verify_bernstein(generators: &[DenseTensor], seed: u64, samples: usize, u_grid: &[f64]) -> Result<BoundReport> {
    check_generators(generators)?;
    ensure!(samples >= 1, Validation, "at least one sample is required");
    let n = generators.len();
    let norms: Vec<f64> = generators.iter().map(|g| g.norm(GaugeNorm::Spectral)).collect();
    let sigma = (norms.iter().map(|a| a * a).sum::<f64>() / n as f64).sqrt();
    let upsilon = 3f64.sqrt() * norms.iter().copied().fold(0.0, f64::max);
    ensure!(sigma > 0.0, Domain, "all generators vanish");
    let spec = ProcessSpec::new(
        Family::IidBernstein,
        vec![vec![1.0; n]],
        generators.to_vec(),
        1.0,
        1.0,
        GaugeNorm::Spectral,
    )?;
    let modes = generators[0].shape().row_modes();
    let stats = lambda_max_samples(&spec, seed, samples, 1.0 / n as f64);
    let inputs = Inputs { modes, steps: n, seed, samples, sigma, upsilon: Some(upsilon) };
    let mut report = BoundReport::new(
        "tensor_bernstein",
        serde_json::to_value(inputs).expect("inputs serialize"),
        samples,
        DEFAULT_MARGIN_SE,
    );
    for &u in u_grid {
        let (thr, prob) = bernstein_tail(sigma, upsilon, n, u, modes)?;
        report.push_tail_row(format!("u={u}"), u, thr, prob, frequency(&stats, thr));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_hermitian_and_normalized() {
        let g = random_hermitian_generators(&[2, 2], 3, 9).unwrap();
        for h in &g {
            assert!(h.is_hermitian(1e-12));
            assert!((h.norm(GaugeNorm::Spectral) - 1.0).abs() < 1e-12);
        }
        assert_eq!(g, random_hermitian_generators(&[2, 2], 3, 9).unwrap());
    }

    #[test]
    fn azuma_holds_on_small_martingale() {
        let g = random_hermitian_generators(&[2], 20, 1).unwrap();
        let r = verify_azuma(&g, 2, 2000, &[2.0, 3.0, 4.0]).unwrap();
        assert!(r.holds, "{}", r.to_csv());
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn bernstein_holds_on_small_family() {
        let g = random_hermitian_generators(&[2], 10, 3).unwrap();
        let r = verify_bernstein(&g, 4, 2000, &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.holds, "{}", r.to_csv());
    }

    #[test]
    fn rejects_mixed_shapes() {
        let mut g = random_hermitian_generators(&[2], 2, 0).unwrap();
        g.extend(random_hermitian_generators(&[3], 1, 0).unwrap());
        assert!(verify_azuma(&g, 0, 10, &[1.0]).is_err());
    }
}
