mod common;

use proptest::prelude::*;
use trpchain::process::{
    empirical_sup_moment, empirical_tail, fit_tail_exponent, sample_ensemble, verify_increment_tail, Family,
    ProcessSpec,
};
use trpchain::{DenseTensor, GaugeNorm};

fn basis(scale: f64) -> Vec<DenseTensor> {
    vec![
        DenseTensor::diagonal(vec![2], &[scale, -scale]).unwrap(),
        DenseTensor::diagonal(vec![2], &[scale, 0.5 * scale]).unwrap(),
    ]
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::GaussianLinear),
        Just(Family::SubexponentialLinear),
        Just(Family::RademacherMartingale),
        Just(Family::IidBernstein),
        Just(Family::MixedLinear { gaussian_terms: 1 }),
    ]
}

fn spec_with(family: Family, coeffs: &[(f64, f64)], scale: f64, gauge: GaugeNorm) -> ProcessSpec {
    let map = coeffs.iter().map(|&(a, b)| vec![a, b]).collect();
    ProcessSpec::new(family, map, basis(scale), 2.0, 2.0, gauge).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 2..6)
}

fn gauge() -> impl Strategy<Value = GaugeNorm> {
    prop_oneof![Just(GaugeNorm::Frobenius), Just(GaugeNorm::Spectral), Just(GaugeNorm::Nuclear)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ensembles_are_reproducible(f in family(), c in coeffs(), seed in any::<u64>()) {
        let spec = spec_with(f, &c, 1.0, GaugeNorm::Spectral);
        let space = spec.metric_space().unwrap();
        let a = sample_ensemble(&spec, &space, seed, 30).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_ensemble(&spec, &space, seed, 30).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn statistics_scale_with_basis(f in family(), c in coeffs(), g in gauge(), k in 0u32..4) {
        // Powers of two keep every product exact.
        let scale = f64::from(1u32 << k);
        let base = spec_with(f, &c, 1.0, g);
        let big = spec_with(f, &c, scale, g);
        let space = base.metric_space().unwrap();
        let a = sample_ensemble(&base, &space, 5, 40).unwrap();
        let b = sample_ensemble(&big, &space, 5, 40).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let ma = empirical_sup_moment(&a, &space, p, 0).unwrap();
            let mb = empirical_sup_moment(&b, &space, p, 0).unwrap();
            prop_assert!((mb - scale * ma).abs() <= 1e-12 * mb.max(1.0));
        }
    }

    #[test]
    fn survival_is_monotone(f in family(), c in coeffs(), seed in any::<u64>()) {
        let spec = spec_with(f, &c, 1.0, GaugeNorm::Spectral);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, seed, 60).unwrap();
        let grid: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
        let curve = empirical_tail(&ens, &space, 0, &grid).unwrap();
        prop_assert!(curve.survival.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(curve.survival.iter().all(|s| (0.0..=1.0).contains(s)));
        for (s, c) in curve.survival.iter().zip(&curve.counts) {
            prop_assert_eq!(*s, *c as f64 / 60.0);
        }
    }

    #[test]
    fn sup_moment_grows_with_order(f in family(), c in coeffs(), seed in any::<u64>()) {
        let spec = spec_with(f, &c, 1.0, GaugeNorm::Spectral);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, seed, 50).unwrap();
        let mut last = 0.0;
        for p in [1.0, 1.5, 2.0, 4.0, 8.0] {
            let m = empirical_sup_moment(&ens, &space, p, 0).unwrap();
            prop_assert!(m >= last * (1.0 - 1e-12));
            last = m;
        }
    }

    #[test]
    fn restricting_t_never_increases_statistics(f in family(), c in coeffs(), seed in any::<u64>()) {
        let spec = spec_with(f, &c, 1.0, GaugeNorm::Spectral);
        let space = spec.metric_space().unwrap();
        let ens = sample_ensemble(&spec, &space, seed, 50).unwrap();
        let all = ens.sup_statistic(0, None).unwrap();
        let sub = ens.sup_statistic(0, Some(&[0, 1])).unwrap();
        prop_assert!(all.iter().zip(&sub).all(|(a, b)| b <= a));
    }
}

#[test]
fn laplace_tail_exponent_is_one() {
    let spec = ProcessSpec::new(
        Family::SubexponentialLinear,
        vec![vec![0.0], vec![1.0]],
        vec![DenseTensor::diagonal(vec![2], &[1.0, -1.0]).unwrap()],
        1.0,
        1.0,
        GaugeNorm::Spectral,
    )
    .unwrap();
    let space = spec.metric_space().unwrap();
    let ens = sample_ensemble(&spec, &space, 11, 20_000).unwrap();
    // |Laplace| is Exp(1): survival exp(-u) exactly.
    let grid: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
    let curve = empirical_tail(&ens, &space, 0, &grid).unwrap();
    let fit = fit_tail_exponent(&curve).unwrap();
    assert!((fit.beta_hat - 1.0).abs() < 0.1, "{fit:?}");
}

#[test]
fn calibrated_gaussian_increments_pass_and_cubic_claim_fails() {
    let spec = ProcessSpec::new(
        Family::GaussianLinear,
        vec![vec![0.0], vec![1.0], vec![2.5]],
        vec![DenseTensor::diagonal(vec![2], &[1.0, -1.0]).unwrap()],
        2.0,
        2.0,
        GaugeNorm::Spectral,
    )
    .unwrap();
    let space = spec.metric_space().unwrap();
    let ens = sample_ensemble(&spec, &space, 4, 10_000).unwrap();
    let grid = [0.25, 0.5, 1.0, 1.5, 2.0];
    assert!(verify_increment_tail(&ens, &space, "d", 2.0, &grid).unwrap().holds);
    let spec1 = ProcessSpec { metric_scale: 1.0, ..spec.clone() };
    let space1 = spec1.metric_space().unwrap();
    let ens1 = sample_ensemble(&spec1, &space1, 4, 10_000).unwrap();
    assert!(!verify_increment_tail(&ens1, &space1, "d", 3.0, &[1.0, 1.25, 1.5]).unwrap().holds);
}
