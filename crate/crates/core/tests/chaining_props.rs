mod common;

use common::{planar_space, rel_close};
use proptest::prelude::*;
use trpchain::chaining::{
    build_admissible_greedy, covering_number, dudley_integral, gamma_exhaustive, gamma_exhaustive_sequence,
    gamma_prime_value, gamma_truncated_value, gamma_value, intersect_partitions, parse_metric_space,
    write_metric_space, AdmissibleSequence, FiniteMetricSpace, PartitionSequence,
};

/// Brute force over every `(T_0, T_1)` with `|T_1| <= 4`, written without
/// the library's pruning or chain sums.
fn brute_gamma(space: &FiniteMetricSpace, beta: f64) -> f64 {
    let m = space.metric("d").unwrap();
    let n = m.size();
    let c = 2f64.powf(1.0 / beta);
    let mut best = f64::INFINITY;
    for t0 in 0..n {
        for mask in 1u32..(1 << n) {
            if mask.count_ones() > 4 {
                continue;
            }
            let mut worst = 0.0f64;
            for t in 0..n {
                let to_t1 = (0..n)
                    .filter(|&s| mask & (1 << s) != 0)
                    .map(|s| m.d(t, s))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(m.d(t, t0) + c * to_t1);
            }
            best = best.min(worst);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exhaustive_matches_brute_force(space in planar_space(9), beta in 0.5..3.0f64) {
        let g = gamma_exhaustive(&space, "d", beta).unwrap();
        prop_assert!(rel_close(g, brute_gamma(&space, beta), 1e-12));
    }

    #[test]
    fn greedy_dominates_exhaustive(space in planar_space(12), beta in 0.5..3.0f64) {
        let seq = build_admissible_greedy(&space, "d", beta).unwrap();
        let greedy = gamma_value(&space, "d", beta, &seq).unwrap();
        let (exact, best) = gamma_exhaustive_sequence(&space, "d", beta).unwrap();
        prop_assert!(greedy >= exact * (1.0 - 1e-12));
        prop_assert!(rel_close(gamma_value(&space, "d", beta, &best).unwrap(), exact, 1e-12));
    }

    #[test]
    fn truncation_at_one_is_identity(space in planar_space(12), beta in 0.5..3.0f64) {
        let seq = build_admissible_greedy(&space, "d", beta).unwrap();
        let full = gamma_value(&space, "d", beta, &seq).unwrap();
        prop_assert_eq!(gamma_truncated_value(&space, "d", beta, 1.0, &seq).unwrap(), full);
        let mut last = full;
        for p in [2.0, 4.0, 16.0, 256.0] {
            let v = gamma_truncated_value(&space, "d", beta, p, &seq).unwrap();
            prop_assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
    }

    #[test]
    fn gamma_is_homogeneous(space in planar_space(10), c in 0.1..10.0f64) {
        let a = gamma_exhaustive(&space, "d", 2.0).unwrap();
        let b = gamma_exhaustive(&space.scaled(c).unwrap(), "d", 2.0).unwrap();
        prop_assert!(rel_close(b, c * a, 1e-12));
        let da = dudley_integral(&space, "d").unwrap();
        let db = dudley_integral(&space.scaled(c).unwrap(), "d").unwrap();
        prop_assert!(rel_close(db, c * da, 1e-10));
    }

    #[test]
    fn gamma_is_permutation_invariant(space in planar_space(10), seed in any::<u64>()) {
        let n = space.size();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = gamma_exhaustive(&space, "d", 1.0).unwrap();
        let b = gamma_exhaustive(&space.permuted(&perm).unwrap(), "d", 1.0).unwrap();
        prop_assert!(rel_close(a, b, 1e-12));
    }

    #[test]
    fn covering_number_is_monotone(space in planar_space(14)) {
        let m = space.metric("d").unwrap();
        let diam = m.diameter();
        let mut prev = usize::MAX;
        for k in 1..=8 {
            let u = diam * k as f64 / 8.0 + 1e-12;
            let n = covering_number(&space, "d", u).unwrap();
            prop_assert!(n <= prev && n >= 1);
            prev = n;
        }
        prop_assert_eq!(prev, 1);
    }

    #[test]
    fn text_round_trip(space in planar_space(8)) {
        prop_assert_eq!(parse_metric_space(&write_metric_space(&space)).unwrap(), space);
    }

    #[test]
    fn intersection_refines_both(bits in prop::collection::vec(any::<bool>(), 8), other in prop::collection::vec(any::<bool>(), 8)) {
        let halves = |b: &[bool]| {
            let (a, c): (Vec<usize>, Vec<usize>) = (0..8).partition(|&i| b[i]);
            let level1: Vec<Vec<usize>> = [a, c].into_iter().filter(|v| !v.is_empty()).collect();
            PartitionSequence::new(8, vec![vec![(0..8).collect()], level1, (0..8).map(|i| vec![i]).collect()]).unwrap()
        };
        let (p, q) = (halves(&bits), halves(&other));
        let r = intersect_partitions(&[p.clone(), q.clone()]).unwrap();
        for level in 0..r.levels().len() {
            for t in 0..8 {
                let cell = r.cell(level, t);
                let pl = level.saturating_sub(1).min(p.levels().len() - 1);
                prop_assert!(cell.iter().all(|s| p.cell(pl, t).contains(s) && q.cell(pl, t).contains(s)));
            }
        }
    }
}

#[test]
fn gamma_prime_counts_cell_diameters() {
    let space = FiniteMetricSpace::from_line("d", &[0.0, 1.0, 3.0, 4.0]).unwrap();
    let parts = PartitionSequence::new(
        4,
        vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 1], vec![2, 3]], (0..4).map(|i| vec![i]).collect()],
    )
    .unwrap();
    // sup_t [diam T + 2^(1/2) diam A_1(t)] = 4 + sqrt 2.
    let v = gamma_prime_value(&space, "d", 2.0, &parts).unwrap();
    assert!((v - (4.0 + 2f64.sqrt())).abs() < 1e-12);
}

#[test]
fn singleton_has_zero_functionals() {
    let space = FiniteMetricSpace::from_line("d", &[2.0]).unwrap();
    let seq = AdmissibleSequence::new(1, vec![vec![0]]).unwrap();
    assert_eq!(gamma_value(&space, "d", 2.0, &seq).unwrap(), 0.0);
    assert_eq!(gamma_exhaustive(&space, "d", 2.0).unwrap(), 0.0);
    assert_eq!(dudley_integral(&space, "d").unwrap(), 0.0);
}
