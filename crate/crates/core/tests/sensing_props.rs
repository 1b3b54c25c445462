mod common;

use common::{entries, rel_close};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use trpchain::sensing::{
    coherence, draw_pattern, entropy_bound, fourier_unitary, rip_exact, rip_monte_carlo, sample_operator, sparsity,
    thm41_condition, thm41_g, SamplingPattern,
};
use trpchain::{DenseTensor, Shape};

/// Every support of size `1..=xi`, Gram blocks formed through the tensor
/// algebra and diagonalized with the general Hermitian solver.
fn brute_rip(a: &DenseTensor, xi: usize) -> f64 {
    let rows = a.shape().row_count();
    let cols = a.shape().col_count();
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << cols) {
        let k = mask.count_ones() as usize;
        if k > xi {
            continue;
        }
        let pick: Vec<usize> = (0..cols).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DenseTensor::from_fn(Shape::matrix(rows, k).unwrap(), |r, c| a.at(r, pick[c])).unwrap();
        let gram = sub.conjugate_transpose().einstein_product(&sub).unwrap();
        let ev = gram.hermitian_eigenvalues().unwrap();
        worst = worst.max(ev[k - 1] - 1.0).max(1.0 - ev[0]);
    }
    worst
}

fn operator() -> impl Strategy<Value = DenseTensor> {
    (1usize..=8, prop_oneof![Just(vec![4]), Just(vec![2, 4]), Just(vec![8]), Just(vec![2, 2, 2])]).prop_flat_map(
        |(rows, cols)| {
            let shape = Shape::new(vec![rows], cols).unwrap();
            entries(shape.len())
                .prop_map(move |d| DenseTensor::new(shape.clone(), d).unwrap().scale(1.0 / (rows as f64).sqrt()))
        },
    )
}

fn random_unitary(n: usize, seed: u64) -> DenseTensor {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
    let q = m.qr().q();
    DenseTensor::fold(&q, Shape::square(vec![n]).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_matches_brute_force(a in operator(), xi in 1usize..=3) {
        let exact = rip_exact(&a, xi).unwrap();
        prop_assert!((exact - brute_rip(&a, xi)).abs() <= 1e-10);
    }

    #[test]
    fn constant_grows_with_xi(a in operator()) {
        let taus: Vec<f64> = (1..=4).map(|xi| rip_exact(&a, xi).unwrap()).collect();
        prop_assert!(taus.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(taus.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn mode_layout_does_not_matter(a in operator(), xi in 1usize..=3) {
        let flat = DenseTensor::new(
            Shape::matrix(a.shape().row_count(), a.shape().col_count()).unwrap(),
            a.data().to_vec(),
        ).unwrap();
        prop_assert_eq!(rip_exact(&a, xi).unwrap(), rip_exact(&flat, xi).unwrap());
    }

    #[test]
    fn sampled_rows_are_scaled_extractions(target in 1usize..=16, seed in any::<u64>()) {
        let u = fourier_unitary(&[4, 4]).unwrap();
        let p = draw_pattern(&[4, 4], target, seed).unwrap();
        let op = sample_operator(&u, &p).unwrap();
        if let Some(t) = &op.op {
            let scale = (16.0 / target as f64).sqrt();
            for (r, &j) in p.selected.iter().enumerate() {
                let ji = Shape::multi_index(&[4, 4], j);
                for c in 0..16 {
                    let ci = Shape::multi_index(&[4, 4], c);
                    let want = u.get(&ji, &ci).unwrap() * scale;
                    prop_assert!((t.at(r, c) - want).norm() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn sparse_responses_obey_coherence_bound(target in 1usize..=16, seed in any::<u64>(), xi in 1usize..=4) {
        for u in [fourier_unitary(&[4, 4]).unwrap(), DenseTensor::fold(
            &random_unitary(16, seed).unfold(), Shape::square(vec![4, 4]).unwrap()).unwrap()]
        {
            let p = draw_pattern(&[4, 4], target, seed).unwrap();
            let op = sample_operator(&u, &p).unwrap();
            let bound = coherence(&u) * (xi as f64 / target as f64).sqrt();
            prop_assert!(op.sparse_response_max(xi) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn eta_is_nonincreasing_in_tau(seed in any::<u64>()) {
        let u = fourier_unitary(&[8]).unwrap();
        let r = rip_monte_carlo(&u, 4, 2, 0.3, 30, seed).unwrap();
        let etas: Vec<f64> = (0..20).map(|i| r.eta_at(0.1 * i as f64)).collect();
        prop_assert!(etas.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.eta_interval.0 <= r.eta_hat && r.eta_hat <= r.eta_interval.1);
    }

    #[test]
    fn sparsity_counts_mask(mask in prop::collection::vec(any::<bool>(), 24)) {
        let data: Vec<f64> = mask.iter().enumerate().map(|(i, &m)| if m { 1.0 + i as f64 } else { 0.0 }).collect();
        let x = DenseTensor::from_real(Shape::new(vec![1], vec![2, 3, 4]).unwrap(), &data).unwrap();
        prop_assert_eq!(sparsity(&x), mask.iter().filter(|&&m| m).count());
    }
}

#[test]
fn coherence_matches_entry_scan() {
    let u = random_unitary(6, 42);
    assert!(u.is_unitary(1e-10));
    let mut top = 0.0f64;
    for r in 0..6 {
        for c in 0..6 {
            top = top.max(u.get(&[r], &[c]).unwrap().norm());
        }
    }
    assert!(rel_close(coherence(&u), 6f64.sqrt() * top, 1e-15));
    let f = fourier_unitary(&[4, 8, 8]).unwrap();
    assert!(f.is_unitary(1e-10));
    assert!((coherence(&f) - 1.0).abs() < 1e-10);
}

#[test]
fn pattern_size_matches_binomial_mean() {
    let draws = 10_000;
    let total: usize = (0..draws).map(|s| draw_pattern(&[4, 4], 4, s).unwrap().selected.len()).sum();
    let mean = total as f64 / (draws as f64 * 16.0);
    let se = (0.25f64 * 0.75 / (16.0 * draws as f64)).sqrt();
    assert!((mean - 0.25).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn full_pattern_keeps_operator() {
    let u = fourier_unitary(&[2, 4]).unwrap();
    let p = SamplingPattern { selected: (0..8).collect(), source_dims: vec![2, 4], target_size: 8, seed: 0 };
    let op = sample_operator(&u, &p).unwrap().op.unwrap();
    assert_eq!(op.data(), u.data());
    assert!(rip_exact(&op, 3).unwrap() < 1e-12);
}

#[test]
fn sampling_condition_flips_once() {
    let flips = |c4: f64, c5: f64| {
        let states: Vec<bool> = (1..=4096)
            .map(|rows| thm41_condition(3, 1.0, 0.5, 0.05, &[rows], &[4096], c4, c5).unwrap())
            .collect();
        (states.windows(2).filter(|w| w[0] != w[1]).count(), states[4095])
    };
    assert_eq!(flips(0.1, 1.0), (1, true));
    assert_eq!(flips(0.05, 2.0), (1, true));
}

#[test]
fn g_decreases_and_entropy_prefactor_scales() {
    let g: Vec<f64> = [16, 32, 64, 128].iter().map(|&i| thm41_g(0.1, 4, 1.0, &[i], &[256]).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] < w[0]));
    let le = 10f64.ln();
    let (li, lj, lx) = (64f64.ln(), 256f64.ln(), 4f64.ln());
    let r: f64 = 4.0 / 64.0;
    let oracle = r.sqrt() * li.sqrt() * lj.sqrt() * lx + r * li * lj * lx * lx + (le * r).sqrt() + le * r;
    assert!(rel_close(thm41_g(0.1, 4, 1.0, &[64], &[256]).unwrap(), oracle, 1e-14));
    let log_term = |i: f64| (4.0 * i.ln().sqrt() * 256f64.ln().sqrt()).ln();
    let a = entropy_bound(4, 1.0, &[64], &[256]).unwrap() / log_term(64.0);
    let b = entropy_bound(4, 1.0, &[128], &[256]).unwrap() / log_term(128.0);
    assert!(rel_close(a / b, 2f64.sqrt(), 1e-12));
}
