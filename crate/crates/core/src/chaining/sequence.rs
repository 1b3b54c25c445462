use rayon::prelude::*;
use serde::Serialize;

use super::{FiniteMetricSpace, Metric};
use crate::error::{ensure, Error, Result};

/// Largest `|T_n|` allowed at level `n`: 1 for `n = 0`, `2^(2^n)` afterwards
/// (saturating at `usize::MAX`).
pub fn level_cap(n: usize) -> usize {
    match n {
        0 => 1,
        n if n >= 6 => usize::MAX,
        n => 1usize << (1u32 << n),
    }
}

/// `n' = floor(log2 p)` for `p >= 1`.
pub fn truncation_level(p: f64) -> Result<usize> {
    ensure!(p >= 1.0 && !p.is_nan(), Domain, "truncation requires p >= 1, got {p}");
    let mut n = 0usize;
    while n < 1023 && 2f64.powi(n as i32 + 1) <= p {
        n += 1;
    }
    Ok(n)
}

/// Subsets `T_0, T_1, .., T_{n_max}` of `{0, .., size-1}` with `|T_0| = 1`,
/// `|T_n| <= 2^(2^n)` and `T_{n_max} = T`. Levels need not be nested.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AdmissibleSequence {
    #[serde(skip)]
    size: usize,
    levels: Vec<Vec<usize>>,
}

impl AdmissibleSequence {
    pub fn new(size: usize, levels: Vec<Vec<usize>>) -> Result<Self> {
        ensure!(size >= 1, Validation, "index set must be nonempty");
        ensure!(!levels.is_empty(), Validation, "sequence has no levels");
        ensure!(
            levels[0].len() == 1,
            Validation,
            "|T_0| must be 1, got {}",
            levels[0].len()
        );
        for (n, level) in levels.iter().enumerate() {
            ensure!(
                level.len() <= level_cap(n),
                Validation,
                "|T_{n}| = {} exceeds 2^(2^{n})",
                level.len()
            );
            let mut seen = vec![false; size];
            for &t in level {
                ensure!(t < size, Validation, "T_{n} contains {t}, outside 0..{size}");
                ensure!(!seen[t], Validation, "T_{n} lists {t} twice");
                seen[t] = true;
            }
        }
        let last = levels.len() - 1;
        ensure!(
            levels[last].len() == size,
            Validation,
            "last level T_{last} has {} points, must equal T ({size})",
            levels[last].len()
        );
        Ok(AdmissibleSequence { size, levels })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    fn check_space(&self, metric: &Metric<'_>) -> Result<()> {
        ensure!(
            metric.size() == self.size,
            Validation,
            "sequence is over {} points but the space has {}",
            self.size,
            metric.size()
        );
        Ok(())
    }
}

/// Nearest-point projections `pi_n : T -> T_n` for every stored level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainMaps {
    pub projections: Vec<Vec<usize>>,
}

fn nearest(metric: &Metric<'_>, t: usize, level: &[usize]) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &s in level {
        let key = (metric.d(t, s), s);
        if key.0 < best.0 || (key.0 == best.0 && key.1 < best.1) {
            best = key;
        }
    }
    best.1
}

pub fn chain_maps(
    space: &FiniteMetricSpace,
    metric_id: &str,
    seq: &AdmissibleSequence,
) -> Result<ChainMaps> {
    let metric = space.metric(metric_id)?;
    seq.check_space(&metric)?;
    let projections = seq
        .levels
        .iter()
        .map(|level| (0..seq.size).map(|t| nearest(&metric, t, level)).collect())
        .collect();
    Ok(ChainMaps { projections })
}

fn chain_sum(metric: &Metric<'_>, levels: &[Vec<usize>], from: usize, beta: f64, t: usize) -> f64 {
    levels
        .iter()
        .enumerate()
        .skip(from)
        .map(|(n, level)| (n as f64 / beta).exp2() * metric.dist_to_set(t, level))
        .sum()
}

fn sup_chain(metric: &Metric<'_>, levels: &[Vec<usize>], from: usize, beta: f64) -> f64 {
    (0..metric.size())
        .into_par_iter()
        .map(|t| chain_sum(metric, levels, from, beta, t))
        .reduce(|| 0.0, f64::max)
}

fn check_beta(beta: f64) -> Result<()> {
    ensure!(
        beta > 0.0 && beta.is_finite(),
        Domain,
        "beta must be positive and finite, got {beta}"
    );
    Ok(())
}

/// `sup_t sum_{n >= 0} 2^(n/beta) d(t, T_n)`, an upper bound on `gamma_beta`.
pub fn gamma_value(
    space: &FiniteMetricSpace,
    metric_id: &str,
    beta: f64,
    seq: &AdmissibleSequence,
) -> Result<f64> {
    check_beta(beta)?;
    let metric = space.metric(metric_id)?;
    seq.check_space(&metric)?;
    Ok(sup_chain(&metric, &seq.levels, 0, beta))
}

/// Same sum restricted to `n >= floor(log2 p)`.
pub fn gamma_truncated_value(
    space: &FiniteMetricSpace,
    metric_id: &str,
    beta: f64,
    p: f64,
    seq: &AdmissibleSequence,
) -> Result<f64> {
    check_beta(beta)?;
    let from = truncation_level(p)?;
    let metric = space.metric(metric_id)?;
    seq.check_space(&metric)?;
    Ok(sup_chain(&metric, &seq.levels, from, beta))
}

/// Farthest-first order from `root`; ties go to the lowest index.
fn farthest_first(metric: &Metric<'_>, root: usize) -> Vec<usize> {
    let n = metric.size();
    let mut order = vec![root];
    let mut gap: Vec<f64> = (0..n).map(|t| metric.d(t, root)).collect();
    gap[root] = -1.0;
    while order.len() < n {
        let (next, _) = gap
            .iter()
            .enumerate()
            .fold((usize::MAX, -1.0), |acc, (t, &g)| if g > acc.1 { (t, g) } else { acc });
        order.push(next);
        gap[next] = -1.0;
        for (t, g) in gap.iter_mut().enumerate() {
            if *g >= 0.0 {
                *g = g.min(metric.d(t, next));
            }
        }
    }
    order
}

fn prefix_levels(order: &[usize]) -> Vec<Vec<usize>> {
    let n = order.len();
    let mut levels = Vec::new();
    loop {
        let k = level_cap(levels.len()).min(n);
        levels.push(order[..k].to_vec());
        if k == n {
            return levels;
        }
    }
}

/// Heuristic minimizer of the gamma functional.
///
/// Every root (or the 1-center alone when `|T| > 256`) seeds a farthest-first
/// traversal; `T_n` is the longest prefix allowed by the level cap. The root
/// giving the smallest `gamma_value` wins, ties to the lowest index.
pub fn build_admissible_greedy(
    space: &FiniteMetricSpace,
    metric_id: &str,
    beta: f64,
) -> Result<AdmissibleSequence> {
    check_beta(beta)?;
    let metric = space.metric(metric_id)?;
    let n = metric.size();
    let roots: Vec<usize> = if n <= 256 {
        (0..n).collect()
    } else {
        let ecc = |t: usize| (0..n).map(|s| metric.d(t, s)).fold(0.0, f64::max);
        let center = (0..n).fold(0, |best, t| if ecc(t) < ecc(best) { t } else { best });
        vec![center]
    };
    let (_, levels) = roots
        .par_iter()
        .map(|&r| {
            let levels = prefix_levels(&farthest_first(&metric, r));
            let value = (0..n)
                .map(|t| chain_sum(&metric, &levels, 0, beta, t))
                .fold(0.0, f64::max);
            (value, levels)
        })
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one root");
    AdmissibleSequence::new(n, levels)
}

fn for_each_subset(n: usize, max_k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, max_k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if !cur.is_empty() {
            f(cur);
        }
        if cur.len() == max_k {
            return;
        }
        for s in start..n {
            cur.push(s);
            rec(s + 1, n, max_k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, max_k, &mut Vec::new(), f);
}

/// Exact `gamma_beta` for `|T| <= 16` together with an optimal sequence.
pub fn gamma_exhaustive_sequence(
    space: &FiniteMetricSpace,
    metric_id: &str,
    beta: f64,
) -> Result<(f64, AdmissibleSequence)> {
    check_beta(beta)?;
    let metric = space.metric(metric_id)?;
    let n = metric.size();
    if n > 16 {
        return Err(Error::Capacity(format!(
            "exhaustive gamma supports |T| <= 16, got {n}"
        )));
    }
    if n == 1 {
        return Ok((0.0, AdmissibleSequence::new(1, vec![vec![0]])?));
    }
    let w1 = (1.0 / beta).exp2();
    let mut subsets = Vec::new();
    for_each_subset(n, 4, &mut |s| subsets.push(s.to_vec()));
    let (value, t0, t1) = (0..n)
        .into_par_iter()
        .map(|t0| {
            let mut best = (f64::INFINITY, t0, 0usize);
            for (k, t1) in subsets.iter().enumerate() {
                let v = (0..n)
                    .map(|t| metric.d(t, t0) + w1 * metric.dist_to_set(t, t1))
                    .fold(0.0, f64::max);
                if v < best.0 {
                    best = (v, t0, k);
                }
            }
            best
        })
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("nonempty space");
    let mut levels = vec![vec![t0], subsets[t1].clone()];
    if subsets[t1].len() < n {
        levels.push((0..n).collect());
    }
    Ok((value, AdmissibleSequence::new(n, levels)?))
}

/// Exact `gamma_beta` by enumerating `T_0` and every `T_1` with at most four
/// points; `T_2 = T` is optimal because `2^(2^2) = 16 >= |T|`.
pub fn gamma_exhaustive(space: &FiniteMetricSpace, metric_id: &str, beta: f64) -> Result<f64> {
    gamma_exhaustive_sequence(space, metric_id, beta).map(|(v, _)| v)
}
