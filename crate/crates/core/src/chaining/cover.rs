use super::{FiniteMetricSpace, Metric};
use crate::error::{ensure, Result};

/// Largest `|T|` for which the covering number is computed exactly.
pub const EXACT_COVER_LIMIT: usize = 20;

fn ball_masks(metric: &Metric<'_>, u: f64) -> Vec<u32> {
    let n = metric.size();
    (0..n)
        .map(|c| {
            (0..n)
                .filter(|&t| metric.d(c, t) <= u)
                .fold(0u32, |m, t| m | (1 << t))
        })
        .collect()
}

/// Can `uncovered` be covered by at most `budget` balls? Branches on the
/// lowest uncovered point, which some chosen ball must contain.
fn coverable(balls: &[u32], uncovered: u32, budget: usize) -> bool {
    if uncovered == 0 {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let largest = balls.iter().map(|b| (b & uncovered).count_ones()).max().unwrap_or(0);
    if (largest as usize) * budget < uncovered.count_ones() as usize {
        return false;
    }
    let t = uncovered.trailing_zeros();
    balls
        .iter()
        .filter(|b| *b & (1 << t) != 0)
        .any(|b| coverable(balls, uncovered & !b, budget - 1))
}

fn greedy_cover(metric: &Metric<'_>, u: f64) -> usize {
    let n = metric.size();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut count = 0;
    while left > 0 {
        let gain = |c: usize| (0..n).filter(|&t| !covered[t] && metric.d(c, t) <= u).count();
        let best = (0..n).fold(0, |b, c| if gain(c) > gain(b) { c } else { b });
        for (t, c) in covered.iter_mut().enumerate() {
            if !*c && metric.d(best, t) <= u {
                *c = true;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}

fn cover_count(metric: &Metric<'_>, u: f64) -> usize {
    let n = metric.size();
    if n > EXACT_COVER_LIMIT {
        return greedy_cover(metric, u);
    }
    let balls = ball_masks(metric, u);
    let all = (1u32 << n) - 1;
    (1..=n).find(|&k| coverable(&balls, all, k)).unwrap_or(n)
}

/// Minimum number of closed `u`-balls centred in `T` that cover `T`.
///
/// Exact for `|T| <= 20`; a greedy set cover (an upper bound) beyond.
pub fn covering_number(space: &FiniteMetricSpace, metric_id: &str, u: f64) -> Result<usize> {
    ensure!(u > 0.0, Domain, "covering radius must be positive, got {u}");
    let metric = space.metric(metric_id)?;
    Ok(cover_count(&metric, u))
}

/// `int_0^diam sqrt(ln N(u)) du`, summed exactly over the intervals between
/// consecutive distinct distances, where `N` is constant.
pub fn dudley_integral(space: &FiniteMetricSpace, metric_id: &str) -> Result<f64> {
    let metric = space.metric(metric_id)?;
    let n = metric.size();
    let mut breaks = vec![0.0];
    for s in 0..n {
        for t in 0..n {
            if s != t {
                breaks.push(metric.d(s, t));
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let count = cover_count(&metric, 0.5 * (w[0] + w[1]));
        total += (w[1] - w[0]) * (count as f64).ln().sqrt();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_line("d", xs).unwrap()
    }

    #[test]
    fn covering_examples() {
        let three = line(&[0.0, 1.0, 3.0]);
        assert_eq!(covering_number(&three, "d", 3.0).unwrap(), 1);
        assert_eq!(covering_number(&three, "d", 10.0).unwrap(), 1);
        assert_eq!(covering_number(&three, "d", 0.5).unwrap(), 3);
        assert_eq!(covering_number(&three, "d", 1.0).unwrap(), 2);
        assert_eq!(covering_number(&three, "d", 2.0).unwrap(), 1);
        assert!(covering_number(&three, "d", 0.0).is_err());
    }

    #[test]
    fn exact_never_exceeds_greedy() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|k| vec![(k * 7 % 12) as f64, (k * k % 5) as f64])
            .collect();
        let space = FiniteMetricSpace::from_points("d", &pts).unwrap();
        let m = space.metric("d").unwrap();
        for u in [0.5, 1.0, 1.5, 2.5, 4.0] {
            assert!(cover_count(&m, u) <= greedy_cover(&m, u));
        }
    }

    #[test]
    fn dudley_examples() {
        assert_eq!(dudley_integral(&line(&[1.0]), "d").unwrap(), 0.0);
        let two = dudley_integral(&line(&[0.0, 5.0]), "d").unwrap();
        assert!((two - 5.0 * 2f64.ln().sqrt()).abs() < 1e-12);
    }
}
