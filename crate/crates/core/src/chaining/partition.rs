use std::collections::BTreeMap;

use serde::Serialize;

use super::{level_cap, FiniteMetricSpace};
use crate::error::{ensure, Result};

/// Nested partitions `Q_0, Q_1, ..` of `{0, .., size-1}` with `|Q_0| = 1` and
/// `|Q_i| <= 2^(2^i)`. Cells are stored sorted, levels ordered by smallest
/// member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionSequence {
    size: usize,
    levels: Vec<Vec<Vec<usize>>>,
    /// `owner[i][t]` is the index of the level-`i` cell holding `t`.
    #[serde(skip)]
    owner: Vec<Vec<usize>>,
}

fn canonical(mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for c in &mut cells {
        c.sort_unstable();
    }
    cells.sort();
    cells
}

impl PartitionSequence {
    pub fn new(size: usize, levels: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        ensure!(size >= 1, Validation, "index set must be nonempty");
        ensure!(!levels.is_empty(), Validation, "partition sequence has no levels");
        let levels: Vec<_> = levels.into_iter().map(canonical).collect();
        let mut owner = Vec::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            ensure!(
                level.len() <= level_cap(i),
                Validation,
                "level {i} has {} cells, cap is {}",
                level.len(),
                level_cap(i)
            );
            let mut own = vec![usize::MAX; size];
            for (k, cell) in level.iter().enumerate() {
                ensure!(!cell.is_empty(), Validation, "level {i} has an empty cell");
                for &t in cell {
                    ensure!(t < size, Validation, "level {i} mentions {t}, outside 0..{size}");
                    ensure!(own[t] == usize::MAX, Validation, "level {i} lists {t} twice");
                    own[t] = k;
                }
            }
            ensure!(
                own.iter().all(|&k| k != usize::MAX),
                Validation,
                "level {i} does not cover every point"
            );
            if let Some(prev) = owner.last() {
                let prev: &Vec<usize> = prev;
                for cell in level {
                    ensure!(
                        cell.iter().all(|&t| prev[t] == prev[cell[0]]),
                        Validation,
                        "level {i} does not refine level {}",
                        i - 1
                    );
                }
            }
            owner.push(own);
        }
        Ok(PartitionSequence {
            size,
            levels,
            owner,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn levels(&self) -> &[Vec<Vec<usize>>] {
        &self.levels
    }

    /// The level-`i` cell containing `t`.
    pub fn cell(&self, i: usize, t: usize) -> &[usize] {
        &self.levels[i][self.owner[i][t]]
    }

    /// Level `i`, repeating the last stored level beyond the end.
    fn owner_at(&self, i: usize) -> &[usize] {
        &self.owner[i.min(self.owner.len() - 1)]
    }
}

/// Common refinement of `m` partition sequences, shifted by `j = ceil(log2 m)`
/// levels: level `i` holds the nonempty intersections of the inputs' level
/// `i - j` cells (level 0 when `i < j`). The shift keeps the product of cell
/// counts within `2^(2^i)`.
pub fn intersect_partitions(parts: &[PartitionSequence]) -> Result<PartitionSequence> {
    ensure!(!parts.is_empty(), Validation, "need at least one partition sequence");
    let size = parts[0].size;
    ensure!(
        parts.iter().all(|p| p.size == size),
        Validation,
        "partition sequences are over different ground sets"
    );
    let m = parts.len();
    let j = (usize::BITS - (m - 1).leading_zeros()) as usize;
    let depth = parts.iter().map(|p| p.levels.len()).max().unwrap_or(1);
    let levels = (0..depth + j)
        .map(|i| {
            let src = i.saturating_sub(j);
            let mut cells: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for t in 0..size {
                let key = parts.iter().map(|p| p.owner_at(src)[t]).collect();
                cells.entry(key).or_default().push(t);
            }
            cells.into_values().collect()
        })
        .collect();
    PartitionSequence::new(size, levels)
}

/// `sup_t sum_i 2^(i/n) diam(Q_i(t))` over the stored levels.
pub fn gamma_prime_value(
    space: &FiniteMetricSpace,
    metric_id: &str,
    n: f64,
    parts: &PartitionSequence,
) -> Result<f64> {
    ensure!(n > 0.0 && n.is_finite(), Domain, "exponent index must be positive, got {n}");
    let metric = space.metric(metric_id)?;
    ensure!(
        metric.size() == parts.size,
        Validation,
        "partition is over {} points but the space has {}",
        parts.size,
        metric.size()
    );
    let diams: Vec<Vec<f64>> = parts
        .levels
        .iter()
        .map(|level| level.iter().map(|c| metric.diameter_of(c)).collect())
        .collect();
    let value = (0..parts.size)
        .map(|t| {
            (0..parts.levels.len())
                .map(|i| (i as f64 / n).exp2() * diams[i][parts.owner[i][t]])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial(size: usize, depth: usize) -> PartitionSequence {
        PartitionSequence::new(size, vec![vec![(0..size).collect()]; depth]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(PartitionSequence::new(3, vec![vec![vec![0], vec![1, 2]]]).is_err());
        assert!(PartitionSequence::new(3, vec![vec![vec![0, 1]]]).is_err());
        assert!(PartitionSequence::new(3, vec![vec![vec![0, 1, 2, 2]]]).is_err());
        assert!(PartitionSequence::new(
            4,
            vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 1], vec![2, 3]], vec![vec![0, 2], vec![1], vec![3]]]
        )
        .is_err());
        let ok = PartitionSequence::new(3, vec![vec![vec![2, 0, 1]], vec![vec![2], vec![1, 0]]]).unwrap();
        assert_eq!(ok.cell(1, 0), &[0, 1]);
    }

    #[test]
    fn intersect_examples() {
        let a = PartitionSequence::new(4, vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 1], vec![2, 3]]]).unwrap();
        assert_eq!(intersect_partitions(std::slice::from_ref(&a)).unwrap(), a);

        let t = intersect_partitions(&[trivial(4, 3), trivial(4, 3)]).unwrap();
        assert!(t.levels().iter().all(|l| l.len() == 1));

        let b = PartitionSequence::new(4, vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 2], vec![1, 3]]]).unwrap();
        let c = intersect_partitions(&[a, b]).unwrap();
        assert_eq!(c.levels().len(), 3);
        assert_eq!(c.levels()[1].len(), 1);
        assert_eq!(c.levels()[2].len(), 4);
        for (i, l) in c.levels().iter().enumerate() {
            assert!(l.len() <= level_cap(i));
        }
        assert!(intersect_partitions(&[trivial(3, 1), trivial(4, 1)]).is_err());
    }

    #[test]
    fn gamma_prime_examples() {
        let line = FiniteMetricSpace::from_line("d", &[0.0, 1.0, 3.0]).unwrap();
        let singles = PartitionSequence::new(1, vec![vec![vec![0]]]).unwrap();
        let one = FiniteMetricSpace::from_line("d", &[0.0]).unwrap();
        assert_eq!(gamma_prime_value(&one, "d", 1.0, &singles).unwrap(), 0.0);

        let two_level = PartitionSequence::new(
            3,
            vec![vec![vec![0, 1, 2]], vec![vec![0], vec![1], vec![2]]],
        )
        .unwrap();
        assert_eq!(gamma_prime_value(&line, "d", 2.0, &two_level).unwrap(), 3.0);

        // Q_1 = {{0,1},{2}}: point 0 gives 3 + sqrt(2) * 1.
        let p = PartitionSequence::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]]]).unwrap();
        let v = gamma_prime_value(&line, "d", 2.0, &p).unwrap();
        assert!((v - (3.0 + 2f64.sqrt())).abs() < 1e-15);
    }
}
