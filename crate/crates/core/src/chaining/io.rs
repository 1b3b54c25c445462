//! Metric-space text record:
//!
//! ```text
//! metric-space 1
//! size 3
//! metric d
//! 0 1 3
//! 1 0 2
//! 3 2 0
//! ```
//!
//! Any number of `metric <id>` blocks may follow, each with `size` rows of
//! `size` distances. Admissible sequences are JSON lists of index lists.

use std::fmt::Write as _;

use super::{AdmissibleSequence, FiniteMetricSpace};
use crate::error::{Error, Result};

const HEADER: &str = "metric-space 1";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn write_metric_space(space: &FiniteMetricSpace) -> String {
    let n = space.size();
    let mut out = format!("{HEADER}\nsize {n}\n");
    for (id, dist) in &space.metrics {
        let _ = writeln!(out, "metric {id}");
        for row in dist.chunks(n) {
            let row: Vec<String> = row.iter().map(|d| format!("{d:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_metric_space(text: &str) -> Result<FiniteMetricSpace> {
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    });
    let (l, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    if header != HEADER {
        return Err(parse_err(l, format!("expected `{HEADER}`")));
    }
    let (l, size_line) = lines.next().ok_or_else(|| parse_err(0, "missing `size` line"))?;
    let size: usize = size_line
        .strip_prefix("size ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| parse_err(l, "expected `size <n>`"))?;
    if size == 0 {
        return Err(parse_err(l, "size must be at least 1"));
    }
    let mut space: Option<FiniteMetricSpace> = None;
    while let Some((l, line)) = lines.next() {
        let id = line
            .strip_prefix("metric ")
            .map(str::trim)
            .filter(|id| !id.is_empty() && !id.contains(char::is_whitespace))
            .ok_or_else(|| parse_err(l, "expected `metric <id>`"))?;
        let mut dist = Vec::new();
        for r in 0..size {
            let (l, row) = lines
                .next()
                .ok_or_else(|| parse_err(l, format!("metric `{id}` is missing row {r}")))?;
            let before = dist.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(l, format!("bad distance `{tok}`")))?;
                dist.push(v);
            }
            if dist.len() - before != size {
                return Err(parse_err(l, format!("row has {} entries, expected {size}", dist.len() - before)));
            }
        }
        space = Some(match space {
            None => FiniteMetricSpace::new(size, id, dist)?,
            Some(s) => s.with_metric(id, dist)?,
        });
    }
    space.ok_or_else(|| parse_err(0, "no metric blocks"))
}

pub fn write_sequence(seq: &AdmissibleSequence) -> String {
    serde_json::to_string(seq.levels()).expect("index lists always serialize")
}

/// Parse a JSON list of index lists and validate it against `|T| = size`.
pub fn parse_sequence(text: &str, size: usize) -> Result<AdmissibleSequence> {
    let levels: Vec<Vec<usize>> = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    AdmissibleSequence::new(size, levels)
}
