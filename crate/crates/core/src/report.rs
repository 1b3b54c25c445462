//! Comparison of evaluated bounds against empirical frequencies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::ConstantSet;

/// Default width of the binomial margin, in standard errors.
pub const DEFAULT_MARGIN_SE: f64 = 3.0;

/// `min(p, 1) + k * sqrt(p (1 - p) / n)` with `p` clamped to `[0, 1]`.
pub fn binomial_allowance(prob_bound: f64, sample_count: usize, margin_se: f64) -> f64 {
    let p = prob_bound.clamp(0.0, 1.0);
    p + margin_se * (p * (1.0 - p) / sample_count.max(1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub label: String,
    /// Tested point (`u` or `p`).
    pub x: f64,
    pub threshold: f64,
    /// Absent for deterministic (moment) comparisons.
    pub prob_bound: Option<f64>,
    pub empirical: f64,
    pub allowance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub inputs: serde_json::Value,
    pub rows: Vec<BoundRow>,
    pub fitted: Option<ConstantSet>,
    pub margin_se: f64,
    pub sample_count: usize,
    pub holds: bool,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(
        bound_name: impl Into<String>,
        inputs: serde_json::Value,
        sample_count: usize,
        margin_se: f64,
    ) -> Self {
        BoundReport {
            bound_name: bound_name.into(),
            inputs,
            rows: Vec::new(),
            fitted: None,
            margin_se,
            sample_count,
            holds: true,
            notes: Vec::new(),
        }
    }

    /// Append a probability comparison; the verdict uses the binomial margin.
    pub fn push_tail_row(
        &mut self,
        label: impl Into<String>,
        x: f64,
        threshold: f64,
        prob_bound: f64,
        empirical: f64,
    ) {
        let allowance = binomial_allowance(prob_bound, self.sample_count, self.margin_se);
        let holds = empirical <= allowance;
        self.holds &= holds;
        self.rows.push(BoundRow {
            label: label.into(),
            x,
            threshold,
            prob_bound: Some(prob_bound),
            empirical,
            allowance,
            holds,
        });
    }

    /// Append a deterministic comparison `empirical <= threshold`.
    pub fn push_value_row(&mut self, label: impl Into<String>, x: f64, threshold: f64, empirical: f64) {
        let holds = empirical <= threshold;
        self.holds &= holds;
        self.rows.push(BoundRow {
            label: label.into(),
            x,
            threshold,
            prob_bound: None,
            empirical,
            allowance: threshold,
            holds,
        });
    }

    /// Largest `empirical / allowance` over the rows (0 when there are none).
    pub fn worst_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| match (r.allowance > 0.0, r.empirical > 0.0) {
                (true, _) => r.empirical / r.allowance,
                (false, true) => f64::INFINITY,
                (false, false) => 0.0,
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Columns: `label,x,threshold,prob_bound,empirical,allowance,holds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,x,threshold,prob_bound,empirical,allowance,holds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{},{:?},{:?},{}",
                r.label,
                r.x,
                r.threshold,
                r.prob_bound.map(|p| format!("{p:?}")).unwrap_or_default(),
                r.empirical,
                r.allowance,
                r.holds
            );
        }
        out
    }
}
