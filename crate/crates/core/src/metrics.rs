//! Fairness and performance metrics over evaluation traces.

use serde::{Deserialize, Serialize};

use crate::ddpg::EvalTrace;
use crate::error::{Error, Result};
use crate::grid::{NetworkSpec, TimeSeriesSet};

/// How Table-style violation counts are tallied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCounting {
    /// A time step counts once if any bus violates (default).
    PerStep,
    /// Every violating (bus, step) pair counts.
    PerBusStep,
}

/// Gini index of a non-negative vector:
/// `G = sum_ij |x_i - x_j| / (2 n^2 mean)`, computed in `O(n log n)` via the
/// sorted form. An all-zero vector is defined as perfectly equal (0).
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("gini of an empty vector".into()));
    }
    let mut sorted = values.to_vec();
    for &v in &sorted {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("gini requires values >= 0, got {v}")));
        }
    }
    sorted.sort_by(f64::total_cmp);
    // All-equal vectors (including all-zero) are exactly fair; skipping the
    // formula avoids returning rounding dust instead of 0.
    if sorted.first() == sorted.last() {
        return Ok(0.0);
    }
    let n = sorted.len() as f64;
    let sum: f64 = sorted.iter().sum();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x)
        .sum();
    Ok((2.0 * weighted / (n * sum) - (n + 1.0) / n).max(0.0))
}

/// Headline numbers of one evaluated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    /// Evaluated step range `[eval_start, eval_end)`.
    pub eval_start: usize,
    pub eval_end: usize,
    pub total_pv_mwh: f64,
    pub curtailed_mwh: f64,
    pub n_under: usize,
    pub n_over: usize,
    pub v_min_seen: f64,
    pub v_max_seen: f64,
    /// `(t, gini)` for every step where at least one customer is curtailed.
    pub gini_series: Vec<(usize, f64)>,
}

impl ScenarioSummary {
    /// Median of the per-step Gini series; `None` when nothing was curtailed.
    pub fn median_gini(&self) -> Option<f64> {
        if self.gini_series.is_empty() {
            return None;
        }
        let mut g: Vec<f64> = self.gini_series.iter().map(|&(_, v)| v).collect();
        g.sort_by(f64::total_cmp);
        let mid = g.len() / 2;
        Some(if g.len() % 2 == 1 {
            g[mid]
        } else {
            0.5 * (g[mid - 1] + g[mid])
        })
    }

    /// Minimum of the per-step Gini series.
    pub fn min_gini(&self) -> Option<f64> {
        self.gini_series
            .iter()
            .map(|&(_, v)| v)
            .min_by(f64::total_cmp)
    }
}

/// Aggregates an evaluation trace: energy integrals, violation counts,
/// voltage extrema, and the per-step Gini series.
pub fn summarize(
    scenario: &str,
    trace: &EvalTrace,
    spec: &NetworkSpec,
    series: &TimeSeriesSet,
    counting: ViolationCounting,
) -> Result<ScenarioSummary> {
    if trace.steps.is_empty() {
        return Err(Error::Domain("cannot summarize an empty trace".into()));
    }
    let step_h = series.step_hours();
    let mut total_pv_wh = 0.0;
    let mut curtailed_wh = 0.0;
    let mut n_under = 0usize;
    let mut n_over = 0usize;
    let mut v_min_seen = f64::INFINITY;
    let mut v_max_seen = f64::NEG_INFINITY;
    let mut gini_series = Vec::new();

    for step in &trace.steps {
        for d in &step.dispatches {
            total_pv_wh += d.p_avail_w * step_h;
            curtailed_wh += d.curtail_w * step_h;
        }
        let under = step
            .v_mag_pu
            .iter()
            .filter(|&&v| v < spec.v_min_pu)
            .count();
        let over = step
            .v_mag_pu
            .iter()
            .filter(|&&v| v > spec.v_max_pu)
            .count();
        match counting {
            ViolationCounting::PerStep => {
                n_under += usize::from(under > 0);
                n_over += usize::from(over > 0);
            }
            ViolationCounting::PerBusStep => {
                n_under += under;
                n_over += over;
            }
        }
        for &v in &step.v_mag_pu {
            v_min_seen = v_min_seen.min(v);
            v_max_seen = v_max_seen.max(v);
        }
        if step.dispatches.iter().any(|d| d.curtail_w > 0.0) {
            let curtailments: Vec<f64> = step.dispatches.iter().map(|d| d.curtail_w).collect();
            gini_series.push((step.t, gini(&curtailments)?));
        }
    }

    Ok(ScenarioSummary {
        scenario: scenario.to_string(),
        eval_start: trace.start,
        eval_end: trace.end,
        total_pv_mwh: total_pv_wh / 1e6,
        curtailed_mwh: curtailed_wh / 1e6,
        n_under,
        n_over,
        v_min_seen,
        v_max_seen,
        gini_series,
    })
}
