//! Per-point statistics over successful trials.

use serde::{Deserialize, Serialize};

use crate::trial::TrialRecord;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AggregateError {
    #[error("no successful trial at {scheme} / {sweep_var} = {value:?}")]
    EmptyPoint {
        scheme: String,
        sweep_var: String,
        value: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error (sample deviation over √n); `None` when empty.
pub fn mean_stderr(xs: &[f64]) -> Option<Stat> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Some(Stat { mean, stderr, count: n })
}

/// One row of `aggregate.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_var: String,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub trials: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub power_w_mean: f64,
    pub power_w_stderr: f64,
    pub power_dbm_mean: f64,
    pub power_dbm_stderr: f64,
    pub rate_user_avg_mean: f64,
    pub rate_user_avg_stderr: f64,
    pub rate_user_total_mean: f64,
    pub rate_user_total_stderr: f64,
    pub iterations_mean: f64,
    pub converged_fraction: f64,
}

/// Statistics of one sweep point; all rows must share scheme and value.
pub fn aggregate_point(rows: &[&TrialRecord]) -> Result<AggregateRow, AggregateError> {
    let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.ok()).collect();
    let first = rows.first();
    let empty = || AggregateError::EmptyPoint {
        scheme: first.map_or(String::new(), |r| r.scheme.clone()),
        sweep_var: first.map_or(String::new(), |r| r.sweep_var.clone()),
        value: first.and_then(|r| r.sweep_value),
    };
    let col = |f: fn(&TrialRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let power = mean_stderr(&col(|r| r.power_w)).ok_or_else(empty)?;
    let dbm = mean_stderr(&col(|r| r.power_dbm)).ok_or_else(empty)?;
    let avg = mean_stderr(&col(|r| r.rate_user_avg)).ok_or_else(empty)?;
    let total = mean_stderr(&col(|r| r.rate_user_total)).ok_or_else(empty)?;
    let iters = mean_stderr(&col(|r| r.iterations.map(|i| i as f64))).ok_or_else(empty)?;
    let conv = mean_stderr(&col(|r| r.converged.map(|c| if c { 1.0 } else { 0.0 }))).ok_or_else(empty)?;
    let r0 = first.ok_or_else(empty)?;
    Ok(AggregateRow {
        sweep_var: r0.sweep_var.clone(),
        sweep_value: r0.sweep_value,
        scheme: r0.scheme.clone(),
        trials: rows.len(),
        succeeded: ok.len(),
        failed: rows.len() - ok.len(),
        power_w_mean: power.mean,
        power_w_stderr: power.stderr,
        power_dbm_mean: dbm.mean,
        power_dbm_stderr: dbm.stderr,
        rate_user_avg_mean: avg.mean,
        rate_user_avg_stderr: avg.stderr,
        rate_user_total_mean: total.mean,
        rate_user_total_stderr: total.stderr,
        iterations_mean: iters.mean,
        converged_fraction: conv.mean,
    })
}

/// Groups rows by `(sweep value, scheme)` in first-seen order.
pub fn group(rows: &[TrialRecord]) -> Vec<Vec<&TrialRecord>> {
    let mut groups: Vec<Vec<&TrialRecord>> = Vec::new();
    for r in rows {
        match groups
            .iter_mut()
            .find(|g| g[0].scheme == r.scheme && g[0].sweep_value.map(f64::to_bits) == r.sweep_value.map(f64::to_bits))
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
}

pub fn aggregate(rows: &[TrialRecord]) -> Vec<Result<AggregateRow, AggregateError>> {
    group(rows).iter().map(|g| aggregate_point(g)).collect()
}
