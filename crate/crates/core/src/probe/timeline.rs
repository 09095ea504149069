//! When does a metric first move, and when does it settle?

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum ImprovementRule {
    /// `series[t] >= baseline + threshold`.
    Absolute(f64),
    /// `series[t] >= baseline * (1 + threshold)`.
    Relative(f64),
}

impl Default for ImprovementRule {
    fn default() -> Self {
        ImprovementRule::Absolute(0.05)
    }
}

/// Earliest checkpoint whose value clears the rule against checkpoint 0.
pub fn first_improvement(series: &[f64], rule: ImprovementRule) -> Option<usize> {
    let baseline = *series.first()?;
    let target = match rule {
        ImprovementRule::Absolute(d) => baseline + d,
        ImprovementRule::Relative(r) => baseline * (1.0 + r),
    };
    // Small slack so that e.g. 0.50 + 0.05 reaches 0.55 despite rounding.
    (1..series.len()).find(|&t| series[t] >= target - 1e-12)
}

/// Earliest checkpoint after which the series stays within `tol` of its
/// final value.
pub fn convergence(series: &[f64], tol: f64) -> Option<usize> {
    let last = *series.last()?;
    let mut t = series.len() - 1;
    while t > 0 && (series[t - 1] - last).abs() <= tol + 1e-12 {
        t -= 1;
    }
    Some(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineStat {
    pub group: String,
    pub kind: String,
    pub first_improvement: Option<f64>,
    pub convergence: f64,
    /// Standard deviation of the first-improvement checkpoint over seeds.
    pub seed_spread: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
