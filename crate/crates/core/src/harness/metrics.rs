use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Overall,
    Policy,
    Class,
    /// `policy/class` groups.
    PolicyClass,
}

/// Success rate over all episodes of a group and steps-to-target over its
/// successful episodes. Standard deviations are population (divide by n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub group: String,
    pub n: usize,
    pub success_mean: f64,
    pub success_std: f64,
    /// `None` when the group has no successful episode.
    pub steps_mean: Option<f64>,
    pub steps_std: Option<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn group_key(r: &EvalRecord, by: GroupBy) -> String {
    match by {
        GroupBy::Overall => "all".to_string(),
        GroupBy::Policy => r.policy.clone(),
        GroupBy::Class => r.target_class.clone(),
        GroupBy::PolicyClass => format!("{}/{}", r.policy, r.target_class),
    }
}

/// Rows sorted by group name. Groups with no records do not appear.
pub fn aggregate_metrics(records: &[EvalRecord], by: GroupBy) -> Vec<MetricsRow> {
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let (succ, steps) = groups.entry(group_key(r, by)).or_default();
        succ.push(if r.success { 1.0 } else { 0.0 });
        if r.success {
            steps.push(r.steps as f64);
        }
    }
    groups
        .into_iter()
        .map(|(group, (succ, steps))| {
            let (success_mean, success_std) = mean_std(&succ);
            let (steps_mean, steps_std) = if steps.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&steps);
                (Some(m), Some(s))
            };
            MetricsRow {
                group,
                n: succ.len(),
                success_mean,
                success_std,
                steps_mean,
                steps_std,
            }
        })
        .collect()
}

/// The row for `group`, if present.
pub fn metrics_for<'a>(rows: &'a [MetricsRow], group: &str) -> Option<&'a MetricsRow> {
    rows.iter().find(|r| r.group == group)
}
