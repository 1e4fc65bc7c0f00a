use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;
use super::metrics::{aggregate_metrics, GroupBy, MetricsRow};
use super::HarnessError;
use crate::training::TrainingCurve;

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    spawn_model_id: usize,
    agent_id: usize,
    map_id: usize,
    episode_id: usize,
    policy: String,
    target_class: String,
    success: u8,
    steps: usize,
    seed: u64,
}

fn writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes records sorted by identity so the file does not depend on the
/// order in which they were produced. An empty slice writes the header only.
pub fn write_records_csv(path: &Path, records: &[EvalRecord]) -> Result<(), HarnessError> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort();
    let mut w = writer(path)?;
    if sorted.is_empty() {
        w.write_record([
            "spawn_model_id",
            "agent_id",
            "map_id",
            "episode_id",
            "policy",
            "target_class",
            "success",
            "steps",
            "seed",
        ])
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    for r in sorted {
        w.serialize(RecordRow {
            spawn_model_id: r.spawn_model_id,
            agent_id: r.agent_id,
            map_id: r.map_id,
            episode_id: r.episode_id,
            policy: r.policy.clone(),
            target_class: r.target_class.clone(),
            success: u8::from(r.success),
            steps: r.steps,
            seed: r.seed,
        })
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn read_records_csv(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<RecordRow>() {
        let r = row.map_err(|e| HarnessError::csv(path, e))?;
        if r.success > 1 {
            return Err(HarnessError::Config(format!("{}: success must be 0 or 1", path.display())));
        }
        out.push(EvalRecord {
            spawn_model_id: r.spawn_model_id,
            agent_id: r.agent_id,
            map_id: r.map_id,
            episode_id: r.episode_id,
            policy: r.policy,
            target_class: r.target_class,
            success: r.success == 1,
            steps: r.steps,
            seed: r.seed,
        });
    }
    Ok(out)
}

/// Columns `group, n, success_mean, success_std, steps_mean, steps_std`;
/// undefined steps statistics are written as empty fields.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record(["group", "n", "success_mean", "success_std", "steps_mean", "steps_std"])
        .map_err(|e| HarnessError::csv(path, e))?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.n.to_string(),
            r.success_mean.to_string(),
            r.success_std.to_string(),
            opt(r.steps_mean),
            opt(r.steps_std),
        ])
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

/// Records plus per-policy and per-policy-class metrics next to each other.
pub fn export_results(dir: &Path, records: &[EvalRecord]) -> Result<(), HarnessError> {
    write_records_csv(&dir.join("records.csv"), records)?;
    if !records.is_empty() {
        write_metrics_csv(&dir.join("metrics.csv"), &aggregate_metrics(records, GroupBy::Policy))?;
        write_metrics_csv(
            &dir.join("metrics_by_class.csv"),
            &aggregate_metrics(records, GroupBy::PolicyClass),
        )?;
    }
    Ok(())
}

/// Columns `episode, reward, success, steps_used, loss`, one row per episode.
pub fn write_curve_csv(path: &Path, curve: &TrainingCurve) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record(["episode", "reward", "success", "steps_used", "loss"])
        .map_err(|e| HarnessError::csv(path, e))?;
    for e in &curve.episodes {
        w.write_record([
            e.episode.to_string(),
            e.reward.to_string(),
            u8::from(e.success).to_string(),
            e.steps_used.to_string(),
            e.loss.to_string(),
        ])
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

/// One point of a long-form plot table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub plot: String,
    pub series: String,
    pub x: String,
    pub y: f64,
}

/// Rolling reward, success and steps-to-target against episode.
/// Steps-to-target is averaged over successful episodes in the window and
/// skipped where the window has none.
pub fn curve_plot_rows(series: &str, curve: &TrainingCurve, window: usize) -> Vec<PlotRow> {
    let window = window.max(1);
    let mut rows = Vec::new();
    let eps = &curve.episodes;
    for i in 0..eps.len() {
        let tail = &eps[(i + 1).saturating_sub(window)..=i];
        let n = tail.len() as f64;
        let reward = tail.iter().map(|e| e.reward).sum::<f64>() / n;
        let success = tail.iter().filter(|e| e.success).count() as f64 / n;
        let x = eps[i].episode.to_string();
        rows.push(PlotRow {
            plot: "reward".into(),
            series: series.into(),
            x: x.clone(),
            y: reward,
        });
        rows.push(PlotRow {
            plot: "success".into(),
            series: series.into(),
            x: x.clone(),
            y: success,
        });
        let wins: Vec<f64> = tail.iter().filter(|e| e.success).map(|e| e.steps_used as f64).collect();
        if !wins.is_empty() {
            rows.push(PlotRow {
                plot: "steps".into(),
                series: series.into(),
                x,
                y: wins.iter().sum::<f64>() / wins.len() as f64,
            });
        }
    }
    rows
}

/// Per-class success and steps bars, one series per policy.
pub fn class_plot_rows(records: &[EvalRecord]) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for m in aggregate_metrics(records, GroupBy::PolicyClass) {
        let (policy, class) = m.group.split_once('/').expect("policy/class group");
        rows.push(PlotRow {
            plot: "class_success".into(),
            series: policy.into(),
            x: class.into(),
            y: m.success_mean,
        });
        if let Some(s) = m.steps_mean {
            rows.push(PlotRow {
                plot: "class_steps".into(),
                series: policy.into(),
                x: class.into(),
                y: s,
            });
        }
    }
    rows
}

/// Long-form `plot, series, x, y` CSV.
pub fn emit_plot_data(path: &Path, rows: &[PlotRow]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    if rows.is_empty() {
        w.write_record(["plot", "series", "x", "y"]).map_err(|e| HarnessError::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}
