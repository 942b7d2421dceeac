//! Re-executes a saved report and verifies metric equality.

use std::path::Path;

use serde_json::Value;

use crate::config::resolve;
use crate::run::{execute, RunReport, REPORT_SCHEMA};
use crate::HarnessError;

/// First path where the two values differ, in sorted key order.
fn first_divergence(path: &str, old: &Value, new: &Value) -> Option<String> {
    match (old, new) {
        (Value::Object(a), Value::Object(b)) => {
            let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
            keys.sort();
            keys.dedup();
            for key in keys {
                let sub = if path.is_empty() {
                    key.to_string()
                } else {
                    format!("{path}.{key}")
                };
                match (a.get(key), b.get(key)) {
                    (Some(x), Some(y)) => {
                        if let Some(d) = first_divergence(&sub, x, y) {
                            return Some(d);
                        }
                    }
                    (Some(_), None) => return Some(format!("{sub} (missing on replay)")),
                    (None, Some(_)) => return Some(format!("{sub} (new on replay)")),
                    (None, None) => unreachable!(),
                }
            }
            None
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path} (length {} vs {})", a.len(), b.len()));
            }
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                if let Some(d) = first_divergence(&format!("{path}[{i}]"), x, y) {
                    return Some(d);
                }
            }
            None
        }
        (x, y) => {
            if x == y {
                None
            } else {
                Some(format!("{path} ({x} vs {y})"))
            }
        }
    }
}

pub fn replay(report_path: &Path) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(report_path).map_err(|e| {
        HarnessError::Config(format!("report {}: {e}", report_path.display()))
    })?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("report {}: {e}", report_path.display())))?;
    if report.schema != REPORT_SCHEMA {
        return Err(HarnessError::Config(format!(
            "report schema {:?} is not {REPORT_SCHEMA:?}",
            report.schema
        )));
    }

    // the config echo plus the recorded seeds fully determine the run
    let cfg = resolve(report.config.clone(), None)?;
    if cfg.experiment != report.experiment {
        return Err(HarnessError::Config(
            "report experiment does not match its config echo".into(),
        ));
    }
    let fresh = execute(&cfg)?;

    let old_metrics = &report.metrics;
    if let Some(d) = first_divergence("metrics", old_metrics, &fresh.metrics) {
        return Err(HarnessError::ReplayMismatch(d));
    }
    let old_hypothesis = report.hypothesis.clone().unwrap_or(Value::Null);
    let new_hypothesis = fresh.hypothesis.clone().unwrap_or(Value::Null);
    if let Some(d) = first_divergence("hypothesis", &old_hypothesis, &new_hypothesis) {
        return Err(HarnessError::ReplayMismatch(d));
    }
    println!(
        "replay: match ({} metrics verified for experiment {})",
        count_leaves(old_metrics),
        report.experiment
    );
    Ok(())
}

fn count_leaves(v: &Value) -> usize {
    match v {
        Value::Object(m) => m.values().map(count_leaves).sum(),
        Value::Array(a) => a.iter().map(count_leaves).sum(),
        _ => 1,
    }
}
