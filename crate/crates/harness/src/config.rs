//! Experiment configuration: JSON document, dotted-path overrides,
//! and validation with field-path error messages.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::HarnessError;

pub const CONFIG_SCHEMA: &str = "config/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Root seed; required, never defaulted from the clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseSource>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub trials: Trials,
    #[serde(default = "default_levels")]
    pub corruption_levels: Vec<usize>,
    /// Dichotomy threshold handed to the soundness estimator;
    /// defaults to the measured local distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_delta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<usize>,
    #[serde(default = "default_one")]
    pub correct_corruptions: usize,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn default_levels() -> Vec<usize> {
    vec![1, 2]
}

fn default_one() -> usize {
    1
}

impl Default for ConfigDoc {
    fn default() -> Self {
        ConfigDoc {
            schema: default_schema(),
            experiment: None,
            seed: None,
            out_dir: None,
            system: None,
            base: None,
            budgets: Budgets::default(),
            trials: Trials::default(),
            corruption_levels: default_levels(),
            alpha_delta: None,
            round_cap: None,
            correct_corruptions: 1,
            outputs: Outputs::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum SystemSource {
    /// Full flat hierarchy of F_p^n with dimensions q0 < q1 < q2.
    Grassmann {
        p: u16,
        n: usize,
        q0: usize,
        q1: usize,
        q2: usize,
    },
    /// Lines of F_p^n with both upper layers collapsed to the space.
    Lines { p: u16, n: usize },
    /// A serialized system document.
    File(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BaseSource {
    /// Degree-r line codes on every T-set (generator sources only).
    RsDegree(usize),
    /// Base codes embedded in the system file.
    FromFile(bool),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_enumeration")]
    pub enumeration: u64,
    #[serde(default = "default_sampler_max")]
    pub sampler_exact_max: usize,
}

fn default_enumeration() -> u64 {
    ltc_core::DEFAULT_ENUMERATION_BUDGET
}

fn default_sampler_max() -> usize {
    ltc_core::system::DEFAULT_SAMPLER_EXACT_MAX
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            enumeration: default_enumeration(),
            sampler_exact_max: default_sampler_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trials {
    #[serde(default = "default_rho_trials")]
    pub rho_per_level: usize,
    #[serde(default = "default_alpha_trials")]
    pub alpha: usize,
    #[serde(default = "default_lambda_probes")]
    pub lambda_probes: usize,
    #[serde(default = "default_correct_trials")]
    pub correct: usize,
}

fn default_rho_trials() -> usize {
    8
}
fn default_alpha_trials() -> usize {
    32
}
fn default_lambda_probes() -> usize {
    200
}
fn default_correct_trials() -> usize {
    4
}

impl Default for Trials {
    fn default() -> Self {
        Trials {
            rho_per_level: default_rho_trials(),
            alpha: default_alpha_trials(),
            lambda_probes: default_lambda_probes(),
            correct: default_correct_trials(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: String,
    /// Where to re-emit the constructed system document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

fn default_report() -> String {
    "report.json".into()
}
fn default_csv() -> String {
    "sweep.csv".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            report: default_report(),
            csv: default_csv(),
            system: None,
        }
    }
}

/// Applies one `path=json` override to the raw config value.
pub fn apply_override(config: &mut Value, spec: &str) -> Result<(), HarnessError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        HarnessError::Config(format!("override {spec:?} is not of the form path=value"))
    })?;
    let new_value: Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cursor = config;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if !cursor.is_object() {
            return Err(HarnessError::Config(format!(
                "override {path}: {} is not an object",
                segments[..i].join(".")
            )));
        }
        let map = cursor.as_object_mut().unwrap();
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), new_value);
            return Ok(());
        }
        cursor = map
            .entry(seg.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("paths have at least one segment")
}

/// Validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: String,
    pub seed: u64,
    pub out_dir: String,
    pub doc: ConfigDoc,
}

pub const EXPERIMENTS: &[&str] = &[
    "build",
    "mas-audit",
    "rho-sweep",
    "alpha-estimate",
    "correct",
    "end-to-end",
];

pub fn resolve(doc: ConfigDoc, env_out_dir: Option<String>) -> Result<ResolvedConfig, HarnessError> {
    if doc.schema != CONFIG_SCHEMA {
        return Err(HarnessError::Config(format!(
            "schema: expected {CONFIG_SCHEMA:?}, got {:?}",
            doc.schema
        )));
    }
    let experiment = doc
        .experiment
        .clone()
        .ok_or_else(|| HarnessError::Config("experiment: missing".into()))?;
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(HarnessError::Config(format!(
            "experiment: unknown value {experiment:?}"
        )));
    }
    let seed = doc
        .seed
        .ok_or_else(|| HarnessError::Config("seed: required, with no clock default".into()))?;
    if doc.system.is_none() {
        return Err(HarnessError::Config("system: exactly one source required".into()));
    }
    if doc.budgets.enumeration == 0 {
        return Err(HarnessError::Config("budgets.enumeration: must be positive".into()));
    }
    if doc.budgets.sampler_exact_max == 0 {
        return Err(HarnessError::Config(
            "budgets.sampler_exact_max: must be positive".into(),
        ));
    }
    if experiment == "rho-sweep" && doc.corruption_levels.is_empty() {
        return Err(HarnessError::Config(
            "corruption_levels: must be non-empty for rho-sweep".into(),
        ));
    }
    if experiment == "correct" && doc.correct_corruptions == 0 {
        return Err(HarnessError::Config(
            "correct_corruptions: must be positive".into(),
        ));
    }
    // flag beats env beats config
    let out_dir = doc
        .out_dir
        .clone()
        .or(env_out_dir)
        .unwrap_or_else(|| "out".to_string());
    Ok(ResolvedConfig {
        experiment,
        seed,
        out_dir,
        doc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_rewrite_nested_fields() {
        let mut v = json!({"seed": 1, "trials": {"alpha": 2}});
        apply_override(&mut v, "trials.alpha=9").unwrap();
        apply_override(&mut v, "outputs.csv=table.csv").unwrap();
        assert_eq!(v["trials"]["alpha"], json!(9));
        assert_eq!(v["outputs"]["csv"], json!("table.csv"));
        assert!(apply_override(&mut v, "no-equals").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let doc = ConfigDoc {
            experiment: Some("build".into()),
            ..Default::default()
        };
        let err = resolve(doc, None).unwrap_err();
        assert!(err.to_string().contains("seed"));

        let doc = ConfigDoc {
            experiment: Some("nope".into()),
            seed: Some(1),
            ..Default::default()
        };
        let err = resolve(doc, None).unwrap_err();
        assert!(err.to_string().contains("experiment"));
    }
}
