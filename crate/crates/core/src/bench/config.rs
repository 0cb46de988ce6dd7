use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::agents::AgentSpec;
use crate::optimality::DEFAULT_TIE_TOL;
use crate::wrappers::WrapperSpec;
use crate::zoo::EnvSpec;

/// Config documents carry this version; anything else is rejected.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn default_name() -> String {
    "run".into()
}

fn default_repeats() -> usize {
    1
}

fn no_wrapper() -> WrapperSpec {
    WrapperSpec::None {}
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One experiment. Every source of randomness is an explicit field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub env: EnvSpec,
    #[serde(default = "no_wrapper")]
    pub wrapper: WrapperSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentSpec>,
    pub n_train: usize,
    #[serde(default)]
    pub n_eval: usize,
    #[serde(default)]
    pub episodes: usize,
    pub master_seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub eval: EvalSettings,
    #[serde(default)]
    pub check: CheckSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Evaluate the population objective on the training sample itself (debugging).
    #[serde(default, skip_serializing_if = "is_false")]
    pub eval_equals_train: bool,
    /// Add the gradient cosine similarity column (softmax agents only).
    #[serde(default, skip_serializing_if = "is_false")]
    pub gcs: bool,
    /// Write each trained agent's tables next to the CSV.
    #[serde(default, skip_serializing_if = "is_false")]
    pub save_agents: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    /// Monte-Carlo episodes per member when exact evaluation is unavailable.
    #[serde(default = "default_eval_episodes")]
    pub episodes: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "yes")]
    pub exact: bool,
}

fn default_eval_episodes() -> usize {
    100
}

fn default_max_steps() -> usize {
    200
}

fn yes() -> bool {
    true
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: default_eval_episodes(),
            max_steps: default_max_steps(),
            exact: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSettings {
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
    /// Start-value slack ε; the default scales with rewards and horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Fold finite horizons into the state before checking.
    #[serde(default, skip_serializing_if = "is_false")]
    pub fold_time: bool,
    /// Run the checker on the training sample for every gap/sweep row.
    #[serde(default, skip_serializing_if = "is_false")]
    pub in_rows: bool,
}

fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}

fn default_budget() -> u64 {
    crate::optimality::DEFAULT_BUDGET
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            tie_tol: default_tie_tol(),
            slack: None,
            budget: default_budget(),
            fold_time: false,
            in_rows: false,
        }
    }
}

/// The swept axis and its values, listed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "axis",
    content = "values",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum SweepSpec {
    NTrain(Vec<usize>),
    M(Vec<u32>),
    Wrapper(Vec<WrapperSpec>),
}

impl SweepSpec {
    pub fn axis(&self) -> &'static str {
        match self {
            SweepSpec::NTrain(_) => "n_train",
            SweepSpec::M(_) => "m",
            SweepSpec::Wrapper(_) => "wrapper",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepSpec::NTrain(v) => v.len(),
            SweepSpec::M(v) => v.len(),
            SweepSpec::Wrapper(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label of point `i` as it appears in reports.
    pub fn label(&self, i: usize) -> String {
        match self {
            SweepSpec::NTrain(v) => v[i].to_string(),
            SweepSpec::M(v) => v[i].to_string(),
            SweepSpec::Wrapper(v) => v[i].label(),
        }
    }

    /// The config for point `i`.
    pub fn apply(&self, base: &RunConfig, i: usize) -> Result<RunConfig, BenchError> {
        let mut cfg = base.clone();
        cfg.sweep = None;
        match self {
            SweepSpec::NTrain(v) => cfg.n_train = v[i],
            SweepSpec::M(v) => {
                cfg.env = base.env.with_m(v[i]).ok_or_else(|| {
                    BenchError::Invalid(format!(
                        "env {} has no word size to sweep",
                        base.env.name()
                    ))
                })?;
            }
            SweepSpec::Wrapper(v) => cfg.wrapper = v[i],
        }
        Ok(cfg)
    }
}

impl RunConfig {
    /// Parses and validates a config document. Errors carry line and column.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, BenchError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| BenchError::Config {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(BenchError::Invalid(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_train == 0 {
            return Err(BenchError::Invalid("n_train must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(BenchError::Invalid("repeats must be at least 1".into()));
        }
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(BenchError::Invalid(format!(
                "name {:?} is not a plain label",
                self.name
            )));
        }
        if !(self.check.tie_tol >= 0.0) {
            return Err(BenchError::Invalid(format!(
                "tie_tol {} must be non-negative",
                self.check.tie_tol
            )));
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() {
                return Err(BenchError::Invalid("sweep lists no values".into()));
            }
            if let SweepSpec::NTrain(v) = s {
                if v.contains(&0) {
                    return Err(BenchError::Invalid(
                        "swept n_train must be at least 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "env": {"family": "hidden_gridworld", "width": 3, "height": 2, "start": [1, 1], "goal": [0, 1]},
        "n_train": 2,
        "master_seed": 4
    }"#;

    #[test]
    fn minimal_config_round_trips() {
        let cfg = RunConfig::from_json(MINIMAL, "inline").unwrap();
        let again = RunConfig::from_json(&cfg.to_json(), "again").unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_json(), again.to_json());
    }

    #[test]
    fn missing_seed_reports_position() {
        let text = MINIMAL.replace(",\n        \"master_seed\": 4", "");
        match RunConfig::from_json(&text, "inline") {
            Err(BenchError::Config { line, message, .. }) => {
                assert!(line >= 1);
                assert!(message.contains("master_seed"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"n_train\": 2", "\"n_train\": 2, \"n_trian\": 3");
        assert!(matches!(
            RunConfig::from_json(&text, "inline"),
            Err(BenchError::Config { .. })
        ));
    }

    #[test]
    fn sweep_round_trip() {
        let text = MINIMAL.replace(
            "\"n_train\": 2",
            "\"n_train\": 2, \"sweep\": {\"axis\": \"wrapper\", \"values\": [{\"kind\": \"none\"}, {\"kind\": \"theta\"}]}",
        );
        let cfg = RunConfig::from_json(&text, "inline").unwrap();
        let sweep = cfg.sweep.clone().unwrap();
        assert_eq!(sweep.label(1), "theta");
        assert_eq!(RunConfig::from_json(&cfg.to_json(), "again").unwrap(), cfg);
    }
}
