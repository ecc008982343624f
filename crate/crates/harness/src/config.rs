//! Experiment configuration: one JSON document plus dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use smartsched::a2c::TrainConfig;
use smartsched::env::EnvConfig;
use smartsched::pareto::{GaConfig, PlaConfig};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSection {
    /// Scheme under test: `rr`, `maxci`, `maxmin`, `pf` or `drl`.
    pub name: String,
    /// Reference scheme of comparisons.
    pub baseline: String,
    /// Agent parameters for `drl`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        SchedulerSection {
            name: "pf".into(),
            baseline: "pf".into(),
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Number of episodes; episode `i` uses a seed derived from the master seed.
    pub episodes: u64,
    /// Rows of the per-window CSV.
    pub window_ttis: u64,
    /// Drive the baseline with its own exogenous stream instead of the shared one.
    pub independent: bool,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            episodes: 20,
            window_ttis: 100,
            independent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoSection {
    pub ga: GaConfig,
    pub pla: PlaConfig,
    pub run_ga: bool,
    pub run_pla: bool,
    /// Also enumerate every sequence (tiny traces only).
    pub exhaustive: bool,
}

impl Default for ParetoSection {
    fn default() -> Self {
        ParetoSection {
            ga: GaConfig::default(),
            pla: PlaConfig::default(),
            run_ga: true,
            run_pla: true,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub env: EnvConfig,
    pub scheduler: SchedulerSection,
    pub training: TrainConfig,
    /// Recorded traces for training in replayed environments. Empty trains live.
    pub training_traces: Vec<PathBuf>,
    pub evaluation: EvaluationSection,
    pub pareto: ParetoSection,
    /// Input trace for `pareto`, `trace-replay`, and replayed `compare`.
    pub trace: Option<PathBuf>,
    /// Directory receiving every output file.
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            env: EnvConfig::default(),
            scheduler: SchedulerSection::default(),
            training: TrainConfig::default(),
            training_traces: Vec::new(),
            evaluation: EvaluationSection::default(),
            pareto: ParetoSection::default(),
            trace: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Set `path` (dot separated) inside `doc`, creating objects on the way.
/// `raw` is parsed as JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> Result<(), HarnessError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("bad override path `{path}`")));
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            other if other.is_null() => {
                *other = Value::Object(Default::default());
                other.as_object_mut().expect("just made an object")
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "override `{path}`: `{}` is not an object",
                    parts[..i].join(".")
                )))
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last part")
}

impl ExperimentConfig {
    /// Load `path` (or defaults when `None`), apply `key=value` overrides and
    /// validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override `{o}` is not key=value")))?;
            apply_override(&mut doc, k.trim(), v.trim())?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc)
            .map_err(|e| HarnessError::Config(format!("configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate()?;
        self.training.validate()?;
        self.pareto.ga.validate()?;
        self.pareto.pla.validate()?;
        if self.evaluation.episodes == 0 {
            return Err(HarnessError::Config("evaluation.episodes must be at least 1".into()));
        }
        if self.evaluation.window_ttis == 0 {
            return Err(HarnessError::Config("evaluation.window_ttis must be at least 1".into()));
        }
        let files = self
            .scheduler
            .checkpoint
            .iter()
            .chain(&self.trace)
            .chain(&self.training_traces);
        for f in files {
            if !f.is_file() {
                return Err(HarnessError::Config(format!("{}: file not found", f.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guide_example_config_loads() {
        let page = include_str!("../../../book/src/cli.md");
        let json = page
            .split("```json\n")
            .nth(1)
            .and_then(|rest| rest.split("```").next())
            .expect("json block in the CLI chapter");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(&path, json).unwrap();
        let cfg = ExperimentConfig::load(Some(&path), &[]).unwrap();
        assert_eq!(cfg.training.max_updates, 3000);
        assert_eq!(cfg.pareto.pla.l_max, 64);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = ExperimentConfig::load(
            None,
            &["env.num_ues=7".into(), "scheduler.name=rr".into(), "training.gamma=0.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.env.num_ues, 7);
        assert_eq!(cfg.scheduler.name, "rr");
        assert_eq!(cfg.training.gamma, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::load(None, &["env.nope=1".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["bogus=1".into()]).is_err());
    }

    #[test]
    fn missing_files_are_rejected() {
        let e = ExperimentConfig::load(None, &["trace=/no/such/trace.jsonl".into()]).unwrap_err();
        assert!(e.to_string().contains("/no/such/trace.jsonl"));
    }
}
