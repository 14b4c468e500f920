use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::SearchGrid;
use crate::ddpg::AgentConfig;
use crate::error::{Error, Result};
use crate::mdp::Scenario;

/// Granularity of the myopic planner's search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Spacing of subcarrier, edge VM and cloud VM candidates.
    pub step: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { step: 2 }
    }
}

impl BaselineConfig {
    pub fn grid(&self, scenario: &Scenario) -> SearchGrid {
        SearchGrid::quantized(&scenario.topology, scenario.slices.len(), self.step, scenario.h_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Traffic seeds shared by both planners.
    pub seeds: Vec<u64>,
    /// Arrival rates swept during evaluation, tasks per vehicle per slot;
    /// empty keeps the scenario's own rates.
    pub arrival_rates: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seeds: vec![1001, 1002, 1003, 1004, 1005],
            arrival_rates: vec![1.0, 2.0, 3.0],
        }
    }
}

/// Everything one experiment needs, loaded from a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_episodes() -> usize {
    300
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            agent: AgentConfig::default(),
            episodes: default_episodes(),
            seed: 0,
            baseline: BaselineConfig::default(),
            eval: EvalConfig::default(),
            output_dir: None,
        }
    }

    /// Reads and validates a config; a relative trace path is resolved
    /// against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let crate::mdp::DensitySpec::Trace(p) = &mut cfg.scenario.density {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.agent.validate()?;
        if self.baseline.step == 0 {
            return Err(Error::Config("baseline step must be positive".into()));
        }
        if let Some(r) = self.eval.arrival_rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("invalid evaluation arrival rate {r}")));
        }
        Ok(())
    }

    /// The scenario with every slice's arrival rate set to `rate`.
    pub fn scenario_at(&self, rate: f64) -> Scenario {
        let mut s = self.scenario.clone();
        for slice in &mut s.slices {
            slice.arrival_rate = rate;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig::new(Scenario::reference(2.0, 1.5));
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_document_takes_defaults() {
        let scenario = serde_json::to_value(Scenario::reference(1.0, 1.0)).unwrap();
        let doc = serde_json::json!({ "scenario": scenario });
        let cfg: ExperimentConfig = serde_json::from_value(doc).unwrap();
        assert_eq!(cfg.episodes, 300);
        assert_eq!(cfg.agent, AgentConfig::default());
        assert_eq!(cfg.eval.seeds.len(), 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let scenario = serde_json::to_value(Scenario::reference(1.0, 1.0)).unwrap();
        let doc = serde_json::json!({ "scenario": scenario, "episodez": 3 });
        assert!(serde_json::from_value::<ExperimentConfig>(doc).is_err());
    }

    #[test]
    fn uneven_timescales_are_rejected() {
        let mut cfg = ExperimentConfig::new(Scenario::reference(1.0, 1.0));
        cfg.scenario.timescales.window_duration = 90.5;
        assert!(cfg.validate().is_err());
    }
}
