//! TOML run configuration: model parameters, batch size, base seed and the
//! scenarios to run, with per-pedestrian overrides.
//!
//! ```toml
//! trials = 100
//! seed = 1
//!
//! [params]
//! fy_denominator = 0.18
//!
//! [[scenario]]
//! name = "different_risk_thresholds"
//!
//! [[scenario]]
//! name = "custom"
//! a = { rho = 0.6, x_offset = 0.05 }
//! b = { bias = { left = 1.3, right = 0.7 } }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::belief::BeliefBias;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::simulator::{make_scenario, Scenario, SCENARIO_NAMES};

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;

/// Optional replacements for one pedestrian's scenario settings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<BeliefBias>,
}

impl PedestrianOverride {
    fn apply(&self, base: AgentConfig) -> AgentConfig {
        AgentConfig {
            rho: self.rho.unwrap_or(base.rho),
            x_offset: self.x_offset.unwrap_or(base.x_offset),
            bias: self.bias.unwrap_or(base.bias),
        }
    }

    fn full(cfg: &AgentConfig) -> Self {
        Self {
            rho: Some(cfg.rho),
            x_offset: Some(cfg.x_offset),
            bias: Some(cfg.bias),
        }
    }
}

/// A scenario by name. Built-in names start from their table values; any
/// other name starts from the symmetric settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    #[serde(default)]
    pub a: PedestrianOverride,
    #[serde(default)]
    pub b: PedestrianOverride,
}

impl ScenarioEntry {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            a: PedestrianOverride::default(),
            b: PedestrianOverride::default(),
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        if self.name.trim().is_empty() {
            return Err(Error::invalid("scenario.name", "must not be empty"));
        }
        let base = match make_scenario(&self.name) {
            Ok(s) => s,
            Err(_) => Scenario {
                name: self.name.clone(),
                ..make_scenario("symmetric")?
            },
        };
        let s = Scenario {
            name: self.name.clone(),
            a: self.a.apply(base.a),
            b: self.b.apply(base.b),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioEntry>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            params: ModelParams::default(),
            scenarios: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.params.validate()?;
        for s in &cfg.scenarios {
            s.resolve()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Scenario list for a name on the command line; `all` expands to the
    /// five built-ins.
    pub fn entries_for(name: &str) -> Result<Vec<ScenarioEntry>> {
        if name == "all" {
            return Ok(SCENARIO_NAMES.iter().map(|n| ScenarioEntry::named(n)).collect());
        }
        make_scenario(name)?;
        Ok(vec![ScenarioEntry::named(name)])
    }

    pub fn resolved_scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios.iter().map(ScenarioEntry::resolve).collect()
    }

    /// Fully spelled-out copy: every parameter and pedestrian setting explicit.
    pub fn effective(&self) -> Result<Self> {
        let scenarios = self
            .resolved_scenarios()?
            .iter()
            .map(|s| ScenarioEntry {
                name: s.name.clone(),
                a: PedestrianOverride::full(&s.a),
                b: PedestrianOverride::full(&s.b),
            })
            .collect();
        Ok(Self {
            scenarios,
            ..self.clone()
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn nested_overrides() {
        let cfg = RunConfig::parse(
            r#"
trials = 5
seed = 9
[params]
fy_denominator = 0.18
[[scenario]]
name = "different_sides"
b = { rho = 0.7 }
[[scenario]]
name = "mine"
a = { bias = { left = 1.3, right = 0.7 } }
"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.params.fy_denominator, 0.18);
        let s = cfg.resolved_scenarios().unwrap();
        assert_eq!(s[0].a.x_offset, 0.1);
        assert_eq!(s[0].b.x_offset, -0.1);
        assert_eq!(s[0].b.rho, 0.7);
        assert_eq!(s[1].name, "mine");
        assert_eq!(s[1].a.bias, BeliefBias::PASS_LEFT);
        assert_eq!(s[1].b.bias, BeliefBias::NONE);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(RunConfig::parse("[params]\nspeed = 1.0\n"), Err(Error::Config(_))));
        assert!(RunConfig::parse("[params]\ndt_sim = -1.0\n").is_err());
        assert!(RunConfig::parse("[[scenario]]\nname = \"x\"\na = { rho = 2.0 }\n").is_err());
        assert!(RunConfig::parse("[[scenario]]\nname = \"x\"\nc = {}\n").is_err());
        assert!(RunConfig::parse("trials = \"many\"").is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let mut cfg = RunConfig {
            scenarios: RunConfig::entries_for("all").unwrap(),
            ..Default::default()
        };
        cfg.params.apply_override("beta=0.05").unwrap();
        let eff = cfg.effective().unwrap();
        let back = RunConfig::parse(&eff.to_toml().unwrap()).unwrap();
        assert_eq!(back, eff);
        assert_eq!(back.resolved_scenarios().unwrap(), cfg.resolved_scenarios().unwrap());
    }

    #[test]
    fn unknown_cli_scenario() {
        assert!(matches!(RunConfig::entries_for("salsa"), Err(Error::UnknownScenario(_))));
        assert_eq!(RunConfig::entries_for("all").unwrap().len(), 5);
    }
}
