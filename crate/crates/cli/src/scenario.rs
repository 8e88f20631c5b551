//! Scenario files.
//!
//! A scenario is a JSON object; every section except `map` is optional and
//! unknown keys are rejected. Relative paths resolve against the scenario
//! file's directory. See `scenarios/schema.json` for the full layout.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use forage_core::agents::{IdlenessMode, Team, TeamSpec};
use forage_core::engine::{EpisodeConfig, PolicySpec, DEFAULT_FORGETTING, DEFAULT_HORIZON};
use forage_core::maps;
use forage_core::policies::LevyParams;
use forage_core::resources::{DriftParams, SpawnParams};
use forage_core::trace::EpisodeTrace;
use forage_core::world::{GridMap, NodeId};
use serde::Deserialize;

use crate::{CliError, CliResult};

pub const SCENARIO_SCHEMA: &str = "forage-scenario/1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teams {
    #[serde(default = "TeamSpec::scouts")]
    pub scouts: TeamSpec,
    #[serde(default = "TeamSpec::foragers")]
    pub foragers: TeamSpec,
}

impl Default for Teams {
    fn default() -> Self {
        Teams {
            scouts: TeamSpec::scouts(),
            foragers: TeamSpec::foragers(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Idleness {
    pub forgetting: f64,
    pub mode: IdlenessMode,
}

impl Default for Idleness {
    fn default() -> Self {
        Idleness {
            forgetting: DEFAULT_FORGETTING,
            mode: IdlenessMode::Observe,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policies {
    pub scout: String,
    pub forager: String,
}

impl Default for Policies {
    fn default() -> Self {
        Policies {
            scout: "greedy".into(),
            forager: "greedy".into(),
        }
    }
}

fn default_episodes() -> usize {
    100
}

fn default_horizon() -> u32 {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub schema: Option<String>,
    /// Bundled map name (`open10`, `open20`, `open40`, `wharf`) or a path.
    pub map: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub teams: Teams,
    #[serde(default)]
    pub spawn: SpawnParams,
    #[serde(default)]
    pub drift: DriftParams,
    #[serde(default)]
    pub idleness: Idleness,
    #[serde(default)]
    pub policies: Policies,
    #[serde(default)]
    pub levy: LevyParams,
    #[serde(default)]
    pub deploy: Option<NodeId>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A parsed scenario plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
}

pub fn parse(text: &str) -> CliResult<Scenario> {
    let scenario: Scenario = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("scenario: {e}")))?;
    if let Some(schema) = &scenario.schema {
        if schema != SCENARIO_SCHEMA {
            return Err(CliError::Config(format!(
                "schema: unsupported '{schema}', expected '{SCENARIO_SCHEMA}'"
            )));
        }
    }
    Ok(scenario)
}

pub fn load(path: &Path) -> CliResult<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read scenario {}: {e}", path.display()))
    })?;
    let scenario = parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(LoadedScenario {
        scenario,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

impl LoadedScenario {
    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load_map(&self) -> CliResult<GridMap> {
        let name = &self.scenario.map;
        if let Some(map) = maps::bundled(name) {
            return Ok(map);
        }
        let path = self.resolve(name);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Config(format!("map: cannot read '{}': {e}", path.display()))
        })?;
        GridMap::parse(&text).map_err(|e| CliError::Config(format!("map: {e}")))
    }

    fn policy(&self, field: &str, name: &str) -> CliResult<PolicySpec> {
        Ok(match name {
            "greedy" => PolicySpec::Greedy,
            "levy" => PolicySpec::Levy,
            "random" => PolicySpec::Random,
            other => match other.strip_prefix("replay:") {
                Some(file) => {
                    let path = self.resolve(file);
                    let trace = EpisodeTrace::load(&path).map_err(|e| {
                        CliError::Config(format!(
                            "policies.{field}: cannot load '{}': {e}",
                            path.display()
                        ))
                    })?;
                    PolicySpec::Replay(Arc::new(trace))
                }
                None => {
                    return Err(CliError::Config(format!(
                        "policies.{field}: unknown policy '{other}' \
                         (expected greedy, levy, random or replay:<trace>)"
                    )))
                }
            },
        })
    }

    /// Episode configuration with `seed` as the batch master seed.
    pub fn episode_config(&self, seed: u64) -> CliResult<EpisodeConfig> {
        let s = &self.scenario;
        let map = Arc::new(self.load_map()?);
        let config = EpisodeConfig {
            map,
            scouts: s.teams.scouts,
            foragers: s.teams.foragers,
            spawn: s.spawn,
            drift: s.drift,
            horizon: s.horizon,
            seed,
            forgetting: s.idleness.forgetting,
            idleness: s.idleness.mode,
            scout_policy: self.policy("scout", &s.policies.scout)?,
            forager_policy: self.policy("forager", &s.policies.forager)?,
            levy: s.levy,
            deploy: s.deploy,
            corruption: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn team_count(&self, team: Team) -> usize {
        match team {
            Team::Scout => self.scenario.teams.scouts.count,
            Team::Forager => self.scenario.teams.foragers.count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse(r#"{"map": "open10"}"#).unwrap();
        assert_eq!(s.episodes, 100);
        assert_eq!(s.horizon, 150);
        assert_eq!(s.teams.scouts.count, 2);
        assert_eq!(s.policies.forager, "greedy");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = parse("{\n  \"map\": \"open10\",\n  \"colour\": 3\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn nested_unknown_keys_are_rejected() {
        assert!(parse(r#"{"map": "open10", "teams": {"scouts": {"count": 1, "speed": 2, "sensing_radius": 4, "x": 1}}}"#).is_err());
        assert!(parse(r#"{"map": "open10", "spawn": {"k_avg": 3}}"#).is_err());
    }

    #[test]
    fn bad_schema_and_policy() {
        assert!(parse(r#"{"map": "open10", "schema": "forage-scenario/9"}"#).is_err());
        let loaded = LoadedScenario {
            scenario: parse(r#"{"map": "open10", "policies": {"scout": "drl"}}"#).unwrap(),
            base_dir: PathBuf::new(),
        };
        let msg = loaded.episode_config(1).unwrap_err().to_string();
        assert!(msg.contains("policies.scout"), "{msg}");
    }

    #[test]
    fn missing_map_names_the_field() {
        let loaded = LoadedScenario {
            scenario: parse(r#"{"map": "nowhere/none.txt"}"#).unwrap(),
            base_dir: PathBuf::new(),
        };
        let err = loaded.episode_config(1).unwrap_err();
        assert!(err.to_string().starts_with("map:"));
        assert_eq!(err.exit_code(), 2);
    }
}
