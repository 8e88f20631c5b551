//! The episode loop.
//!
//! Step 0 only observes: foragers collect whatever lies under the deployment
//! cell, then fields of view, discoveries and the shared model are computed.
//! Every later step runs the phases in this order:
//!
//! 1. snapshot the observation,
//! 2. every agent decides (id order),
//! 3. every agent moves,
//! 4. foragers collect at their final cells (id order),
//! 5. items drift,
//! 6. fields of view and discoveries,
//! 7. shared model and idleness update,
//! 8. step summary.
//!
//! The episode ends at the horizon or as soon as no item is left.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::agents::{apply_move, coverage_mask, field_of_view, AgentState, IdlenessMode, SharedModel, Team, TeamSpec};
use crate::grid::Grid;
use crate::metrics::{MetricReport, ReportBuilder, StepFrame};
use crate::policies::{
    Corrupted, GreedyForager, GreedyScout, LevyForager, LevyParams, LevyScout, Observation,
    PolicyHandle, ReplayPolicy, UniformRandom,
};
use crate::resources::{spawn_items, DriftParams, SpawnParams};
use crate::streams::{stream, StreamKey, StreamRng};
use crate::trace::{
    AgentRecord, EndReason, EpisodeTrace, Event, Footer, MapRecord, PolicyLabels, StepSummary,
    TeamRecord, TraceHeader, TRACE_VERSION,
};
use crate::world::{hex_digest, GridMap, NodeId};
use crate::{Error, Result};

pub const DEFAULT_HORIZON: u32 = 150;
pub const DEFAULT_FORGETTING: f64 = 0.95;

/// How one team chooses actions.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Greedy,
    Levy,
    Random,
    /// Re-emit the moves recorded for the same agent ids in a trace.
    Replay(Arc<EpisodeTrace>),
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Greedy => "greedy",
            PolicySpec::Levy => "levy",
            PolicySpec::Random => "random",
            PolicySpec::Replay(_) => "replay",
        }
    }
}

/// ε-mixing of one team's policy with uniform random actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub team: Team,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub map: Arc<GridMap>,
    pub scouts: TeamSpec,
    pub foragers: TeamSpec,
    pub spawn: SpawnParams,
    pub drift: DriftParams,
    pub horizon: u32,
    pub seed: u64,
    pub forgetting: f64,
    pub idleness: IdlenessMode,
    pub scout_policy: PolicySpec,
    pub forager_policy: PolicySpec,
    pub levy: LevyParams,
    /// Fixed deployment cell; drawn uniformly when absent.
    pub deploy: Option<NodeId>,
    pub corruption: Option<Corruption>,
}

impl EpisodeConfig {
    /// Two Greedy scouts and two Greedy foragers with default parameters.
    pub fn new(map: Arc<GridMap>, seed: u64) -> Self {
        EpisodeConfig {
            map,
            scouts: TeamSpec::scouts(),
            foragers: TeamSpec::foragers(),
            spawn: SpawnParams::default(),
            drift: DriftParams::default(),
            horizon: DEFAULT_HORIZON,
            seed,
            forgetting: DEFAULT_FORGETTING,
            idleness: IdlenessMode::Observe,
            scout_policy: PolicySpec::Greedy,
            forager_policy: PolicySpec::Greedy,
            levy: LevyParams::default(),
            deploy: None,
            corruption: None,
        }
    }

    pub fn with_policies(mut self, scout: PolicySpec, forager: PolicySpec) -> Self {
        self.scout_policy = scout;
        self.forager_policy = forager;
        self
    }

    pub fn team_spec(&self, team: Team) -> TeamSpec {
        match team {
            Team::Scout => self.scouts,
            Team::Forager => self.foragers,
        }
    }

    pub fn policy(&self, team: Team) -> &PolicySpec {
        match team {
            Team::Scout => &self.scout_policy,
            Team::Forager => &self.forager_policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.forgetting > 0.0 && self.forgetting < 1.0) {
            return Err(Error::Config(format!(
                "idleness.forgetting must lie in (0, 1), got {}",
                self.forgetting
            )));
        }
        self.scouts.validate(Team::Scout)?;
        self.foragers.validate(Team::Forager)?;
        self.spawn.validate()?;
        self.drift.validate()?;
        self.levy.validate()?;
        if let Some(c) = self.corruption {
            if !(0.0..=1.0).contains(&c.epsilon) {
                return Err(Error::Domain(format!(
                    "corruption epsilon must lie in [0, 1], got {}",
                    c.epsilon
                )));
            }
        }
        if let Some(d) = self.deploy {
            if !self.map.is_navigable(d) {
                return Err(Error::Config(format!("deploy cell {d} is not navigable")));
            }
        }
        Ok(())
    }

    /// The corruption that actually changes behaviour: ε = 0 is the identity.
    fn effective_corruption(&self) -> Option<Corruption> {
        self.corruption.filter(|c| c.epsilon > 0.0)
    }

    pub fn policy_label(&self, team: Team) -> String {
        let base = self.policy(team).label();
        match self.effective_corruption() {
            Some(c) if c.team == team => format!("corrupt({base},{})", c.epsilon),
            _ => base.to_string(),
        }
    }

    /// SHA-256 over every behaviour-relevant setting except the seed.
    pub fn digest(&self) -> String {
        let value = json!({
            "map": self.map.digest(),
            "scouts": self.scouts,
            "foragers": self.foragers,
            "spawn": self.spawn,
            "drift": self.drift,
            "horizon": self.horizon,
            "forgetting": self.forgetting,
            "idleness": self.idleness,
            "policies": [self.policy_label(Team::Scout), self.policy_label(Team::Forager)],
            "levy": self.levy,
            "deploy": self.deploy,
        });
        hex_digest(value.to_string().as_bytes())
    }
}

/// Shared deployment cell: the configured one or a uniform navigable draw.
pub fn agent_start_positions<R: Rng + ?Sized>(
    config: &EpisodeConfig,
    map: &GridMap,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let cell = match config.deploy {
        Some(d) => {
            if !map.is_navigable(d) {
                return Err(Error::NotNavigable(d));
            }
            d
        }
        None => {
            let count = map.navigable_count();
            if count == 0 {
                return Err(Error::EmptyMap);
            }
            map.nodes()
                .nth(rng.random_range(0..count))
                .expect("index below navigable count")
        }
    };
    Ok(vec![cell; config.scouts.count + config.foragers.count])
}

/// Policy of one agent replaying its recorded moves.
pub fn replay_policy(trace: &EpisodeTrace, agent: usize) -> Result<PolicyHandle> {
    Ok(Box::new(ReplayPolicy::new(trace, agent)?))
}

fn build_policy(
    config: &EpisodeConfig,
    agent: usize,
    team: Team,
    index: u32,
) -> Result<PolicyHandle> {
    let rng = || stream(config.seed, StreamKey::Policy(team, index));
    let base: PolicyHandle = match (config.policy(team), team) {
        (PolicySpec::Greedy, Team::Scout) => Box::new(GreedyScout),
        (PolicySpec::Greedy, Team::Forager) => Box::new(GreedyForager),
        (PolicySpec::Levy, Team::Scout) => Box::new(LevyScout::new(config.levy, rng())),
        (PolicySpec::Levy, Team::Forager) => Box::new(LevyForager::new(config.levy, rng())),
        (PolicySpec::Random, _) => Box::new(UniformRandom::new(rng())),
        (PolicySpec::Replay(trace), _) => replay_policy(trace, agent)?,
    };
    Ok(match config.corruption {
        Some(c) if c.team == team => Box::new(Corrupted::new(
            base,
            c.epsilon,
            stream(config.seed, StreamKey::Corruption(team, index)),
        )?),
        _ => base,
    })
}

/// Trace plus the report computed while the episode ran.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub trace: EpisodeTrace,
    pub report: MetricReport,
}

pub fn run_episode(config: &EpisodeConfig) -> Result<EpisodeRun> {
    config.validate()?;
    let map: &GridMap = &config.map;
    let seed = config.seed;

    let mut field = spawn_items(
        map,
        &config.spawn,
        config.drift,
        &mut stream(seed, StreamKey::Spawn),
        &mut stream(seed, StreamKey::Wind),
    )?;
    let k = field.initial_count() as u32;
    let mut noise: Vec<StreamRng> = (0..k)
        .map(|i| stream(seed, StreamKey::ItemNoise(i)))
        .collect();

    let starts = agent_start_positions(config, map, &mut stream(seed, StreamKey::Deploy))?;
    let mut agents: Vec<AgentState> = starts
        .iter()
        .enumerate()
        .map(|(id, &position)| AgentState {
            id,
            team: if id < config.scouts.count {
                Team::Scout
            } else {
                Team::Forager
            },
            position,
        })
        .collect();
    let mut policies = agents
        .iter()
        .map(|a| {
            let index = match a.team {
                Team::Scout => a.id,
                Team::Forager => a.id - config.scouts.count,
            };
            build_policy(config, a.id, a.team, index as u32)
        })
        .collect::<Result<Vec<_>>>()?;

    let header = TraceHeader {
        trace_version: TRACE_VERSION,
        seed,
        config_digest: config.digest(),
        map_digest: map.digest(),
        map: MapRecord {
            cell_size: map.cell_size(),
            rows: map.rows(),
        },
        k,
        wind: field.wind,
        hotspot: field.hotspot,
        spawn_digest: field.spawn_digest(),
        horizon: config.horizon,
        forgetting: config.forgetting,
        idleness_mode: config.idleness,
        teams: TeamRecord {
            scouts: config.scouts,
            foragers: config.foragers,
        },
        agents: agents
            .iter()
            .map(|a| AgentRecord {
                id: a.id,
                team: a.team,
                start: a.position,
            })
            .collect(),
        policies: PolicyLabels {
            scout: config.policy_label(Team::Scout),
            forager: config.policy_label(Team::Forager),
        },
    };

    let mut builder = ReportBuilder::new(
        seed,
        k,
        config.horizon,
        config.forgetting,
        agents.iter().map(|a| a.team).collect(),
    )?;
    let mut model = SharedModel::new(map, config.forgetting, config.idleness);
    let mut visible = Grid::filled(map.height(), map.width(), false);
    let mut discovered = vec![false; k as usize];
    let mut n_discovered = 0u32;
    let mut n_collected = 0u32;
    let mut events: Vec<Event> = Vec::new();

    let mut t = 0u32;
    let reason = loop {
        let step_start = events.len();
        if t > 0 {
            let snapshot = agents.clone();
            let mut actions = Vec::with_capacity(agents.len());
            for (a, policy) in snapshot.iter().zip(policies.iter_mut()) {
                let obs = Observation {
                    agent: *a,
                    spec: config.team_spec(a.team),
                    agents: &snapshot,
                    model: &model,
                    map,
                    visible: &visible,
                    t,
                    horizon: config.horizon,
                };
                actions.push(policy.decide(&obs)?);
            }
            for (a, action) in agents.iter_mut().zip(actions) {
                let d = apply_move(map, a.position, action, config.team_spec(a.team).speed);
                events.push(Event::Move {
                    t,
                    agent: a.id,
                    action,
                    from: a.position,
                    via: d.via,
                    to: d.to,
                });
                a.position = d.to;
            }
        }

        for a in agents.iter().filter(|a| a.team == Team::Forager) {
            for item in field.collect_at(map, a.position) {
                n_collected += 1;
                events.push(Event::Collect {
                    t,
                    item,
                    cell: a.position,
                    agent: a.id,
                });
            }
        }

        if t > 0 {
            field.step(map, &mut noise);
        }

        let fovs: Vec<Vec<NodeId>> = agents
            .iter()
            .map(|a| field_of_view(map, a.position, config.team_spec(a.team).sensing_radius))
            .collect();
        let masks: Vec<Grid<bool>> = fovs
            .iter()
            .map(|f| coverage_mask(map, [f.as_slice()]))
            .collect();
        let mut found: Vec<(usize, u32, NodeId)> = Vec::new();
        for item in field.items.iter().filter(|it| it.alive) {
            if discovered[item.id as usize] {
                continue;
            }
            let cell = field.item_cell(map, item);
            if let Some(agent) = masks.iter().position(|m| m[cell]) {
                found.push((agent, item.id, cell));
            }
        }
        found.sort_unstable();
        for (agent, item, cell) in found {
            discovered[item as usize] = true;
            n_discovered += 1;
            events.push(Event::Discover {
                t,
                item,
                cell,
                agent,
                team: agents[agent].team,
            });
        }

        visible = coverage_mask(map, fovs.iter().map(|f| f.as_slice()));
        let occupied = coverage_mask(map, agents.iter().map(|a| std::slice::from_ref(&a.position)));
        let truth = field.discretize(map);
        model.update(map, &truth, &visible, &occupied, t);

        builder.push_step(
            map,
            StepFrame {
                t,
                truth: &truth,
                estimate: &model.estimate,
                ages: &model.age,
                fovs: &fovs,
                events: &events[step_start..],
            },
        )?;
        let alive = field.alive_count() as u32;
        let mi = builder.last_mi().expect("a step was just pushed");
        events.push(Event::StepSummary(StepSummary {
            t,
            alive,
            discovered: n_discovered,
            collected: n_collected,
            mi,
            visible_digest: mask_digest(&visible),
            truth: map
                .nodes()
                .filter(|&n| truth[n] > 0)
                .map(|n| (n, truth[n]))
                .collect(),
            fov: fovs,
        }));

        if alive == 0 {
            break EndReason::Cleared;
        }
        if t == config.horizon {
            break EndReason::Horizon;
        }
        t += 1;
    };

    let trace = EpisodeTrace {
        header,
        events,
        footer: Footer { t_end: t, reason },
    };
    let report = builder.finish(t)?;
    Ok(EpisodeRun { trace, report })
}

fn mask_digest(mask: &Grid<bool>) -> String {
    let bytes: Vec<u8> = mask.as_slice().iter().map(|&b| b as u8).collect();
    hex_digest(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;

    fn config(seed: u64) -> EpisodeConfig {
        let mut c = EpisodeConfig::new(Arc::new(GridMap::parse(maps::OPEN_20).unwrap()), seed);
        c.horizon = 40;
        c
    }

    #[test]
    fn deterministic_bytes() {
        let a = run_episode(&config(3)).unwrap().trace.to_jsonl();
        let b = run_episode(&config(3)).unwrap().trace.to_jsonl();
        let c = run_episode(&config(4)).unwrap().trace.to_jsonl();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn steps_and_moves() {
        let run = run_episode(&config(5)).unwrap();
        let tr = &run.trace;
        assert_eq!(tr.summaries().count() as u32, tr.footer.t_end + 1);
        let moves = tr.events.iter().filter(|e| matches!(e, Event::Move { .. })).count();
        assert_eq!(moves as u32, 4 * tr.footer.t_end);
        let mut last = 0;
        for e in &tr.events {
            assert!(e.t() >= last);
            last = e.t();
        }
    }

    #[test]
    fn scouts_only_never_collect() {
        let mut c = config(6);
        c.foragers.count = 0;
        c.scouts.count = 1;
        let run = run_episode(&c).unwrap();
        assert_eq!(run.trace.footer.reason, EndReason::Horizon);
        let mut prev = 0;
        for s in run.trace.summaries() {
            assert_eq!(s.collected, 0);
            assert!(s.discovered >= prev);
            prev = s.discovered;
        }
    }

    #[test]
    fn tight_cluster_under_forager_is_cleared_at_start() {
        let mut c = config(7);
        c.spawn = SpawnParams {
            k_mean: 1.0,
            k_std: 0.0,
            k_min: 1,
            k_max: 1,
            spread_std: 1e-6,
        };
        c.drift.wind_max = 0.0;
        c.drift.rand_max = 0.0;
        // find the hotspot, then deploy on it
        let hotspot = run_episode(&c).unwrap().trace.header.hotspot;
        c.deploy = Some(hotspot);
        let run = run_episode(&c).unwrap();
        assert_eq!(run.trace.footer.t_end, 0);
        assert_eq!(run.trace.footer.reason, EndReason::Cleared);
        assert_eq!(run.report.pta_c_final, 100.0);
        assert_eq!(run.report.throughput, None);
    }

    #[test]
    fn fixed_deploy_cell() {
        let mut c = config(8);
        c.deploy = Some(NodeId::new(3, 4));
        let starts = agent_start_positions(&c, &c.map, &mut stream(1, StreamKey::Deploy)).unwrap();
        assert_eq!(starts, vec![NodeId::new(3, 4); 4]);
    }

    #[test]
    fn invalid_config() {
        let mut c = config(1);
        c.horizon = 0;
        assert!(matches!(run_episode(&c), Err(Error::Config(_))));
        let mut c = config(1);
        c.corruption = Some(Corruption {
            team: Team::Scout,
            epsilon: 2.0,
        });
        assert!(run_episode(&c).is_err());
    }
}
