//! Decision layer.
//!
//! Policies see an [`Observation`]: their own state, the team roster, the
//! shared model `Ŷ` and the map. Ground truth is never part of it.

mod corrupt;
mod greedy;
mod levy;
mod replay;

use serde::{Deserialize, Serialize};

pub use corrupt::{corruption_draw, Corrupted, UniformRandom};
pub use greedy::{
    best_action, greedy_forager_scores, greedy_scout_scores, GreedyForager, GreedyScout,
};
pub use levy::{LevyForager, LevyParams, LevyScout, LevyWalk, MAX_REDRAWS};
pub use replay::ReplayPolicy;

use crate::agents::{AgentState, SharedModel, TeamSpec};
use crate::grid::Grid;
pub use crate::world::Action;
use crate::world::{DistanceField, GridMap, NodeId};
use crate::Result;

/// Consistent snapshot of step `t` taken before any agent moves.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub agent: AgentState,
    pub spec: TeamSpec,
    pub agents: &'a [AgentState],
    pub model: &'a SharedModel,
    pub map: &'a GridMap,
    /// Union of all agents' fields of view at the end of the previous step.
    pub visible: &'a Grid<bool>,
    pub t: u32,
    pub horizon: u32,
}

pub trait Policy: Send {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action>;
}

pub type PolicyHandle = Box<dyn Policy>;

/// Named policy families selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Greedy,
    Levy,
    Random,
}

/// First action toward the nearest cell with `Ŷ > 0` (Dijkstra distance).
///
/// Equal-distance targets resolve to the one whose first step comes earliest
/// in canonical order. Returns `Stay` when the own cell is a target and `None`
/// when no target is known or reachable.
pub fn step_toward_nearest_known(obs: &Observation<'_>) -> Result<Option<Action>> {
    Ok(nearest_target(obs, |_| true)?.map(|(a, _)| a))
}

/// Like [`step_toward_nearest_known`] restricted to cells passing `keep`;
/// also returns the chosen target cell.
pub(crate) fn nearest_target(
    obs: &Observation<'_>,
    keep: impl Fn(NodeId) -> bool,
) -> Result<Option<(Action, NodeId)>> {
    let map = obs.map;
    let est = &obs.model.estimate;
    let is_target = |n: NodeId| est[n] > 0 && keep(n);
    if !map.nodes().any(is_target) {
        return Ok(None);
    }
    let here = obs.agent.position;
    if is_target(here) {
        return Ok(Some((Action::Stay, here)));
    }
    let field = DistanceField::compute(map, here)?;
    let best = map
        .nodes()
        .filter(|&n| is_target(n))
        .filter_map(|n| Some((field.cost(map, n)?, field.first_step(map, n)?, n)))
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(best.map(|(_, dir, n)| (Action::from(dir), n)))
}
