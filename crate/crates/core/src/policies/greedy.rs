//! Greedy baselines.
//!
//! Agents of one team decide in id order against the intentions of their
//! lower-id teammates: each agent replays its teammates' greedy choices from
//! the same observation and treats the cells they are about to reveal (scouts)
//! or head for (foragers) as taken. A lone agent scores exactly as the
//! instant utilities below.

use super::{nearest_target, Observation, Policy};
use crate::agents::{apply_move, field_of_view, AgentState};
use crate::grid::Grid;
use crate::world::{Action, NodeId};
use crate::Result;

/// Instant utility of each action for a scout: summed `idleness + Ŷ` over the
/// cells that would newly enter its view (cells nobody sees right now).
pub fn greedy_scout_scores(obs: &Observation<'_>) -> [f64; 9] {
    scout_scores(obs, obs.visible)
}

fn scout_scores(obs: &Observation<'_>, covered: &Grid<bool>) -> [f64; 9] {
    let mut scores = [0.0; 9];
    for (slot, action) in scores.iter_mut().zip(Action::ALL) {
        let dest = apply_move(obs.map, obs.agent.position, action, obs.spec.speed).to;
        *slot = field_of_view(obs.map, dest, obs.spec.sensing_radius)
            .into_iter()
            .filter(|&c| !covered[c])
            .map(|c| obs.model.idleness(c) + obs.model.estimate[c] as f64)
            .sum();
    }
    scores
}

/// Instant utility of each action for a forager: `Ŷ` at the destination.
pub fn greedy_forager_scores(obs: &Observation<'_>) -> [f64; 9] {
    let none = Grid::filled(obs.map.height(), obs.map.width(), false);
    forager_scores(obs, &none)
}

fn forager_scores(obs: &Observation<'_>, claimed: &Grid<bool>) -> [f64; 9] {
    let mut scores = [0.0; 9];
    for (slot, action) in scores.iter_mut().zip(Action::ALL) {
        let dest = apply_move(obs.map, obs.agent.position, action, obs.spec.speed).to;
        if !claimed[dest] {
            *slot = obs.model.estimate[dest] as f64;
        }
    }
    scores
}

/// First action with the maximal score, or `None` if every score is `<= 0`.
pub fn best_action(scores: &[f64; 9]) -> Option<Action> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| Action::ALL[i])
}

fn lower_teammates<'a>(obs: &'a Observation<'_>) -> impl Iterator<Item = &'a AgentState> + 'a {
    let me = obs.agent;
    obs.agents
        .iter()
        .filter(move |m| m.team == me.team && m.id < me.id)
}

fn scout_choice(obs: &Observation<'_>, covered: &Grid<bool>) -> Action {
    best_action(&scout_scores(obs, covered)).unwrap_or(Action::Stay)
}

/// Destination-`Ŷ` maximiser, then nearest unclaimed known item, then nearest
/// known item at all. Also returns the cell the forager is going for.
fn forager_choice(
    obs: &Observation<'_>,
    claimed: &Grid<bool>,
) -> Result<(Action, Option<NodeId>)> {
    if let Some(a) = best_action(&forager_scores(obs, claimed)) {
        let dest = apply_move(obs.map, obs.agent.position, a, obs.spec.speed).to;
        return Ok((a, Some(dest)));
    }
    if let Some((a, n)) = nearest_target(obs, |n| !claimed[n])? {
        return Ok((a, Some(n)));
    }
    Ok(match nearest_target(obs, |_| true)? {
        Some((a, n)) => (a, Some(n)),
        None => (Action::Stay, None),
    })
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GreedyScout;

impl Policy for GreedyScout {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        let mut covered = obs.visible.clone();
        for mate in lower_teammates(obs) {
            let view = Observation {
                agent: *mate,
                ..*obs
            };
            let a = scout_choice(&view, &covered);
            let dest = apply_move(obs.map, mate.position, a, obs.spec.speed).to;
            for c in field_of_view(obs.map, dest, obs.spec.sensing_radius) {
                covered[c] = true;
            }
        }
        Ok(scout_choice(obs, &covered))
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GreedyForager;

impl Policy for GreedyForager {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        let mut claimed = Grid::filled(obs.map.height(), obs.map.width(), false);
        for mate in lower_teammates(obs) {
            let view = Observation {
                agent: *mate,
                ..*obs
            };
            if let (_, Some(target)) = forager_choice(&view, &claimed)? {
                claimed[target] = true;
            }
        }
        Ok(forager_choice(obs, &claimed)?.0)
    }
}
