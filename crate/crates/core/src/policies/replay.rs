use std::collections::BTreeMap;

use super::{Observation, Policy};
use crate::agents::apply_move;
use crate::trace::{EpisodeTrace, Event};
use crate::world::{Action, NodeId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct RecordedMove {
    action: Action,
    from: NodeId,
    to: NodeId,
}

/// Re-emits one agent's recorded actions.
///
/// Each decision is checked against the live state: the agent must stand
/// where the recording says and the recorded move must land where it did.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    agent: usize,
    moves: BTreeMap<u32, RecordedMove>,
}

impl ReplayPolicy {
    pub fn new(trace: &EpisodeTrace, agent: usize) -> Result<Self> {
        if trace.header.team_of(agent).is_none() {
            return Err(Error::Config(format!("trace has no agent {agent}")));
        }
        let moves: BTreeMap<u32, RecordedMove> = trace
            .events
            .iter()
            .filter_map(|e| match *e {
                Event::Move {
                    t,
                    agent: a,
                    action,
                    from,
                    to,
                    ..
                } if a == agent => Some((t, RecordedMove { action, from, to })),
                _ => None,
            })
            .collect();
        if let Some(t) = (1..=trace.footer.t_end).find(|t| !moves.contains_key(t)) {
            return Err(Error::ReplayDivergence {
                step: t,
                agent,
                reason: "trace lacks a move for this step".into(),
            });
        }
        Ok(ReplayPolicy { agent, moves })
    }

    fn diverged(&self, step: u32, reason: String) -> Error {
        Error::ReplayDivergence {
            step,
            agent: self.agent,
            reason,
        }
    }
}

impl Policy for ReplayPolicy {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        let Some(rec) = self.moves.get(&obs.t).copied() else {
            return Err(self.diverged(obs.t, "recording ended before this step".into()));
        };
        let here = obs.agent.position;
        if here != rec.from {
            return Err(self.diverged(
                obs.t,
                format!("agent is at {here}, recording starts from {}", rec.from),
            ));
        }
        let landed = apply_move(obs.map, here, rec.action, obs.spec.speed).to;
        if landed != rec.to {
            return Err(self.diverged(
                obs.t,
                format!(
                    "{:?} from {here} lands on {landed}, recording says {}",
                    rec.action, rec.to
                ),
            ));
        }
        Ok(rec.action)
    }
}
