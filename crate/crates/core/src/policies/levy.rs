use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use super::{step_toward_nearest_known, Observation, Policy};
use crate::streams::StreamRng;
use crate::world::{Action, Direction, GridMap, NodeId};
use crate::{Error, Result};

/// Heading redraws allowed before giving up and staying.
pub const MAX_REDRAWS: u32 = 16;

/// Step-length law: Pareto(shape `alpha`, scale 1) capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevyParams {
    pub alpha: f64,
    pub cap: f64,
}

impl Default for LevyParams {
    fn default() -> Self {
        LevyParams {
            alpha: 1.5,
            cap: 20.0,
        }
    }
}

impl LevyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.cap >= 1.0 && self.cap.is_finite()) {
            return Err(Error::Config(format!(
                "levy needs alpha > 0 and cap >= 1, got alpha={} cap={}",
                self.alpha, self.cap
            )));
        }
        Ok(())
    }

    /// One capped step length.
    pub fn sample_length<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pareto = Pareto::new(1.0, self.alpha).expect("validated Pareto parameters");
        pareto.sample(rng).min(self.cap)
    }
}

/// Lévy-walk state: current heading and remaining straight steps.
#[derive(Debug, Clone)]
pub struct LevyWalk {
    params: LevyParams,
    heading: Direction,
    remaining: u32,
    rng: StreamRng,
}

impl LevyWalk {
    pub fn new(params: LevyParams, rng: StreamRng) -> Self {
        LevyWalk {
            params,
            heading: Direction::N,
            remaining: 0,
            rng,
        }
    }

    pub fn heading(&self) -> Direction {
        self.heading
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    fn draw(&mut self) {
        let length = self.params.sample_length(&mut self.rng);
        self.heading = Direction::ALL[self.rng.random_range(0..8)];
        self.remaining = (length.ceil() as u32).max(1);
    }

    pub fn next_action(&mut self, map: &GridMap, position: NodeId) -> Action {
        if self.remaining == 0 {
            self.draw();
        }
        let mut redraws = 0;
        while map.step(position, self.heading).is_none() {
            if redraws == MAX_REDRAWS {
                self.remaining = 0;
                return Action::Stay;
            }
            self.draw();
            redraws += 1;
        }
        self.remaining -= 1;
        Action::from(self.heading)
    }
}

#[derive(Debug, Clone)]
pub struct LevyScout {
    walk: LevyWalk,
}

impl LevyScout {
    pub fn new(params: LevyParams, rng: StreamRng) -> Self {
        LevyScout {
            walk: LevyWalk::new(params, rng),
        }
    }
}

impl Policy for LevyScout {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        Ok(self.walk.next_action(obs.map, obs.agent.position))
    }
}

/// Dijkstra to the nearest known item, Lévy exploration otherwise.
#[derive(Debug, Clone)]
pub struct LevyForager {
    walk: LevyWalk,
}

impl LevyForager {
    pub fn new(params: LevyParams, rng: StreamRng) -> Self {
        LevyForager {
            walk: LevyWalk::new(params, rng),
        }
    }
}

impl Policy for LevyForager {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        if let Some(a) = step_toward_nearest_known(obs)? {
            return Ok(a);
        }
        Ok(self.walk.next_action(obs.map, obs.agent.position))
    }
}
