use rand::Rng;

use super::{Observation, Policy, PolicyHandle};
use crate::streams::StreamRng;
use crate::world::Action;
use crate::{Error, Result};

/// One corruption draw: `u ~ U[0,1)` then a uniform action.
///
/// Both values are drawn at every decision whatever ε is, so the stream
/// position never depends on ε and a larger ε overrides a superset of the
/// decisions overridden by a smaller one.
pub fn corruption_draw<R: Rng + ?Sized>(rng: &mut R) -> (f64, Action) {
    let u = rng.random::<f64>();
    let a = Action::ALL[rng.random_range(0..Action::ALL.len())];
    (u, a)
}

/// `π^ε(a|s) = (1−ε)·π(a|s) + ε/|A|`.
///
/// The wrapped policy is consulted at every step, including overridden ones,
/// so its private state and stream evolve identically for every ε.
pub struct Corrupted {
    inner: PolicyHandle,
    epsilon: f64,
    rng: StreamRng,
}

impl Corrupted {
    pub fn new(inner: PolicyHandle, epsilon: f64, rng: StreamRng) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain(format!(
                "corruption epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Corrupted {
            inner,
            epsilon,
            rng,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Policy for Corrupted {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Action> {
        let nominal = self.inner.decide(obs)?;
        let (u, random) = corruption_draw(&mut self.rng);
        Ok(if u < self.epsilon { random } else { nominal })
    }
}

/// Uniform over all nine actions; draws exactly like [`Corrupted`] at ε = 1.
pub struct UniformRandom {
    rng: StreamRng,
}

impl UniformRandom {
    pub fn new(rng: StreamRng) -> Self {
        UniformRandom { rng }
    }
}

impl Policy for UniformRandom {
    fn decide(&mut self, _obs: &Observation<'_>) -> Result<Action> {
        Ok(corruption_draw(&mut self.rng).1)
    }
}
