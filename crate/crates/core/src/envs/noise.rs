use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use super::{EnvSpec, FiniteEnv, GoalEnv, Observation, RewardSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::SimRng;

/// Adds zero-mean Gaussian noise to every action before execution, then clips
/// to the action box. Owns its RNG so the wrapped task's other randomness is
/// untouched; `sigma == 0` draws nothing.
#[derive(Clone)]
pub struct ActionNoise {
    inner: Box<dyn GoalEnv>,
    sigma: f64,
    rng: SimRng,
}

pub fn with_action_noise(env: Box<dyn GoalEnv>, sigma: f64, seed: u64) -> Result<Box<dyn GoalEnv>> {
    Ok(Box::new(ActionNoise::new(env, sigma, seed)?))
}

impl ActionNoise {
    pub fn new(inner: Box<dyn GoalEnv>, sigma: f64, seed: u64) -> Result<Self> {
        if inner.spec().discrete {
            return Err(Error::Unsupported(format!(
                "action noise on discrete env {}",
                inner.spec().id
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("action noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            inner,
            sigma,
            rng: SimRng::seed_from_u64(seed),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The action that would be executed for `action`.
    pub fn perturb(&mut self, action: &[f64]) -> Vec<f64> {
        if self.sigma == 0.0 {
            return action.to_vec();
        }
        let bound = self.inner.spec().action_bound;
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        action
            .iter()
            .map(|a| (a + normal.sample(&mut self.rng)).clamp(-bound, bound))
            .collect()
    }
}

impl GoalEnv for ActionNoise {
    fn spec(&self) -> &EnvSpec {
        self.inner.spec()
    }

    fn reward_spec(&self) -> RewardSpec {
        self.inner.reward_spec()
    }

    fn set_reward_spec(&mut self, reward: RewardSpec) {
        self.inner.set_reward_spec(reward)
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        self.inner.reset(rng)
    }

    fn reset_to(&mut self, state: &[f64], goal: &[f64]) -> Result<Observation> {
        self.inner.reset_to(state, goal)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        super::check_continuous_action(self.inner.spec(), action)?;
        let executed = self.perturb(action);
        self.inner.step(&executed)
    }

    fn phi(&self, state: &[f64]) -> Vec<f64> {
        self.inner.phi(state)
    }

    fn box_clone(&self) -> Box<dyn GoalEnv> {
        Box::new(self.clone())
    }

    fn as_finite(&self) -> Option<&dyn FiniteEnv> {
        None
    }

    fn walls(&self) -> &[super::Segment] {
        self.inner.walls()
    }
}
