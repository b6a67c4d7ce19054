//! Goal-conditioned environments sharing a sparse goal-ball reward.

mod grid;
mod noise;
mod point;
mod ymaze;

pub use grid::{GridAction, GridState, GridStitch};
pub use noise::{with_action_noise, ActionNoise};
pub use point::{PointReach, POINT_GAIN};
pub use ymaze::{segments_intersect, Arm, PointYMaze, Segment};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SimRng;

/// Reward signal inside / outside the goal ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// 0 inside, -1 outside.
    #[default]
    SparseNeg,
    /// 1 inside, 0 outside.
    Indicator,
}

impl RewardMode {
    pub fn success_reward(self) -> f64 {
        match self {
            RewardMode::SparseNeg => 0.0,
            RewardMode::Indicator => 1.0,
        }
    }

    pub fn failure_reward(self) -> f64 {
        self.success_reward() - 1.0
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" | "sparse_neg" => Ok(RewardMode::SparseNeg),
            "indicator" => Ok(RewardMode::Indicator),
            other => Err(Error::Config(format!("unknown reward mode {other:?}"))),
        }
    }
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardMode::SparseNeg => "sparse",
            RewardMode::Indicator => "indicator",
        })
    }
}

/// How the goal-ball test and its timing are read.
///
/// Defaults: un-squared distance `<= threshold`, evaluated on the successor
/// state. The literal alternatives (squared distance `< threshold`, evaluated
/// on the pre-transition state) are available as switches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub mode: RewardMode,
    pub squared_distance: bool,
    pub evaluate_current_state: bool,
}

impl RewardSpec {
    pub fn new(mode: RewardMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn inside(&self, achieved: &[f64], desired: &[f64], threshold: f64) -> bool {
        let d2: f64 = achieved.iter().zip(desired).map(|(a, b)| (a - b) * (a - b)).sum();
        if self.squared_distance {
            d2 < threshold
        } else {
            d2.sqrt() <= threshold
        }
    }

    pub fn reward(&self, achieved: &[f64], desired: &[f64], threshold: f64) -> f64 {
        if self.inside(achieved, desired, threshold) {
            self.mode.success_reward()
        } else {
            self.mode.failure_reward()
        }
    }

    /// Which achieved-goal index supplies the reward of transition `t`.
    pub fn reward_index(&self, t: usize) -> usize {
        if self.evaluate_current_state {
            t
        } else {
            t + 1
        }
    }
}

/// Goal-ball reward with the default distance convention.
pub fn reward_fn(achieved: &[f64], desired: &[f64], mode: RewardMode, threshold: f64) -> f64 {
    RewardSpec::new(mode).reward(achieved, desired, threshold)
}

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub id: String,
    pub state_dim: usize,
    pub action_dim: usize,
    pub goal_dim: usize,
    pub horizon: usize,
    pub threshold: f64,
    pub action_bound: f64,
    pub discrete: bool,
    pub start_distribution: String,
    pub goal_distribution: String,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 || !(self.threshold > 0.0) || !(self.action_bound > 0.0) {
            return Err(Error::Config(format!("invalid env spec {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub state: Vec<f64>,
    pub achieved: Vec<f64>,
    pub desired: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// Time-limit truncation at `t == horizon`.
    pub terminal: bool,
}

/// A goal-conditioned episodic task.
pub trait GoalEnv: Send {
    fn spec(&self) -> &EnvSpec;
    fn reward_spec(&self) -> RewardSpec;
    fn set_reward_spec(&mut self, reward: RewardSpec);

    /// Sample a start state and a desired goal; zero the step counter.
    fn reset(&mut self, rng: &mut SimRng) -> Observation;

    /// Start from an explicit state and goal.
    fn reset_to(&mut self, state: &[f64], goal: &[f64]) -> Result<Observation>;

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;

    fn phi(&self, state: &[f64]) -> Vec<f64>;

    fn box_clone(&self) -> Box<dyn GoalEnv>;

    fn is_success(&self, achieved: &[f64], desired: &[f64]) -> bool {
        self.reward_spec().inside(achieved, desired, self.spec().threshold)
    }

    fn reward(&self, achieved: &[f64], desired: &[f64]) -> f64 {
        self.reward_spec().reward(achieved, desired, self.spec().threshold)
    }

    /// Exposes the full transition table when the task is finite.
    fn as_finite(&self) -> Option<&dyn FiniteEnv> {
        None
    }

    /// Wall segments, for tasks that have them.
    fn walls(&self) -> &[Segment] {
        &[]
    }
}

impl Clone for Box<dyn GoalEnv> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Deterministic finite task with enumerable states and actions.
pub trait FiniteEnv {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn next_state(&self, state: usize, action: usize) -> usize;
    fn encode_state(&self, state: usize) -> Vec<f64>;
    fn encode_action(&self, action: usize) -> Vec<f64>;
    fn decode_state(&self, state: &[f64]) -> Option<usize>;
    /// States that are absorbing (every action self-loops).
    fn is_absorbing(&self, state: usize) -> bool {
        (0..self.num_actions()).all(|a| self.next_state(state, a) == state)
    }
    /// States of the start distribution.
    fn start_states(&self) -> Vec<usize>;
    /// States of the goal distribution.
    fn goal_states(&self) -> Vec<usize>;
}

/// Construction options shared by every environment id.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnvOptions {
    pub reward: RewardSpec,
    pub action_noise: f64,
    pub noise_seed: u64,
}

pub const ENV_IDS: [&str; 3] = ["grid-stitch", "point-reach", "point-ymaze"];

pub fn make_env(id: &str, options: &EnvOptions) -> Result<Box<dyn GoalEnv>> {
    let mut env: Box<dyn GoalEnv> = match id {
        "grid-stitch" => Box::new(GridStitch::new()),
        "point-reach" => Box::new(PointReach::new()),
        "point-ymaze" => Box::new(PointYMaze::new()),
        other => return Err(Error::Config(format!("unknown environment id {other:?}"))),
    };
    env.spec().validate()?;
    env.set_reward_spec(options.reward);
    if options.action_noise < 0.0 || !options.action_noise.is_finite() {
        return Err(Error::Config(format!(
            "action noise must be >= 0, got {}",
            options.action_noise
        )));
    }
    if options.action_noise > 0.0 {
        env = with_action_noise(env, options.action_noise, options.noise_seed)?;
    }
    Ok(env)
}

pub(crate) fn check_continuous_action(spec: &EnvSpec, action: &[f64]) -> Result<()> {
    if action.len() != spec.action_dim {
        return Err(Error::InvalidAction(format!(
            "expected {} components, got {}",
            spec.action_dim,
            action.len()
        )));
    }
    let bound = spec.action_bound * (1.0 + 1e-12);
    if let Some(a) = action.iter().find(|a| !a.is_finite() || a.abs() > bound) {
        return Err(Error::InvalidAction(format!(
            "component {a} outside [-{0}, {0}]",
            spec.action_bound
        )));
    }
    Ok(())
}
