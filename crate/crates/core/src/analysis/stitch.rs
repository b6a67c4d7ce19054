use serde::{Deserialize, Serialize};

use super::TabularQ;
use crate::agents::{greedy_rollout, Agent};
use crate::envs::{Arm, FiniteEnv, GoalEnv, GridAction, GridState, GridStitch, Observation};
use crate::error::{Error, Result};
use crate::SimRng;

/// A deterministic policy queried once per step of a rollout.
pub trait Policy {
    /// Called with the first observation of every rollout.
    fn begin(&mut self, _obs: &Observation) {}
    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>>;
}

impl Policy for Agent {
    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        self.greedy_action(obs)
    }
}

impl Policy for &Agent {
    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        self.greedy_action(obs)
    }
}

/// Greedy policy of a tabular value function on its environment.
pub struct TabularPolicy<'a> {
    pub q: &'a TabularQ,
    pub env: &'a dyn FiniteEnv,
}

impl Policy for TabularPolicy<'_> {
    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        let s = self
            .env
            .decode_state(&obs.state)
            .ok_or_else(|| Error::Manifest("state is not an enumerated state".into()))?;
        let g = self
            .env
            .decode_state(&obs.desired)
            .ok_or_else(|| Error::Manifest("goal is not an enumerated state".into()))?;
        Ok(self.env.encode_action(self.q.greedy(s, g)))
    }
}

/// Replays the scripted dataset trajectory of the episode's start state and
/// ignores the goal: `a_start` always heads for `ga`, `b_start` for `gb`.
#[derive(Clone, Debug, Default)]
pub struct StartConditionedPolicy {
    start: Option<GridState>,
}

impl Policy for StartConditionedPolicy {
    fn begin(&mut self, obs: &Observation) {
        self.start = GridStitch::new()
            .decode_state(&obs.state)
            .and_then(GridState::from_index);
    }

    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        let here = GridStitch::new()
            .decode_state(&obs.state)
            .and_then(GridState::from_index)
            .ok_or_else(|| Error::Manifest("state is not a grid state".into()))?;
        let action = match (here, self.start) {
            (GridState::AStart | GridState::BStart, _) => GridAction::ToHub,
            (GridState::Hub, Some(GridState::BStart)) => GridAction::ToGoalB,
            (GridState::Hub, _) => GridAction::ToGoalA,
            _ => GridAction::Stay,
        };
        Ok(GridStitch::encoded_action(action))
    }
}

/// Which (start region, goal region) pairs share a trajectory in a dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub env_id: String,
    pub pairs: Vec<PairCount>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub start: String,
    pub goal: String,
    pub episodes: usize,
}

impl DatasetManifest {
    pub fn new(env_id: &str) -> Self {
        Self {
            env_id: env_id.to_string(),
            pairs: Vec::new(),
        }
    }

    pub fn record(&mut self, start: &str, goal: &str) {
        match self.pairs.iter_mut().find(|p| p.start == start && p.goal == goal) {
            Some(p) => p.episodes += 1,
            None => self.pairs.push(PairCount {
                start: start.to_string(),
                goal: goal.to_string(),
                episodes: 1,
            }),
        }
    }

    pub fn contains(&self, start: &str, goal: &str) -> bool {
        self.pairs.iter().any(|p| p.start == start && p.goal == goal)
    }

    pub fn episodes(&self) -> usize {
        self.pairs.iter().map(|p| p.episodes).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub start: String,
    pub goal: String,
    pub seen_same_trajectory: bool,
    pub rollouts: usize,
    pub success_rate: f64,
    /// Named first action on discrete tasks.
    pub first_action: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StitchReport {
    pub env_id: String,
    pub pairs: Vec<PairOutcome>,
    pub seen_success: f64,
    pub cross_success: f64,
}

impl StitchReport {
    fn from_pairs(env_id: &str, pairs: Vec<PairOutcome>) -> Self {
        let mean = |seen: bool| {
            let sel: Vec<f64> = pairs
                .iter()
                .filter(|p| p.seen_same_trajectory == seen)
                .map(|p| p.success_rate)
                .collect();
            if sel.is_empty() {
                f64::NAN
            } else {
                sel.iter().sum::<f64>() / sel.len() as f64
            }
        };
        Self {
            env_id: env_id.to_string(),
            seen_success: mean(true),
            cross_success: mean(false),
            pairs,
        }
    }
}

fn rollout<P: Policy + ?Sized>(env: &mut dyn GoalEnv, obs: Observation, policy: &mut P) -> Result<(bool, Vec<f64>)> {
    policy.begin(&obs);
    let mut first = None;
    let ok = greedy_rollout(env, obs, |o| {
        let a = policy.act(o)?;
        if first.is_none() {
            first = Some(a.clone());
        }
        Ok(a)
    })?;
    Ok((ok, first.unwrap_or_default()))
}

/// Greedy rollouts for every (start region, goal region) pair of a stitching
/// task, classified as seen or cross by the manifest. Discrete tasks roll out
/// each pair once; continuous tasks draw `rollouts_per_pair` start and goal
/// positions from the pair's regions.
pub fn stitching_probe<P: Policy + ?Sized>(
    policy: &mut P,
    env: &mut dyn GoalEnv,
    manifest: &DatasetManifest,
    rollouts_per_pair: usize,
    rng: &mut SimRng,
) -> Result<StitchReport> {
    let env_id = env.spec().id.clone();
    if manifest.env_id != env_id {
        return Err(Error::Manifest(format!(
            "manifest for {:?} applied to {:?}",
            manifest.env_id, env_id
        )));
    }
    let mut pairs = Vec::new();
    match env_id.as_str() {
        "grid-stitch" => {
            let grid = GridStitch::new();
            for start in grid.start_states() {
                for goal in grid.goal_states() {
                    let (s, g) = (GridState::ALL[start], GridState::ALL[goal]);
                    let obs = env.reset_to(&grid.encode_state(start), &grid.encode_state(goal))?;
                    let (ok, first) = rollout(env, obs, policy)?;
                    let first_action = first
                        .iter()
                        .position(|v| *v == 1.0)
                        .and_then(GridAction::from_index)
                        .map(|a| a.name().to_string());
                    pairs.push(PairOutcome {
                        start: s.name().into(),
                        goal: g.name().into(),
                        seen_same_trajectory: manifest.contains(s.name(), g.name()),
                        rollouts: 1,
                        success_rate: if ok { 1.0 } else { 0.0 },
                        first_action,
                    });
                }
            }
        }
        "point-ymaze" => {
            let n = rollouts_per_pair.max(1);
            for start in Arm::STARTS {
                for goal in Arm::GOALS {
                    let mut successes = 0;
                    for _ in 0..n {
                        let obs = env.reset_to(&start.sample(rng), &goal.sample(rng))?;
                        if rollout(env, obs, policy)?.0 {
                            successes += 1;
                        }
                    }
                    pairs.push(PairOutcome {
                        start: start.name().into(),
                        goal: goal.name().into(),
                        seen_same_trajectory: manifest.contains(start.name(), goal.name()),
                        rollouts: n,
                        success_rate: successes as f64 / n as f64,
                        first_action: None,
                    });
                }
            }
        }
        other => return Err(Error::Unsupported(format!("no stitching layout for {other:?}"))),
    }
    Ok(StitchReport::from_pairs(&env_id, pairs))
}

/// Manifest of the same-side grid dataset: `(a_start, ga)` and `(b_start, gb)`.
pub fn same_side_grid_manifest(episodes_per_pair: usize) -> DatasetManifest {
    let mut m = DatasetManifest::new("grid-stitch");
    for _ in 0..episodes_per_pair {
        m.record("a_start", "ga");
        m.record("b_start", "gb");
    }
    m
}
