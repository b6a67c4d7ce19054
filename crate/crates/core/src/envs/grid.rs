use rand::Rng;

use super::{EnvSpec, FiniteEnv, GoalEnv, Observation, RewardSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::SimRng;

/// Discrete hub graph: two start states feed one hub, from which either goal
/// is one step away.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridState {
    AStart = 0,
    BStart = 1,
    Hub = 2,
    GoalA = 3,
    GoalB = 4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GridAction {
    ToHub = 0,
    ToGoalA = 1,
    ToGoalB = 2,
    Stay = 3,
}

impl GridState {
    pub const ALL: [GridState; 5] = [
        GridState::AStart,
        GridState::BStart,
        GridState::Hub,
        GridState::GoalA,
        GridState::GoalB,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GridState::AStart => "a_start",
            GridState::BStart => "b_start",
            GridState::Hub => "hub",
            GridState::GoalA => "ga",
            GridState::GoalB => "gb",
        }
    }
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::ToHub,
        GridAction::ToGoalA,
        GridAction::ToGoalB,
        GridAction::Stay,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GridAction::ToHub => "to_hub",
            GridAction::ToGoalA => "to_ga",
            GridAction::ToGoalB => "to_gb",
            GridAction::Stay => "stay",
        }
    }
}

pub const GRID_HORIZON: usize = 4;

pub fn grid_transition(state: GridState, action: GridAction) -> GridState {
    use GridAction::*;
    use GridState::*;
    match (state, action) {
        (AStart | BStart, ToHub) => Hub,
        (Hub, ToGoalA) => GoalA,
        (Hub, ToGoalB) => GoalB,
        (s, _) => s,
    }
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn decode_one_hot(v: &[f64], n: usize) -> Option<usize> {
    if v.len() != n {
        return None;
    }
    let mut hit = None;
    for (i, &x) in v.iter().enumerate() {
        if x == 1.0 {
            if hit.is_some() {
                return None;
            }
            hit = Some(i);
        } else if x != 0.0 {
            return None;
        }
    }
    hit
}

#[derive(Clone, Debug)]
pub struct GridStitch {
    spec: EnvSpec,
    reward: RewardSpec,
    state: GridState,
    goal: GridState,
    t: usize,
}

impl Default for GridStitch {
    fn default() -> Self {
        Self::new()
    }
}

impl GridStitch {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                id: "grid-stitch".into(),
                state_dim: 5,
                action_dim: 4,
                goal_dim: 5,
                horizon: GRID_HORIZON,
                // one-hot codes are sqrt(2) apart, so this ball is state identity
                threshold: 0.5,
                action_bound: 1.0,
                discrete: true,
                start_distribution: "uniform{a_start,b_start}".into(),
                goal_distribution: "uniform{ga,gb}".into(),
            },
            reward: RewardSpec::default(),
            state: GridState::AStart,
            goal: GridState::GoalA,
            t: 0,
        }
    }

    pub fn current(&self) -> (GridState, GridState) {
        (self.state, self.goal)
    }

    pub fn observation(&self) -> Observation {
        let state = one_hot(5, self.state as usize);
        Observation {
            achieved: state.clone(),
            state,
            desired: one_hot(5, self.goal as usize),
        }
    }

    pub fn reset_pair(&mut self, state: GridState, goal: GridState) -> Observation {
        self.state = state;
        self.goal = goal;
        self.t = 0;
        self.observation()
    }

    pub fn step_action(&mut self, action: GridAction) -> StepOutcome {
        let before = self.observation();
        self.state = grid_transition(self.state, action);
        self.t += 1;
        let observation = self.observation();
        let source = if self.reward.evaluate_current_state {
            &before.achieved
        } else {
            &observation.achieved
        };
        let reward = self.reward.reward(source, &observation.desired, self.spec.threshold);
        StepOutcome {
            observation,
            reward,
            terminal: self.t >= self.spec.horizon,
        }
    }

    pub fn encoded(state: GridState) -> Vec<f64> {
        one_hot(5, state as usize)
    }

    pub fn encoded_action(action: GridAction) -> Vec<f64> {
        one_hot(4, action as usize)
    }
}

impl GoalEnv for GridStitch {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reward_spec(&self) -> RewardSpec {
        self.reward
    }

    fn set_reward_spec(&mut self, reward: RewardSpec) {
        self.reward = reward;
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        let state = if rng.random_bool(0.5) {
            GridState::AStart
        } else {
            GridState::BStart
        };
        let goal = if rng.random_bool(0.5) {
            GridState::GoalA
        } else {
            GridState::GoalB
        };
        self.reset_pair(state, goal)
    }

    fn reset_to(&mut self, state: &[f64], goal: &[f64]) -> Result<Observation> {
        let s = decode_one_hot(state, 5).and_then(GridState::from_index);
        let g = decode_one_hot(goal, 5).and_then(GridState::from_index);
        match (s, g) {
            (Some(s), Some(g)) => Ok(self.reset_pair(s, g)),
            _ => Err(Error::InvalidAction("grid state and goal must be one-hot".into())),
        }
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let a = decode_one_hot(action, 4)
            .and_then(GridAction::from_index)
            .ok_or_else(|| {
                Error::InvalidAction(format!("grid action must be a one-hot of length 4, got {action:?}"))
            })?;
        Ok(self.step_action(a))
    }

    fn phi(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn box_clone(&self) -> Box<dyn GoalEnv> {
        Box::new(self.clone())
    }

    fn as_finite(&self) -> Option<&dyn FiniteEnv> {
        Some(self)
    }
}

impl FiniteEnv for GridStitch {
    fn num_states(&self) -> usize {
        5
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn next_state(&self, state: usize, action: usize) -> usize {
        grid_transition(GridState::ALL[state], GridAction::ALL[action]) as usize
    }

    fn encode_state(&self, state: usize) -> Vec<f64> {
        one_hot(5, state)
    }

    fn encode_action(&self, action: usize) -> Vec<f64> {
        one_hot(4, action)
    }

    fn decode_state(&self, state: &[f64]) -> Option<usize> {
        decode_one_hot(state, 5)
    }

    fn start_states(&self) -> Vec<usize> {
        vec![GridState::AStart as usize, GridState::BStart as usize]
    }

    fn goal_states(&self) -> Vec<usize> {
        vec![GridState::GoalA as usize, GridState::GoalB as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::RewardMode;
    use rand::SeedableRng;

    #[test]
    fn table_transitions_and_rewards() {
        let mut env = GridStitch::new();
        env.reset_pair(GridState::Hub, GridState::GoalB);
        let out = env.step_action(GridAction::ToGoalB);
        assert_eq!(env.current().0, GridState::GoalB);
        assert_eq!(out.reward, 0.0);

        env.reset_pair(GridState::AStart, GridState::GoalB);
        let out = env.step_action(GridAction::ToHub);
        assert_eq!(env.current().0, GridState::Hub);
        assert_eq!(out.reward, -1.0);
    }

    #[test]
    fn goals_are_absorbing_and_self_loops_elsewhere() {
        for g in [GridState::GoalA, GridState::GoalB] {
            for a in GridAction::ALL {
                assert_eq!(grid_transition(g, a), g);
            }
        }
        assert_eq!(
            grid_transition(GridState::AStart, GridAction::ToGoalA),
            GridState::AStart
        );
        assert_eq!(grid_transition(GridState::Hub, GridAction::ToHub), GridState::Hub);
        assert!(GridStitch::new().is_absorbing(GridState::GoalA as usize));
        assert!(!GridStitch::new().is_absorbing(GridState::Hub as usize));
    }

    #[test]
    fn episode_truncates_at_horizon_only() {
        let mut env = GridStitch::new();
        env.reset_pair(GridState::Hub, GridState::GoalA);
        let mut terminals = vec![];
        for _ in 0..GRID_HORIZON {
            terminals.push(env.step_action(GridAction::ToGoalA).terminal);
        }
        assert_eq!(terminals, vec![false, false, false, true]);
    }

    #[test]
    fn reset_distribution_covers_pairs() {
        let mut rng = SimRng::seed_from_u64(11);
        let mut env = GridStitch::new();
        let mut counts = std::collections::HashMap::new();
        for _ in 0..4000 {
            env.reset(&mut rng);
            *counts.entry(env.current()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            assert!((*c as f64 - 1000.0).abs() < 120.0);
        }
        let mut a = SimRng::seed_from_u64(5);
        let mut b = SimRng::seed_from_u64(5);
        assert_eq!(env.reset(&mut a), env.clone().reset(&mut b));
    }

    #[test]
    fn rejects_non_one_hot_actions() {
        let mut env = GridStitch::new();
        assert!(env.step(&[0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(env.step(&[1.0, 0.0, 0.0]).is_err());
        assert!(env.step(&[0.0, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn phi_is_one_hot_identity() {
        let env = GridStitch::new();
        assert_eq!(
            env.phi(&GridStitch::encoded(GridState::Hub)),
            vec![0.0, 0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn indicator_mode_rewards() {
        let mut env = GridStitch::new();
        env.set_reward_spec(RewardSpec::new(RewardMode::Indicator));
        env.reset_pair(GridState::Hub, GridState::GoalA);
        assert_eq!(env.step_action(GridAction::ToGoalA).reward, 1.0);
        assert_eq!(env.step_action(GridAction::Stay).reward, 1.0);
    }
}
