use rand::Rng;

use super::{check_continuous_action, EnvSpec, GoalEnv, Observation, RewardSpec, StepOutcome};
use crate::error::{check_dim, Result};
use crate::SimRng;

pub const POINT_GAIN: f64 = 0.1;

/// Point mass in `[-1, 1]^2`: `s' = clip(s + 0.1 a)`.
#[derive(Clone, Debug)]
pub struct PointReach {
    spec: EnvSpec,
    reward: RewardSpec,
    pos: [f64; 2],
    goal: [f64; 2],
    t: usize,
}

impl Default for PointReach {
    fn default() -> Self {
        Self::new()
    }
}

impl PointReach {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                id: "point-reach".into(),
                state_dim: 2,
                action_dim: 2,
                goal_dim: 2,
                horizon: 50,
                threshold: 0.05,
                action_bound: 1.0,
                discrete: false,
                start_distribution: "uniform[-1,1]^2".into(),
                goal_distribution: "uniform[-1,1]^2".into(),
            },
            reward: RewardSpec::default(),
            pos: [0.0; 2],
            goal: [0.0; 2],
            t: 0,
        }
    }

    fn observation(&self) -> Observation {
        Observation {
            state: self.pos.to_vec(),
            achieved: self.pos.to_vec(),
            desired: self.goal.to_vec(),
        }
    }
}

impl GoalEnv for PointReach {
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
        self.pos = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.goal = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.t = 0;
        self.observation()
    }

    fn reset_to(&mut self, state: &[f64], goal: &[f64]) -> Result<Observation> {
        check_dim("point state", 2, state.len())?;
        check_dim("point goal", 2, goal.len())?;
        self.pos = [state[0].clamp(-1.0, 1.0), state[1].clamp(-1.0, 1.0)];
        self.goal = [goal[0], goal[1]];
        self.t = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        check_continuous_action(&self.spec, action)?;
        let before = self.pos;
        for k in 0..2 {
            self.pos[k] = (self.pos[k] + POINT_GAIN * action[k]).clamp(-1.0, 1.0);
        }
        self.t += 1;
        let source = if self.reward.evaluate_current_state {
            before
        } else {
            self.pos
        };
        let reward = self.reward.reward(&source, &self.goal, self.spec.threshold);
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            terminal: self.t >= self.spec.horizon,
        })
    }

    fn phi(&self, state: &[f64]) -> Vec<f64> {
        state[..2].to_vec()
    }

    fn box_clone(&self) -> Box<dyn GoalEnv> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn step_dynamics_and_reward() {
        let mut env = PointReach::new();
        env.reset_to(&[0.0, 0.0], &[0.08, 0.0]).unwrap();
        let out = env.step(&[1.0, 0.0]).unwrap();
        assert!((out.observation.state[0] - 0.1).abs() < 1e-15);
        assert_eq!(out.observation.state[1], 0.0);
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.observation.achieved, env.phi(&out.observation.state));
    }

    #[test]
    fn clips_to_box_and_rejects_out_of_bound_actions() {
        let mut env = PointReach::new();
        env.reset_to(&[0.95, -0.95], &[0.0, 0.0]).unwrap();
        let out = env.step(&[1.0, -1.0]).unwrap();
        assert_eq!(out.observation.state, vec![1.0, -1.0]);
        assert!(env.step(&[1.5, 0.0]).is_err());
        assert!(env.step(&[0.0]).is_err());
        assert!(env.step(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn reset_is_uniform_in_box_and_seeded() {
        let mut env = PointReach::new();
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..500 {
            let o = env.reset(&mut rng);
            assert!(o.state.iter().chain(&o.desired).all(|v| v.abs() <= 1.0));
        }
        let a = env.reset(&mut SimRng::seed_from_u64(9));
        let b = env.reset(&mut SimRng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn any_goal_reachable_within_horizon() {
        // straight-line controller from opposite corners
        let mut env = PointReach::new();
        env.reset_to(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mut last = None;
        for _ in 0..env.spec().horizon {
            let o = env.step(&[1.0, 1.0]).unwrap();
            last = Some(o);
        }
        let last = last.unwrap();
        assert_eq!(last.reward, 0.0);
        assert!(last.terminal);
    }
}
