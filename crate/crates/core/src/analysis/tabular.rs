use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{FiniteEnv, RewardMode};
use crate::error::{Error, Result};
use crate::SimRng;

/// `Q(s, a, g)` over an enumerated environment, with goals ranging over
/// every state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularQ {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub mode: RewardMode,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(num_states: usize, num_actions: usize, gamma: f64, mode: RewardMode) -> Self {
        Self {
            num_states,
            num_actions,
            gamma,
            mode,
            values: vec![0.0; num_states * num_actions * num_states],
        }
    }

    fn index(&self, s: usize, a: usize, g: usize) -> usize {
        (g * self.num_states + s) * self.num_actions + a
    }

    pub fn get(&self, s: usize, a: usize, g: usize) -> f64 {
        self.values[self.index(s, a, g)]
    }

    pub fn set(&mut self, s: usize, a: usize, g: usize, v: f64) {
        let i = self.index(s, a, g);
        self.values[i] = v;
    }

    pub fn action_values(&self, s: usize, g: usize) -> &[f64] {
        let i = self.index(s, 0, g);
        &self.values[i..i + self.num_actions]
    }

    pub fn max_value(&self, s: usize, g: usize) -> f64 {
        self.action_values(s, g)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index maximizing action.
    pub fn greedy(&self, s: usize, g: usize) -> usize {
        let q = self.action_values(s, g);
        let mut best = 0;
        for (a, v) in q.iter().enumerate() {
            if *v > q[best] {
                best = a;
            }
        }
        best
    }

    /// Actions within `tol` of the maximum.
    pub fn optimal_actions(&self, s: usize, g: usize, tol: f64) -> Vec<usize> {
        let max = self.max_value(s, g);
        (0..self.num_actions)
            .filter(|&a| self.get(s, a, g) >= max - tol)
            .collect()
    }

    pub fn sup_distance(&self, other: &TabularQ) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn reward(&self, next: usize, g: usize) -> f64 {
        if next == g {
            self.mode.success_reward()
        } else {
            self.mode.failure_reward()
        }
    }

    fn backup(&self, env: &dyn FiniteEnv, s: usize, a: usize, g: usize) -> f64 {
        let next = env.next_state(s, a);
        self.reward(next, g) + self.gamma * self.max_value(next, g)
    }

    /// Largest `|Q - (r + gamma * max Q')|` over every entry.
    pub fn bellman_residual(&self, env: &dyn FiniteEnv) -> f64 {
        let mut worst: f64 = 0.0;
        for g in 0..self.num_states {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    worst = worst.max((self.get(s, a, g) - self.backup(env, s, a, g)).abs());
                }
            }
        }
        worst
    }

    /// Absorbing goal states earn the success reward forever; under 0/-1
    /// rewards their value is exactly 0.
    fn pin_absorbing_goals(&mut self, env: &dyn FiniteEnv) {
        if self.mode != RewardMode::SparseNeg {
            return;
        }
        for g in 0..self.num_states {
            if env.is_absorbing(g) {
                for a in 0..self.num_actions {
                    self.set(g, a, g, 0.0);
                }
            }
        }
    }
}

pub const VALUE_ITERATION_TOL: f64 = 1e-10;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "tabular solvers need gamma in (0, 1), got {gamma}"
        )))
    }
}

/// Fixed point of `Q(s, a, g) = r(s', g) + gamma * max_a' Q(s', a', g)` to a
/// sup-norm change below [`VALUE_ITERATION_TOL`].
pub fn value_iteration(env: &dyn FiniteEnv, gamma: f64, mode: RewardMode) -> Result<TabularQ> {
    check_gamma(gamma)?;
    let (ns, na) = (env.num_states(), env.num_actions());
    let mut q = TabularQ::zeros(ns, na, gamma, mode);
    let max_sweeps = 100_000;
    for _ in 0..max_sweeps {
        let mut next = q.clone();
        let mut change: f64 = 0.0;
        for g in 0..ns {
            for s in 0..ns {
                for a in 0..na {
                    let v = q.backup(env, s, a, g);
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("value iteration at ({s}, {a}, {g})")));
                    }
                    change = change.max((v - q.get(s, a, g)).abs());
                    next.set(s, a, g, v);
                }
            }
        }
        next.pin_absorbing_goals(env);
        q = next;
        if change < VALUE_ITERATION_TOL {
            return Ok(q);
        }
    }
    Err(Error::NonFinite(format!(
        "value iteration did not converge in {max_sweeps} sweeps"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QLearningConfig {
    pub gamma: f64,
    pub mode: RewardMode,
    pub episodes: usize,
    pub horizon: usize,
    /// Probability of a uniformly random action.
    pub epsilon: f64,
    /// Step size `c / (c + n)` after `n` visits of an entry.
    pub step_scale: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            mode: RewardMode::SparseNeg,
            episodes: 20_000,
            horizon: 4,
            epsilon: 0.5,
            step_scale: 1000.0,
        }
    }
}

/// Epsilon-greedy Q-learning from the start distribution, with each episode's
/// goal drawn uniformly over all states. Every observed transition updates
/// the entry of every goal, since dynamics do not depend on the goal.
pub fn q_learning(env: &dyn FiniteEnv, cfg: &QLearningConfig, rng: &mut SimRng) -> Result<TabularQ> {
    check_gamma(cfg.gamma)?;
    let (ns, na) = (env.num_states(), env.num_actions());
    let starts = env.start_states();
    if starts.is_empty() {
        return Err(Error::Config("environment has no start states".into()));
    }
    let mut q = TabularQ::zeros(ns, na, cfg.gamma, cfg.mode);
    let mut visits = vec![0u64; ns * na * ns];
    for _ in 0..cfg.episodes {
        let mut s = starts[rng.random_range(0..starts.len())];
        let goal = rng.random_range(0..ns);
        for _ in 0..cfg.horizon {
            let a = if rng.random_bool(cfg.epsilon) {
                rng.random_range(0..na)
            } else {
                q.greedy(s, goal)
            };
            let next = env.next_state(s, a);
            for g in 0..ns {
                let i = q.index(s, a, g);
                visits[i] += 1;
                let alpha = cfg.step_scale / (cfg.step_scale + visits[i] as f64 - 1.0);
                let target = q.backup(env, s, a, g);
                q.values[i] += alpha * (target - q.values[i]);
            }
            s = next;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{GridAction, GridState, GridStitch};
    use rand::SeedableRng;

    const A: usize = GridState::AStart as usize;
    const B: usize = GridState::BStart as usize;
    const HUB: usize = GridState::Hub as usize;
    const GA: usize = GridState::GoalA as usize;
    const GB: usize = GridState::GoalB as usize;

    fn oracle() -> TabularQ {
        value_iteration(&GridStitch::new(), 0.98, RewardMode::SparseNeg).unwrap()
    }

    #[test]
    fn absorbing_goal_is_zero() {
        let q = oracle();
        for a in 0..4 {
            assert_eq!(q.get(GB, a, GB), 0.0);
            assert_eq!(q.get(GA, a, GA), 0.0);
        }
    }

    #[test]
    fn two_step_backup_to_cross_goal() {
        let q = oracle();
        // a_start -> hub costs -1, hub -> gb earns 0, then 0 forever
        let hub_to_gb = q.get(HUB, GridAction::ToGoalB as usize, GB);
        assert!(hub_to_gb.abs() < 1e-12);
        let expected = -1.0 + 0.98 * hub_to_gb;
        assert!((q.get(A, GridAction::ToHub as usize, GB) - expected).abs() < 1e-9);
        assert_eq!(q.greedy(A, GB), GridAction::ToHub as usize);
        assert_eq!(q.greedy(B, GA), GridAction::ToHub as usize);
        assert_eq!(q.greedy(HUB, GB), GridAction::ToGoalB as usize);
    }

    #[test]
    fn unreachable_goal_is_lower_bound() {
        let q = oracle();
        // from an absorbing wrong goal every step costs -1
        assert!((q.get(GA, 0, GB) - -1.0 / (1.0 - 0.98)).abs() < 1e-8);
    }

    #[test]
    fn fixed_point_and_bellman_consistency() {
        let env = GridStitch::new();
        let q = oracle();
        assert!(q.bellman_residual(&env) <= 1e-9);
        let mut swept = q.clone();
        for g in 0..5 {
            for s in 0..5 {
                for a in 0..4 {
                    swept.set(s, a, g, q.backup(&env, s, a, g));
                }
            }
        }
        assert!(swept.sup_distance(&q) <= VALUE_ITERATION_TOL);
    }

    #[test]
    fn indicator_oracle_values() {
        let q = value_iteration(&GridStitch::new(), 0.98, RewardMode::Indicator).unwrap();
        assert!((q.get(GB, 3, GB) - 50.0).abs() < 1e-7);
        assert!((q.get(A, 0, GB) - 0.98 * 50.0).abs() < 1e-7);
        assert_eq!(q.greedy(A, GB), GridAction::ToHub as usize);
    }

    #[test]
    fn q_learning_converges_to_oracle() {
        let env = GridStitch::new();
        let learned = q_learning(&env, &QLearningConfig::default(), &mut SimRng::seed_from_u64(3)).unwrap();
        let q = oracle();
        let gap = learned.sup_distance(&q);
        assert!(gap < 1e-3, "{gap}");
        for s in 0..5 {
            for g in 0..5 {
                assert!(q.optimal_actions(s, g, 1e-9).contains(&learned.greedy(s, g)));
            }
        }
    }

    #[test]
    fn rejects_undiscounted() {
        assert!(value_iteration(&GridStitch::new(), 1.0, RewardMode::SparseNeg).is_err());
    }
}
