//! Actor-critic learner shared by every objective.
//!
//! One update on a relabeled batch runs, in order: a TD step on the critic
//! against clipped targets from the target networks, the advantage and
//! imitation weights from the freshly updated online networks, and one actor
//! step on the algorithm's objective. Target networks move only through
//! [`Agent::polyak_update`].

mod config;
mod weight;

pub use config::{AgentConfig, Algo};
pub use weight::{best_advantage_factor, exp_clip, quantile, wgcsl_weight};

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::approximator::{AdamState, BatchTrace, DenseNet, Head, NetCheckpoint, Normalizer};
use crate::envs::{EnvSpec, GoalEnv, Observation, RewardMode};
use crate::error::{check_dim, Error, Result};
use crate::replay::{Episode, RelabeledSample};
use crate::SimRng;

/// A relabeled batch laid out row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub rows: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub next_states: Vec<f64>,
    pub goals: Vec<f64>,
    pub rewards: Vec<f64>,
    pub offsets: Vec<usize>,
}

impl Batch {
    pub fn from_samples(samples: &[RelabeledSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut b = Batch {
            rows: samples.len(),
            states: Vec::new(),
            actions: Vec::new(),
            next_states: Vec::new(),
            goals: Vec::new(),
            rewards: Vec::with_capacity(samples.len()),
            offsets: Vec::with_capacity(samples.len()),
        };
        for s in samples {
            b.states.extend_from_slice(&s.state);
            b.actions.extend_from_slice(&s.action);
            b.next_states.extend_from_slice(&s.next_state);
            b.goals.extend_from_slice(&s.goal);
            b.rewards.push(s.reward);
            b.offsets.push(s.offset);
        }
        Ok(b)
    }
}

/// Running record of every bootstrapped critic target.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub count: u64,
    pub clipped: u64,
    /// Emitted targets outside the clip interval; must stay 0.
    pub violations: u64,
    pub raw_min: f64,
    pub raw_max: f64,
    pub emitted_min: f64,
    pub emitted_max: f64,
}

impl TargetStats {
    fn record(&mut self, raw: f64, emitted: f64, bounds: (f64, f64)) {
        if self.count == 0 {
            self.raw_min = raw;
            self.raw_max = raw;
            self.emitted_min = emitted;
            self.emitted_max = emitted;
        }
        self.count += 1;
        self.raw_min = self.raw_min.min(raw);
        self.raw_max = self.raw_max.max(raw);
        self.emitted_min = self.emitted_min.min(emitted);
        self.emitted_max = self.emitted_max.max(emitted);
        if raw != emitted {
            self.clipped += 1;
        }
        if emitted < bounds.0 || emitted > bounds.1 {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: Option<f64>,
    pub actor_loss: f64,
    pub mean_q: Option<f64>,
    pub mean_weight: Option<f64>,
}

/// Serialized networks of an agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub algo: Algo,
    pub actor: NetCheckpoint,
    pub critic: NetCheckpoint,
}

/// Normalized copy of a batch.
struct Prepared<'a> {
    rows: usize,
    states: Vec<f64>,
    next_states: Vec<f64>,
    goals: Vec<f64>,
    raw: &'a Batch,
}

#[derive(Clone, Debug)]
pub struct Agent {
    cfg: AgentConfig,
    state_dim: usize,
    goal_dim: usize,
    action_dim: usize,
    action_bound: f64,
    discrete: bool,
    reward_mode: RewardMode,
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub actor_target: DenseNet,
    pub critic_target: DenseNet,
    actor_opt: AdamState,
    critic_opt: AdamState,
    pub state_norm: Normalizer,
    pub goal_norm: Normalizer,
    target_stats: TargetStats,
}

fn concat_rows(parts: &[(&[f64], usize)], rows: usize) -> Vec<f64> {
    let width: usize = parts.iter().map(|p| p.1).sum();
    let mut out = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for &(data, w) in parts {
            out.extend_from_slice(&data[r * w..(r + 1) * w]);
        }
    }
    out
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl Agent {
    pub fn new(cfg: AgentConfig, spec: &EnvSpec, reward_mode: RewardMode, rng: &mut SimRng) -> Result<Self> {
        cfg.validate()?;
        let (ds, dg, da) = (spec.state_dim, spec.goal_dim, spec.action_dim);
        let mut actor_dims = vec![ds + dg];
        actor_dims.extend(&cfg.hidden);
        actor_dims.push(da);
        let mut critic_dims = vec![ds + dg + da];
        critic_dims.extend(&cfg.hidden);
        critic_dims.push(1);
        let actor = DenseNet::new(
            actor_dims,
            Head::Bounded {
                scale: spec.action_bound,
            },
            rng,
        )?;
        let critic = DenseNet::new(critic_dims, Head::Linear, rng)?;
        Ok(Self {
            actor_opt: AdamState::new(actor.params().len()),
            critic_opt: AdamState::new(critic.params().len()),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            state_norm: Normalizer::new(ds),
            goal_norm: Normalizer::new(dg),
            target_stats: TargetStats::default(),
            cfg,
            state_dim: ds,
            goal_dim: dg,
            action_dim: da,
            action_bound: spec.action_bound,
            discrete: spec.discrete,
            reward_mode,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut AgentConfig {
        &mut self.cfg
    }

    pub fn algo(&self) -> Algo {
        self.cfg.algo
    }

    pub fn target_stats(&self) -> &TargetStats {
        &self.target_stats
    }

    pub fn is_discrete(&self) -> bool {
        self.discrete
    }

    /// Interval bootstrapped targets are clipped to: `[-1/(1-gamma), 0]` for
    /// 0/-1 rewards, `[0, 1/(1-gamma)]` for 1/0 rewards.
    pub fn q_target_bounds(&self) -> (f64, f64) {
        let horizon_value = if self.cfg.gamma < 1.0 {
            1.0 / (1.0 - self.cfg.gamma)
        } else {
            f64::INFINITY
        };
        match self.reward_mode {
            RewardMode::SparseNeg => (-horizon_value, 0.0),
            RewardMode::Indicator => (0.0, horizon_value),
        }
    }

    /// Update the input normalizers with a collected episode.
    pub fn observe_episode(&mut self, ep: &Episode) -> Result<()> {
        let states: Vec<f64> = ep.states.iter().flatten().copied().collect();
        self.state_norm.update(&states)?;
        let mut goals: Vec<f64> = ep.achieved.iter().flatten().copied().collect();
        goals.extend_from_slice(&ep.desired);
        self.goal_norm.update(&goals)
    }

    fn prepare<'a>(&self, batch: &'a Batch) -> Result<Prepared<'a>> {
        let n = batch.rows;
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        check_dim("batch states", n * self.state_dim, batch.states.len())?;
        check_dim("batch next states", n * self.state_dim, batch.next_states.len())?;
        check_dim("batch goals", n * self.goal_dim, batch.goals.len())?;
        check_dim("batch actions", n * self.action_dim, batch.actions.len())?;
        let mut states = batch.states.clone();
        let mut next_states = batch.next_states.clone();
        let mut goals = batch.goals.clone();
        self.state_norm.normalize_rows_in_place(&mut states);
        self.state_norm.normalize_rows_in_place(&mut next_states);
        self.goal_norm.normalize_rows_in_place(&mut goals);
        Ok(Prepared {
            rows: n,
            states,
            next_states,
            goals,
            raw: batch,
        })
    }

    fn actor_input(&self, states: &[f64], goals: &[f64], rows: usize) -> Vec<f64> {
        concat_rows(&[(states, self.state_dim), (goals, self.goal_dim)], rows)
    }

    fn critic_input(&self, states: &[f64], goals: &[f64], actions: &[f64], rows: usize) -> Vec<f64> {
        let scaled: Vec<f64> = actions.iter().map(|a| a / self.action_bound).collect();
        concat_rows(
            &[
                (states, self.state_dim),
                (goals, self.goal_dim),
                (&scaled, self.action_dim),
            ],
            rows,
        )
    }

    fn q_values(
        &self,
        critic: &DenseNet,
        states: &[f64],
        goals: &[f64],
        actions: &[f64],
        rows: usize,
    ) -> Result<Vec<f64>> {
        let input = self.critic_input(states, goals, actions, rows);
        Ok(critic.forward_batch(&input, rows)?.into_output())
    }

    fn one_hot_rows(&self, picks: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; picks.len() * self.action_dim];
        for (r, &k) in picks.iter().enumerate() {
            out[r * self.action_dim + k] = 1.0;
        }
        out
    }

    /// Critic values of every one-hot action, `rows x action_dim`.
    fn candidate_values(&self, critic: &DenseNet, states: &[f64], goals: &[f64], rows: usize) -> Result<Vec<f64>> {
        let k = self.action_dim;
        let mut s_rep = Vec::with_capacity(rows * k * self.state_dim);
        let mut g_rep = Vec::with_capacity(rows * k * self.goal_dim);
        for r in 0..rows {
            for _ in 0..k {
                s_rep.extend_from_slice(&states[r * self.state_dim..(r + 1) * self.state_dim]);
                g_rep.extend_from_slice(&goals[r * self.goal_dim..(r + 1) * self.goal_dim]);
            }
        }
        let candidates: Vec<usize> = (0..rows).flat_map(|_| 0..k).collect();
        let a = self.one_hot_rows(&candidates);
        self.q_values(critic, &s_rep, &g_rep, &a, rows * k)
    }

    /// Deterministic policy action on normalized inputs. Continuous: the actor
    /// output. Discrete: the one-hot argmax of the critic over candidates for
    /// Q-maximizing objectives, of the actor scores otherwise.
    fn policy_actions(
        &self,
        actor: &DenseNet,
        critic: &DenseNet,
        states: &[f64],
        goals: &[f64],
        rows: usize,
    ) -> Result<Vec<f64>> {
        if !self.discrete {
            let input = self.actor_input(states, goals, rows);
            return Ok(actor.forward_batch(&input, rows)?.into_output());
        }
        let scores = if self.cfg.algo.maximizes_q() {
            self.candidate_values(critic, states, goals, rows)?
        } else {
            let input = self.actor_input(states, goals, rows);
            actor.forward_batch(&input, rows)?.into_output()
        };
        let picks: Vec<usize> = scores.chunks_exact(self.action_dim).map(argmax).collect();
        Ok(self.one_hot_rows(&picks))
    }

    fn q_targets_prepared(&mut self, p: &Prepared) -> Result<Vec<f64>> {
        let next_actions = self.policy_actions(
            &self.actor_target,
            &self.critic_target,
            &p.next_states,
            &p.goals,
            p.rows,
        )?;
        let next_q = self.q_values(&self.critic_target, &p.next_states, &p.goals, &next_actions, p.rows)?;
        let bounds = self.q_target_bounds();
        let mut targets = Vec::with_capacity(p.rows);
        for (r, q) in p.raw.rewards.iter().zip(&next_q) {
            let raw = r + self.cfg.gamma * q;
            if !raw.is_finite() {
                return Err(Error::NonFinite(format!(
                    "critic target {raw} from reward {r} and bootstrap {q}"
                )));
            }
            let y = if self.cfg.clip_q_target {
                raw.clamp(bounds.0, bounds.1)
            } else {
                raw
            };
            self.target_stats.record(raw, y, bounds);
            targets.push(y);
        }
        Ok(targets)
    }

    /// Clipped bootstrapped targets `r + gamma * Q_target(s', pi_target(s', g), g)`.
    pub fn compute_q_target(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let p = self.prepare(batch)?;
        self.q_targets_prepared(&p)
    }

    /// Mean squared TD error, its gradient, and the mean online Q.
    fn critic_objective(&self, p: &Prepared, targets: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let input = self.critic_input(&p.states, &p.goals, &p.raw.actions, p.rows);
        let trace = self.critic.forward_batch(&input, p.rows)?;
        let n = p.rows as f64;
        let q = trace.output();
        let mut loss = 0.0;
        let mut upstream = Vec::with_capacity(p.rows);
        for (qi, yi) in q.iter().zip(targets) {
            let d = qi - yi;
            loss += d * d / n;
            upstream.push(2.0 * d / n);
        }
        let mean_q = q.iter().sum::<f64>() / n;
        let (grad, _) = self.critic.backward_batch(&trace, &upstream)?;
        Ok((loss, grad, mean_q))
    }

    /// Raw actor outputs on a batch's states and goals.
    pub fn policy_means(&self, batch: &Batch) -> Result<Vec<f64>> {
        let p = self.prepare(batch)?;
        let input = self.actor_input(&p.states, &p.goals, p.rows);
        Ok(self.actor.forward_batch(&input, p.rows)?.into_output())
    }

    fn critic_update_prepared(&mut self, p: &Prepared) -> Result<(f64, f64)> {
        let targets = self.q_targets_prepared(p)?;
        let (loss, grad, mean_q) = self.critic_objective(p, &targets)?;
        self.critic_opt
            .step(self.critic.params_mut(), &grad, self.cfg.lr_critic)?;
        Ok((loss, mean_q))
    }

    /// TD loss and its critic gradient against the given targets, without
    /// stepping.
    pub fn critic_gradient(&self, batch: &Batch, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = self.prepare(batch)?;
        check_dim("critic targets", p.rows, targets.len())?;
        let (loss, grad, _) = self.critic_objective(&p, targets)?;
        Ok((loss, grad))
    }

    /// One Adam step on the critic's mean squared TD error. Returns the
    /// pre-step loss.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64> {
        let p = self.prepare(batch)?;
        Ok(self.critic_update_prepared(&p)?.0)
    }

    fn advantage_prepared(&self, p: &Prepared) -> Result<Vec<f64>> {
        let pi_s = self.policy_actions(&self.actor, &self.critic, &p.states, &p.goals, p.rows)?;
        let pi_next = self.policy_actions(&self.actor, &self.critic, &p.next_states, &p.goals, p.rows)?;
        let v_s = self.q_values(&self.critic, &p.states, &p.goals, &pi_s, p.rows)?;
        let v_next = self.q_values(&self.critic, &p.next_states, &p.goals, &pi_next, p.rows)?;
        Ok((0..p.rows)
            .map(|i| p.raw.rewards[i] + self.cfg.gamma * v_next[i] - v_s[i])
            .collect())
    }

    /// `A = r + gamma * V(s', g) - V(s, g)` with `V(s, g) = Q(s, pi(s, g), g)`
    /// on the online networks.
    pub fn compute_advantage(&self, batch: &Batch) -> Result<Vec<f64>> {
        let p = self.prepare(batch)?;
        self.advantage_prepared(&p)
    }

    /// Per-sample imitation weights for a batch's advantages, with the
    /// threshold taken as the configured batch quantile.
    pub fn imitation_weights(&self, advantages: &[f64], offsets: &[usize]) -> Vec<f64> {
        let threshold = quantile(advantages, self.cfg.adv_quantile);
        advantages
            .iter()
            .zip(offsets)
            .map(|(&a, &o)| wgcsl_weight(a, o, threshold, &self.cfg))
            .collect()
    }

    fn actor_objective(&self, p: &Prepared, weights: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        let n = p.rows;
        let nf = n as f64;
        let da = self.action_dim;
        let input = self.actor_input(&p.states, &p.goals, n);
        let trace: BatchTrace = self.actor.forward_batch(&input, n)?;
        let pi = trace.output().to_vec();
        let mut upstream = vec![0.0; n * da];
        let mut loss = 0.0;
        let algo = self.cfg.algo;

        if algo.maximizes_q() {
            let cin = self.critic_input(&p.states, &p.goals, &pi, n);
            let ctrace = self.critic.forward_batch(&cin, n)?;
            loss -= ctrace.output().iter().sum::<f64>() / nf;
            let dq = self.critic.input_grad_batch(&ctrace, &vec![-1.0 / nf; n])?;
            let width = self.state_dim + self.goal_dim + da;
            let offset = self.state_dim + self.goal_dim;
            for r in 0..n {
                for k in 0..da {
                    upstream[r * da + k] += dq[r * width + offset + k] / self.action_bound;
                }
            }
            let l2 = self.cfg.action_l2;
            let scale2 = self.action_bound * self.action_bound;
            for (u, &a) in upstream.iter_mut().zip(&pi) {
                loss += l2 * a * a / scale2 / nf;
                *u += 2.0 * l2 * a / scale2 / nf;
            }
        }

        let bc_coef = match algo {
            Algo::Ddpg | Algo::DdpgHer => 0.0,
            Algo::Gcsl | Algo::Wgcsl => 1.0,
            Algo::Qwsl => self.cfg.eta,
        };
        if bc_coef > 0.0 {
            for r in 0..n {
                let w = match weights {
                    Some(w) if algo.uses_advantage_weights() => bc_coef * w[r],
                    _ => bc_coef,
                };
                for k in 0..da {
                    let d = pi[r * da + k] - p.raw.actions[r * da + k];
                    loss += w * d * d / nf;
                    upstream[r * da + k] += 2.0 * w * d / nf;
                }
            }
        }

        let (grad, _) = self.actor.backward_batch(&trace, &upstream)?;
        Ok((loss, grad))
    }

    fn actor_update_prepared(&mut self, p: &Prepared, weights: Option<&[f64]>) -> Result<f64> {
        let (loss, grad) = self.actor_objective(p, weights)?;
        self.actor_opt.step(self.actor.params_mut(), &grad, self.cfg.lr_actor)?;
        Ok(loss)
    }

    fn resolve_weights(&self, p: &Prepared, weights: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        match (weights, self.cfg.algo.uses_advantage_weights()) {
            (Some(w), _) => {
                check_dim("actor weights", p.rows, w.len())?;
                Ok(Some(w.to_vec()))
            }
            (None, true) => {
                let adv = self.advantage_prepared(p)?;
                Ok(Some(self.imitation_weights(&adv, &p.raw.offsets)))
            }
            (None, false) => Ok(None),
        }
    }

    /// Actor loss and its parameter gradient without stepping. Weights are
    /// treated as constants; for weighted objectives they are computed from
    /// the current networks when not supplied.
    pub fn actor_gradient(&self, batch: &Batch, weights: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        let p = self.prepare(batch)?;
        let w = self.resolve_weights(&p, weights)?;
        self.actor_objective(&p, w.as_deref())
    }

    /// One Adam step on the actor objective (see [`Agent::actor_gradient`]).
    /// Returns the pre-step loss.
    pub fn actor_update(&mut self, batch: &Batch, weights: Option<&[f64]>) -> Result<f64> {
        let p = self.prepare(batch)?;
        let w = self.resolve_weights(&p, weights)?;
        self.actor_update_prepared(&p, w.as_deref())
    }

    /// Critic step, weights from the updated critic, actor step.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let p = self.prepare(batch)?;
        let mut stats = UpdateStats::default();
        if self.cfg.algo.uses_critic() {
            let (loss, mean_q) = self.critic_update_prepared(&p)?;
            stats.critic_loss = Some(loss);
            stats.mean_q = Some(mean_q);
        }
        let weights = if self.cfg.algo.uses_advantage_weights() {
            let adv = self.advantage_prepared(&p)?;
            let w = self.imitation_weights(&adv, &batch.offsets);
            stats.mean_weight = Some(w.iter().sum::<f64>() / w.len() as f64);
            Some(w)
        } else {
            None
        };
        stats.actor_loss = self.actor_update_prepared(&p, weights.as_deref())?;
        Ok(stats)
    }

    /// `target <- retain * target + (1 - retain) * online` for both networks.
    pub fn polyak_update(&mut self) {
        let retain = self.cfg.polyak_retain;
        self.actor_target.soft_update_from(&self.actor, retain);
        self.critic_target.soft_update_from(&self.critic, retain);
    }

    fn normalized_pair(&self, obs: &Observation) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.state_norm.normalize(&obs.state)?,
            self.goal_norm.normalize(&obs.desired)?,
        ))
    }

    /// Deterministic policy action; draws no randomness.
    pub fn greedy_action(&self, obs: &Observation) -> Result<Vec<f64>> {
        let (s, g) = self.normalized_pair(obs)?;
        let bound = self.action_bound;
        let mut a = self.policy_actions(&self.actor, &self.critic, &s, &g, 1)?;
        a.iter_mut().for_each(|v| *v = v.clamp(-bound, bound));
        Ok(a)
    }

    /// Greedy (`explore == false`) or exploratory action for one observation.
    /// Discrete tasks explore epsilon-greedily with `random_eps`.
    pub fn select_action(&self, obs: &Observation, explore: bool, rng: &mut SimRng) -> Result<Vec<f64>> {
        if !explore {
            return self.greedy_action(obs);
        }
        let bound = self.action_bound;
        if rng.random_bool(self.cfg.random_eps) {
            if self.discrete {
                let k = rng.random_range(0..self.action_dim);
                return Ok(self.one_hot_rows(&[k]));
            }
            return Ok((0..self.action_dim).map(|_| rng.random_range(-bound..=bound)).collect());
        }
        let mut a = self.greedy_action(obs)?;
        if !self.discrete && self.cfg.noise_eps > 0.0 {
            let normal = Normal::new(0.0, self.cfg.noise_eps * bound).map_err(|e| Error::Config(e.to_string()))?;
            for v in a.iter_mut() {
                *v += normal.sample(rng);
            }
        }
        a.iter_mut().for_each(|v| *v = v.clamp(-bound, bound));
        Ok(a)
    }

    /// Critic value of each one-hot action at one observation (discrete tasks).
    pub fn action_values(&self, obs: &Observation) -> Result<Vec<f64>> {
        let (s, g) = self.normalized_pair(obs)?;
        self.candidate_values(&self.critic, &s, &g, 1)
    }

    /// Success rate of greedy rollouts from fresh resets.
    pub fn evaluate(&self, env: &mut dyn GoalEnv, n_rollouts: usize, rng: &mut SimRng) -> Result<f64> {
        evaluate_policy(env, n_rollouts, rng, |o| self.greedy_action(o))
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        let mut norms = BTreeMap::new();
        norms.insert("state".to_string(), self.state_norm.clone());
        norms.insert("goal".to_string(), self.goal_norm.clone());
        AgentCheckpoint {
            algo: self.cfg.algo,
            actor: NetCheckpoint::from_net(&self.actor, norms.clone()),
            critic: NetCheckpoint::from_net(&self.critic, norms),
        }
    }

    /// Restore online and target networks and normalizers from a checkpoint.
    pub fn load_checkpoint(&mut self, ck: &AgentCheckpoint) -> Result<()> {
        let actor = ck.actor.to_net()?;
        let critic = ck.critic.to_net()?;
        if actor.layer_dims() != self.actor.layer_dims() || critic.layer_dims() != self.critic.layer_dims() {
            return Err(Error::Config("checkpoint architecture does not match agent".into()));
        }
        if let Some(n) = ck.actor.normalizers.get("state") {
            self.state_norm = n.clone();
        }
        if let Some(n) = ck.actor.normalizers.get("goal") {
            self.goal_norm = n.clone();
        }
        self.actor_target = actor.clone();
        self.critic_target = critic.clone();
        self.actor = actor;
        self.critic = critic;
        Ok(())
    }
}

/// Success rate of `policy` over rollouts from fresh resets.
pub fn evaluate_policy<F>(env: &mut dyn GoalEnv, n_rollouts: usize, rng: &mut SimRng, mut policy: F) -> Result<f64>
where
    F: FnMut(&Observation) -> Result<Vec<f64>>,
{
    if n_rollouts == 0 {
        return Ok(0.0);
    }
    let mut successes = 0;
    for _ in 0..n_rollouts {
        let obs = env.reset(rng);
        if greedy_rollout(env, obs, &mut policy)? {
            successes += 1;
        }
    }
    Ok(successes as f64 / n_rollouts as f64)
}

/// Roll one episode with `policy`; success when the goal ball holds at the
/// final step (continuous) or at any step (discrete).
pub fn greedy_rollout<F>(env: &mut dyn GoalEnv, mut obs: Observation, mut policy: F) -> Result<bool>
where
    F: FnMut(&Observation) -> Result<Vec<f64>>,
{
    let any_step = env.spec().discrete;
    let mut hit = false;
    loop {
        let action = policy(&obs)?;
        let out = env.step(&action)?;
        obs = out.observation;
        let inside = env.is_success(&obs.achieved, &obs.desired);
        hit |= inside;
        if out.terminal {
            return Ok(if any_step { hit } else { inside });
        }
    }
}

#[cfg(test)]
mod tests;
