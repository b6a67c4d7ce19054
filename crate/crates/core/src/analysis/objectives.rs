use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agents::{best_advantage_factor, exp_clip, quantile, Agent, AgentConfig, Batch};
use crate::envs::RewardMode;
use crate::error::{check_dim, Error, Result};
use crate::SimRng;

/// Per-sample quantities the three objective estimators consume.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveInputs {
    pub action_dim: usize,
    /// Behaviour actions, row-major.
    pub actions: Vec<f64>,
    /// Policy outputs at the same rows.
    pub means: Vec<f64>,
    pub advantages: Vec<f64>,
    pub offsets: Vec<usize>,
    /// 1/0 goal-reaching rewards.
    pub rewards: Vec<f64>,
}

impl ObjectiveInputs {
    pub fn rows(&self) -> usize {
        self.offsets.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.rows();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        check_dim("objective actions", n * self.action_dim, self.actions.len())?;
        check_dim("objective means", n * self.action_dim, self.means.len())?;
        check_dim("objective advantages", n, self.advantages.len())?;
        check_dim("objective rewards", n, self.rewards.len())
    }

    /// Inputs from an agent's current actor and critic on a batch. Rewards
    /// are converted to the 1/0 form.
    pub fn from_agent(agent: &Agent, batch: &Batch, reward_mode: RewardMode) -> Result<Self> {
        let means = agent.policy_means(batch)?;
        let advantages = agent.compute_advantage(batch)?;
        let shift = match reward_mode {
            RewardMode::SparseNeg => 1.0,
            RewardMode::Indicator => 0.0,
        };
        Ok(Self {
            action_dim: batch.actions.len() / batch.rows,
            actions: batch.actions.clone(),
            means,
            advantages,
            offsets: batch.offsets.clone(),
            rewards: batch.rewards.iter().map(|r| r + shift).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimates {
    pub gcsl: f64,
    pub wgcsl: f64,
    pub qwsl: f64,
}

/// Whether the weight factor `exp_clip(A) * eps(A)` is raised to at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightFloor {
    Enforced,
    Disabled,
}

/// Log density of `a` under an isotropic Gaussian of std `sigma` at `mean`.
pub fn gaussian_log_likelihood(a: &[f64], mean: &[f64], sigma: f64) -> f64 {
    let d = a.len() as f64;
    let sq: f64 = a.iter().zip(mean).map(|(x, m)| (x - m).powi(2)).sum();
    -0.5 * sq / (sigma * sigma) - 0.5 * d * (2.0 * PI * sigma * sigma).ln()
}

/// Per-sample weights `gamma^offset * w(A)` with `w(A) = exp_clip(A) * eps(A)`,
/// floored at 1 when enforced. The threshold is the batch quantile.
pub fn objective_weights(inputs: &ObjectiveInputs, cfg: &AgentConfig, floor: WeightFloor) -> Vec<f64> {
    let threshold = quantile(&inputs.advantages, cfg.adv_quantile);
    inputs
        .advantages
        .iter()
        .zip(&inputs.offsets)
        .map(|(&a, &o)| {
            let m = exp_clip(a, cfg) * best_advantage_factor(a, threshold, cfg);
            let m = match floor {
                WeightFloor::Enforced => m.max(1.0),
                WeightFloor::Disabled => m,
            };
            cfg.gamma.powi(o as i32) * m
        })
        .collect()
}

/// `J_GCSL = mean[log pi]`, `J_WGCSL = mean[w log pi]` and
/// `J_QWSL = mean[gamma^offset r] + eta * J_WGCSL`, with `log pi` the
/// Gaussian surrogate of std `sigma` around the policy output.
pub fn estimate_objectives(
    inputs: &ObjectiveInputs,
    cfg: &AgentConfig,
    sigma: f64,
    floor: WeightFloor,
) -> Result<ObjectiveEstimates> {
    inputs.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("surrogate std must be > 0, got {sigma}")));
    }
    let n = inputs.rows();
    let d = inputs.action_dim;
    let weights = objective_weights(inputs, cfg, floor);
    let mut gcsl = 0.0;
    let mut wgcsl = 0.0;
    let mut reward = 0.0;
    for i in 0..n {
        let ll = gaussian_log_likelihood(
            &inputs.actions[i * d..(i + 1) * d],
            &inputs.means[i * d..(i + 1) * d],
            sigma,
        );
        gcsl += ll;
        wgcsl += weights[i] * ll;
        reward += cfg.gamma.powi(inputs.offsets[i] as i32) * inputs.rewards[i];
    }
    let nf = n as f64;
    let (gcsl, wgcsl) = (gcsl / nf, wgcsl / nf);
    Ok(ObjectiveEstimates {
        gcsl,
        wgcsl,
        qwsl: reward / nf + cfg.eta * wgcsl,
    })
}

pub const ORDERING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub batches: usize,
    /// Batches violating either inequality.
    pub violations: usize,
    pub qwsl_below_wgcsl: usize,
    pub wgcsl_below_gcsl: usize,
    /// Most negative `J_WGCSL - J_GCSL` seen.
    pub worst_wgcsl_gap: f64,
    /// Most negative `J_QWSL - J_WGCSL` seen.
    pub worst_qwsl_gap: f64,
}

/// Random batch with indicator rewards: relabeled rows (offset >= 1) reached
/// their relabeled goal, unrelabeled rows carry a random 1/0 reward.
pub fn synthetic_inputs(rows: usize, action_dim: usize, rng: &mut SimRng) -> ObjectiveInputs {
    let noise = Normal::new(0.0, 0.5).expect("valid std");
    let mut means = Vec::with_capacity(rows * action_dim);
    let mut actions = Vec::with_capacity(rows * action_dim);
    for _ in 0..rows * action_dim {
        let m: f64 = rng.random_range(-1.0..1.0);
        means.push(m);
        actions.push(m + noise.sample(rng));
    }
    let advantages = (0..rows).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut offsets = Vec::with_capacity(rows);
    let mut rewards = Vec::with_capacity(rows);
    for _ in 0..rows {
        if rng.random_bool(0.8) {
            offsets.push(rng.random_range(1..=10));
            rewards.push(1.0);
        } else {
            offsets.push(0);
            rewards.push(if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        }
    }
    ObjectiveInputs {
        action_dim,
        actions,
        means,
        advantages,
        offsets,
        rewards,
    }
}

/// Count batches where `J_QWSL >= J_WGCSL >= J_GCSL` fails by more than
/// [`ORDERING_TOL`] under a unit-std surrogate.
pub fn check_objective_ordering(
    n_batches: usize,
    cfg: &AgentConfig,
    floor: WeightFloor,
    rng: &mut SimRng,
) -> Result<OrderingReport> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0 && cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(Error::Config(format!(
            "ordering premises need gamma in (0, 1] and eta in (0, 1], got {} and {}",
            cfg.gamma, cfg.eta
        )));
    }
    let mut report = OrderingReport {
        batches: n_batches,
        ..Default::default()
    };
    for _ in 0..n_batches {
        let rows = rng.random_range(1..=64);
        let inputs = synthetic_inputs(rows, 2, rng);
        let est = estimate_objectives(&inputs, cfg, 1.0, floor)?;
        let q_gap = est.qwsl - est.wgcsl;
        let w_gap = est.wgcsl - est.gcsl;
        report.worst_qwsl_gap = report.worst_qwsl_gap.min(q_gap);
        report.worst_wgcsl_gap = report.worst_wgcsl_gap.min(w_gap);
        let q_bad = q_gap < -ORDERING_TOL;
        let w_bad = w_gap < -ORDERING_TOL;
        report.qwsl_below_wgcsl += q_bad as usize;
        report.wgcsl_below_gcsl += w_bad as usize;
        report.violations += (q_bad || w_bad) as usize;
    }
    Ok(report)
}
