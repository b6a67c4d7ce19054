use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;

use super::metrics::{write_csv, MetricsRecord};
use super::RunConfig;
use crate::agents::{Agent, Batch, TargetStats};
use crate::envs::{make_env, GoalEnv};
use crate::error::{Error, Result};
use crate::replay::{Episode, EpisodeBuffer, ReplayConfig};
use crate::SimRng;

/// Independent random streams of one seed.
pub(crate) fn seed_streams(seed: u64) -> (SimRng, SimRng) {
    let train = SimRng::seed_from_u64(seed);
    let mut eval = SimRng::seed_from_u64(seed);
    eval.set_stream(1);
    (train, eval)
}

/// Roll one episode, exploring or greedy.
pub fn collect_episode(env: &mut dyn GoalEnv, agent: &Agent, explore: bool, rng: &mut SimRng) -> Result<Episode> {
    let mut obs = env.reset(rng);
    let env_id = env.spec().id.clone();
    let desired = obs.desired.clone();
    let mut states = vec![obs.state.clone()];
    let mut achieved = vec![obs.achieved.clone()];
    let mut actions = Vec::new();
    loop {
        let a = agent.select_action(&obs, explore, rng)?;
        let out = env.step(&a)?;
        actions.push(a);
        obs = out.observation;
        states.push(obs.state.clone());
        achieved.push(obs.achieved.clone());
        if out.terminal {
            break;
        }
    }
    Ok(Episode {
        states,
        actions,
        achieved,
        desired,
        env_id,
    })
}

pub fn replay_config(env: &dyn GoalEnv, capacity: usize) -> ReplayConfig {
    ReplayConfig {
        capacity,
        reward: env.reward_spec(),
        threshold: env.spec().threshold,
        goal_dim: env.spec().goal_dim,
    }
}

/// Running sums of update statistics over one epoch.
#[derive(Default)]
pub(crate) struct EpochStats {
    updates: usize,
    actor_loss: f64,
    critic_loss: f64,
    critic_updates: usize,
    q: f64,
    weight: f64,
    weighted_updates: usize,
    samples: usize,
    relabeled: usize,
}

impl EpochStats {
    pub(crate) fn record_batch(&mut self, relabeled: usize, samples: usize) {
        self.samples += samples;
        self.relabeled += relabeled;
    }

    pub(crate) fn record_update(&mut self, s: &crate::agents::UpdateStats) -> Result<()> {
        let finite = s.actor_loss.is_finite() && s.critic_loss.is_none_or(f64::is_finite);
        if !finite {
            return Err(Error::NonFinite(format!("loss diverged: {s:?}")));
        }
        self.updates += 1;
        self.actor_loss += s.actor_loss;
        if let (Some(l), Some(q)) = (s.critic_loss, s.mean_q) {
            self.critic_loss += l;
            self.q += q;
            self.critic_updates += 1;
        }
        if let Some(w) = s.mean_weight {
            self.weight += w;
            self.weighted_updates += 1;
        }
        Ok(())
    }

    fn mean(sum: f64, n: usize) -> Option<f64> {
        (n > 0).then(|| sum / n as f64)
    }

    pub(crate) fn into_record(
        self,
        epoch: usize,
        seed: u64,
        algo: &str,
        env: &str,
        success: f64,
        wall: f64,
    ) -> MetricsRecord {
        MetricsRecord {
            epoch,
            seed,
            algo: algo.to_string(),
            env: env.to_string(),
            success_rate: success,
            mean_actor_loss: Self::mean(self.actor_loss, self.updates).unwrap_or(0.0),
            mean_critic_loss: Self::mean(self.critic_loss, self.critic_updates),
            mean_q: Self::mean(self.q, self.critic_updates),
            mean_weight: Self::mean(self.weight, self.weighted_updates),
            relabel_fraction: if self.samples > 0 {
                self.relabeled as f64 / self.samples as f64
            } else {
                0.0
            },
            wall_time: wall,
        }
    }
}

/// Sample a batch and run one joint update; returns the relabeled count.
pub(crate) fn sample_and_update(
    agent: &mut Agent,
    buffer: &EpisodeBuffer,
    stats: &mut EpochStats,
    rng: &mut SimRng,
) -> Result<()> {
    let cfg = agent.config();
    let samples = buffer.sample_batch(cfg.batch_size, cfg.effective_relabel_prob(), rng)?;
    let relabeled = samples.iter().filter(|s| s.relabeled).count();
    stats.record_batch(relabeled, samples.len());
    let batch = Batch::from_samples(&samples)?;
    let s = agent.update(&batch)?;
    stats.record_update(&s)
}

/// Outcome of one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub target_stats: TargetStats,
    pub agent: Agent,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub runs: Vec<SeedRun>,
    pub metrics_path: Option<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
}

impl TrainOutput {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.runs.iter().flat_map(|r| r.records.iter().cloned()).collect()
    }

    /// Mean final-epoch success over seeds.
    pub fn final_success(&self) -> f64 {
        let finals: Vec<f64> = self
            .runs
            .iter()
            .filter_map(|r| r.records.last().map(|m| m.success_rate))
            .collect();
        finals.iter().sum::<f64>() / finals.len().max(1) as f64
    }
}

/// One seed of the collect / update / soft-update loop. `observer` sees the
/// agent after every cycle's target update as `(epoch, cycle, agent)`.
pub fn train_seed(cfg: &RunConfig, seed: u64, observer: &mut dyn FnMut(usize, usize, &Agent)) -> Result<SeedRun> {
    cfg.validate()?;
    let start = Instant::now();
    let (mut rng, mut eval_rng) = seed_streams(seed);
    let mut env = make_env(&cfg.env, &cfg.env_options(seed))?;
    let mut eval_env = make_env(&cfg.env, &cfg.env_options(seed ^ 0x9e37_79b9_7f4a_7c15))?;
    let mut agent = Agent::new(cfg.agent.clone(), env.spec(), cfg.reward_mode, &mut rng)?;
    let mut buffer = EpisodeBuffer::new(replay_config(env.as_ref(), cfg.buffer_capacity));
    let algo = cfg.algo().name();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut stats = EpochStats::default();
        for cycle in 0..cfg.cycles_per_epoch {
            for _ in 0..cfg.episodes_per_cycle {
                let ep = collect_episode(env.as_mut(), &agent, true, &mut rng)?;
                agent.observe_episode(&ep)?;
                buffer.store_episode(ep)?;
            }
            for _ in 0..cfg.batches_per_cycle {
                sample_and_update(&mut agent, &buffer, &mut stats, &mut rng)?;
            }
            agent.polyak_update();
            observer(epoch, cycle, &agent);
        }
        let success = agent.evaluate(eval_env.as_mut(), cfg.eval_rollouts, &mut eval_rng)?;
        let wall = if cfg.record_wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        records.push(stats.into_record(epoch, seed, algo, &cfg.env, success, wall));
    }
    Ok(SeedRun {
        seed,
        records,
        target_stats: agent.target_stats().clone(),
        agent,
    })
}

pub fn metrics_file_name(cfg: &RunConfig) -> String {
    format!("metrics_{}_{}.csv", cfg.env, cfg.algo().name())
}

/// Every seed from fresh state, then metrics and checkpoints when an output
/// directory is configured.
pub fn train(cfg: &RunConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        runs.push(train_seed(cfg, seed, &mut |_, _, _| {})?);
    }
    let mut out = TrainOutput {
        runs,
        metrics_path: None,
        checkpoints: Vec::new(),
    };
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join(metrics_file_name(cfg));
        write_csv(&path, &out.records())?;
        out.metrics_path = Some(path);
        for run in &out.runs {
            let ck = dir.join(format!(
                "checkpoint_{}_{}_seed{}.json",
                cfg.env,
                cfg.algo().name(),
                run.seed
            ));
            fs::write(&ck, serde_json::to_vec(&run.agent.checkpoint())?)?;
            out.checkpoints.push(ck);
        }
    }
    Ok(out)
}
