use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::metrics::write_csv;
use super::train::{replay_config, sample_and_update, EpochStats};
use crate::agents::{Agent, AgentConfig, Algo};
use crate::analysis::{stitching_probe, value_iteration, DatasetManifest, Policy, StitchReport, TabularPolicy};
use crate::envs::{
    make_env, Arm, EnvOptions, FiniteEnv, GoalEnv, GridAction, GridState, GridStitch, Observation, RewardMode,
    RewardSpec, POINT_GAIN,
};
use crate::error::{Error, Result};
use crate::replay::{Episode, EpisodeBuffer};
use crate::SimRng;

/// Goal-seeking controller for the Y-maze: below the walls it heads for the
/// gap, passes it vertically, then steers straight at the goal.
#[derive(Clone, Copy, Debug, Default)]
pub struct WaypointPolicy;

const GAP_ALIGN: f64 = 0.05;
const BELOW_GAP: [f64; 2] = [0.0, -0.15];
const ABOVE_GAP: [f64; 2] = [0.0, 0.2];

impl WaypointPolicy {
    pub fn action(pos: &[f64], goal: &[f64]) -> Vec<f64> {
        let target = if pos[1] < 0.0 {
            if pos[0].abs() > GAP_ALIGN {
                BELOW_GAP
            } else {
                ABOVE_GAP
            }
        } else {
            [goal[0], goal[1]]
        };
        (0..2)
            .map(|k| ((target[k] - pos[k]) / POINT_GAIN).clamp(-1.0, 1.0))
            .collect()
    }
}

impl Policy for WaypointPolicy {
    fn act(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        Ok(Self::action(&obs.state, &obs.desired))
    }
}

fn rollout_scripted(
    env: &mut dyn GoalEnv,
    obs: Observation,
    mut act: impl FnMut(&Observation) -> Vec<f64>,
) -> Result<Episode> {
    let desired = obs.desired.clone();
    let mut states = vec![obs.state.clone()];
    let mut achieved = vec![obs.achieved.clone()];
    let mut actions = Vec::new();
    let mut obs = obs;
    loop {
        let a = act(&obs);
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
        env_id: env.spec().id.clone(),
    })
}

/// Scripted same-side dataset: on the grid `a_start -> hub -> ga` and
/// `b_start -> hub -> gb`; in the Y-maze the lower-left arm reaches the
/// upper-left arm and the lower-right arm the upper-right one. Cross pairs
/// never share a trajectory.
///
/// With `behavior_eps > 0` each step instead takes, with that probability, a
/// uniformly random action among those that keep the trajectory out of the
/// opposite goal region. 0 gives the deterministic script.
pub fn fill_buffer_scripted(
    env_id: &str,
    n_episodes: usize,
    reward: RewardSpec,
    capacity: usize,
    behavior_eps: f64,
    rng: &mut SimRng,
) -> Result<(EpisodeBuffer, DatasetManifest)> {
    if !(0.0..=1.0).contains(&behavior_eps) {
        return Err(Error::Config(format!(
            "behavior_eps must be in [0, 1], got {behavior_eps}"
        )));
    }
    let options = EnvOptions {
        reward,
        ..EnvOptions::default()
    };
    let mut env = make_env(env_id, &options)?;
    let mut buffer = EpisodeBuffer::new(replay_config(env.as_ref(), capacity));
    let mut manifest = DatasetManifest::new(env_id);
    for _ in 0..n_episodes {
        let ep = match env_id {
            "grid-stitch" => {
                let left = rng.random_bool(0.5);
                let (start, goal, branch, forbidden) = if left {
                    (
                        GridState::AStart,
                        GridState::GoalA,
                        GridAction::ToGoalA,
                        GridAction::ToGoalB,
                    )
                } else {
                    (
                        GridState::BStart,
                        GridState::GoalB,
                        GridAction::ToGoalB,
                        GridAction::ToGoalA,
                    )
                };
                manifest.record(start.name(), goal.name());
                let obs = env.reset_to(&GridStitch::encoded(start), &GridStitch::encoded(goal))?;
                let grid = GridStitch::new();
                rollout_scripted(env.as_mut(), obs, |o| {
                    let here = grid
                        .decode_state(&o.state)
                        .and_then(GridState::from_index)
                        .expect("grid observations are one-hot");
                    let scripted = match here {
                        GridState::AStart | GridState::BStart => GridAction::ToHub,
                        GridState::Hub => branch,
                        _ => GridAction::Stay,
                    };
                    let a = if behavior_eps > 0.0 && rng.random_bool(behavior_eps) {
                        let allowed: Vec<GridAction> = GridAction::ALL
                            .into_iter()
                            .filter(|a| !(here == GridState::Hub && *a == forbidden))
                            .collect();
                        allowed[rng.random_range(0..allowed.len())]
                    } else {
                        scripted
                    };
                    GridStitch::encoded_action(a)
                })?
            }
            "point-ymaze" => {
                let left = rng.random_bool(0.5);
                let (start, goal) = if left {
                    (Arm::LowerLeft, Arm::UpperLeft)
                } else {
                    (Arm::LowerRight, Arm::UpperRight)
                };
                manifest.record(start.name(), goal.name());
                let s = start.sample(rng);
                let g = goal.sample(rng);
                let obs = env.reset_to(&s, &g)?;
                let opposite = if left { Arm::UpperRight } else { Arm::UpperLeft };
                rollout_scripted(env.as_mut(), obs, |o| {
                    let scripted = WaypointPolicy::action(&o.state, &o.desired);
                    if behavior_eps > 0.0 && rng.random_bool(behavior_eps) {
                        let a = vec![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                        let next = [o.state[0] + POINT_GAIN * a[0], o.state[1] + POINT_GAIN * a[1]];
                        if !opposite.contains(&next) {
                            return a;
                        }
                    }
                    scripted
                })?
            }
            other => return Err(Error::Unsupported(format!("no scripted dataset for {other:?}"))),
        };
        buffer.store_episode(ep)?;
    }
    Ok((buffer, manifest))
}

/// Offline stitching experiment on a frozen scripted buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StitchConfig {
    pub env: String,
    pub algos: Vec<Algo>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub updates: usize,
    /// Joint updates between target soft updates.
    pub batches_per_cycle: usize,
    pub agent: AgentConfig,
    pub reward_mode: RewardMode,
    /// Rollouts per (start, goal) region pair on continuous tasks.
    pub probe_rollouts: usize,
    /// Random-action probability of the scripted behaviour.
    pub behavior_eps: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self {
            env: "grid-stitch".into(),
            algos: vec![Algo::Qwsl, Algo::DdpgHer, Algo::Gcsl],
            seeds: vec![100, 200, 300, 400, 500],
            episodes: 100,
            updates: 2000,
            batches_per_cycle: 40,
            agent: AgentConfig::default(),
            reward_mode: RewardMode::SparseNeg,
            probe_rollouts: 20,
            behavior_eps: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StitchRow {
    /// Algorithm name, or `oracle` for the reference policy.
    pub algo: String,
    pub seed: u64,
    pub report: StitchReport,
}

#[derive(Serialize)]
struct StitchLine<'a> {
    env: &'a str,
    algo: &'a str,
    seed: u64,
    seen_success: f64,
    cross_success: f64,
}

pub fn write_stitch_csv(path: &Path, rows: &[StitchRow]) -> Result<()> {
    let lines: Vec<StitchLine> = rows
        .iter()
        .map(|r| StitchLine {
            env: &r.report.env_id,
            algo: &r.algo,
            seed: r.seed,
            seen_success: r.report.seen_success,
            cross_success: r.report.cross_success,
        })
        .collect();
    write_csv(path, &lines)
}

fn stitch_streams(seed: u64) -> (SimRng, SimRng, SimRng) {
    let train = SimRng::seed_from_u64(seed);
    let mut data = SimRng::seed_from_u64(seed);
    data.set_stream(2);
    let mut probe = SimRng::seed_from_u64(seed);
    probe.set_stream(3);
    (train, data, probe)
}

/// Train one algorithm on the frozen buffer of a seed and probe it.
pub fn train_offline_seed(cfg: &StitchConfig, algo: Algo, seed: u64) -> Result<(Agent, StitchReport)> {
    let (mut rng, mut data_rng, mut probe_rng) = stitch_streams(seed);
    let reward = RewardSpec::new(cfg.reward_mode);
    let (buffer, manifest) = fill_buffer_scripted(
        &cfg.env,
        cfg.episodes,
        reward,
        usize::MAX,
        cfg.behavior_eps,
        &mut data_rng,
    )?;
    let options = EnvOptions {
        reward,
        ..EnvOptions::default()
    };
    let mut env = make_env(&cfg.env, &options)?;
    let agent_cfg = AgentConfig {
        algo,
        ..cfg.agent.clone()
    };
    agent_cfg.validate()?;
    let mut agent = Agent::new(agent_cfg, env.spec(), cfg.reward_mode, &mut rng)?;
    for ep in buffer.episodes() {
        agent.observe_episode(ep)?;
    }
    let mut stats = EpochStats::default();
    let every = cfg.batches_per_cycle.max(1);
    for k in 0..cfg.updates {
        sample_and_update(&mut agent, &buffer, &mut stats, &mut rng)?;
        if (k + 1) % every == 0 {
            agent.polyak_update();
        }
    }
    let report = stitching_probe(&mut &agent, env.as_mut(), &manifest, cfg.probe_rollouts, &mut probe_rng)?;
    Ok((agent, report))
}

/// Reference policy row: the value-iteration oracle on the grid, the
/// waypoint controller in the Y-maze.
pub fn oracle_report(cfg: &StitchConfig, seed: u64) -> Result<StitchReport> {
    let (_, mut data_rng, mut probe_rng) = stitch_streams(seed);
    let reward = RewardSpec::new(cfg.reward_mode);
    let (_, manifest) = fill_buffer_scripted(
        &cfg.env,
        cfg.episodes,
        reward,
        usize::MAX,
        cfg.behavior_eps,
        &mut data_rng,
    )?;
    let options = EnvOptions {
        reward,
        ..EnvOptions::default()
    };
    let mut env = make_env(&cfg.env, &options)?;
    match cfg.env.as_str() {
        "grid-stitch" => {
            let grid = GridStitch::new();
            let q = value_iteration(&grid, cfg.agent.gamma.min(0.999_999), cfg.reward_mode)?;
            let mut policy = TabularPolicy { q: &q, env: &grid };
            stitching_probe(&mut policy, env.as_mut(), &manifest, cfg.probe_rollouts, &mut probe_rng)
        }
        _ => stitching_probe(
            &mut WaypointPolicy,
            env.as_mut(),
            &manifest,
            cfg.probe_rollouts,
            &mut probe_rng,
        ),
    }
}

/// Every requested algorithm and seed plus one oracle row per seed.
pub fn train_offline_stitch(cfg: &StitchConfig) -> Result<Vec<StitchRow>> {
    if cfg.seeds.is_empty() || cfg.algos.is_empty() {
        return Err(Error::Config(
            "stitching needs at least one seed and one algorithm".into(),
        ));
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for &algo in &cfg.algos {
            let (_, report) = train_offline_seed(cfg, algo, seed)?;
            rows.push(StitchRow {
                algo: algo.name().into(),
                seed,
                report,
            });
        }
        rows.push(StitchRow {
            algo: "oracle".into(),
            seed,
            report: oracle_report(cfg, seed)?,
        });
    }
    Ok(rows)
}
