use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, Algo};
use crate::envs::{EnvOptions, RewardMode, RewardSpec, ENV_IDS};
use crate::error::{Error, Result};

/// One training job: environment, learner, loop sizes and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: String,
    /// Std of zero-mean Gaussian noise added to executed actions.
    pub action_noise: f64,
    pub reward_mode: RewardMode,
    pub agent: AgentConfig,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub cycles_per_epoch: usize,
    pub episodes_per_cycle: usize,
    pub batches_per_cycle: usize,
    pub eval_rollouts: usize,
    /// Replay capacity in transitions.
    pub buffer_capacity: usize,
    /// Metrics and checkpoints are written here when set.
    pub out_dir: Option<PathBuf>,
    /// Record elapsed seconds in the `wall_time` column; 0 otherwise, which
    /// keeps metrics files byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: "point-reach".into(),
            action_noise: 0.0,
            reward_mode: RewardMode::SparseNeg,
            agent: AgentConfig::default(),
            seeds: vec![100, 200, 300, 400, 500],
            epochs: 50,
            cycles_per_epoch: 50,
            episodes_per_cycle: 2,
            batches_per_cycle: 40,
            eval_rollouts: 100,
            buffer_capacity: 1_000_000,
            out_dir: None,
            record_wall_time: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

pub fn parse_seed_list(value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse("seeds", s))
        .collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !ENV_IDS.contains(&self.env.as_str()) {
            return Err(Error::Config(format!("unknown environment id {:?}", self.env)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let counts = [
            ("epochs", self.epochs),
            ("cycles_per_epoch", self.cycles_per_epoch),
            ("episodes_per_cycle", self.episodes_per_cycle),
            ("batches_per_cycle", self.batches_per_cycle),
            ("eval_rollouts", self.eval_rollouts),
            ("buffer_capacity", self.buffer_capacity),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !(self.action_noise >= 0.0 && self.action_noise.is_finite()) {
            return Err(Error::Config(format!(
                "action_noise must be >= 0, got {}",
                self.action_noise
            )));
        }
        self.agent.validate()
    }

    pub fn env_options(&self, noise_seed: u64) -> EnvOptions {
        EnvOptions {
            reward: RewardSpec::new(self.reward_mode),
            action_noise: self.action_noise,
            noise_seed,
        }
    }

    /// Apply one `key = value` setting. Keys are the field names of this
    /// record and of [`AgentConfig`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "env" => self.env = value.trim().to_string(),
            "action_noise" => self.action_noise = parse(key, value)?,
            "reward_mode" => {
                self.reward_mode = value.trim().parse()?;
            }
            "seeds" => self.seeds = parse_seed_list(value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "cycles_per_epoch" => self.cycles_per_epoch = parse(key, value)?,
            "episodes_per_cycle" => self.episodes_per_cycle = parse(key, value)?,
            "batches_per_cycle" => self.batches_per_cycle = parse(key, value)?,
            "eval_rollouts" => self.eval_rollouts = parse(key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value.trim())),
            "record_wall_time" => self.record_wall_time = parse(key, value)?,
            _ => {
                if !self.agent.set(key, value)? {
                    return Err(Error::Config(format!("unknown config key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn algo(&self) -> Algo {
        self.agent.algo
    }

    /// Apply flat `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&fs::read_to_string(path)?)
    }
}
