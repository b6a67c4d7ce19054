use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Actor objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Ddpg,
    DdpgHer,
    Gcsl,
    Wgcsl,
    Qwsl,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Ddpg, Algo::DdpgHer, Algo::Gcsl, Algo::Wgcsl, Algo::Qwsl];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Ddpg => "ddpg",
            Algo::DdpgHer => "ddpg-her",
            Algo::Gcsl => "gcsl",
            Algo::Wgcsl => "wgcsl",
            Algo::Qwsl => "qwsl",
        }
    }

    /// Trains a critic by TD.
    pub fn uses_critic(self) -> bool {
        !matches!(self, Algo::Gcsl)
    }

    /// Actor loss contains `-Q(s, pi(s, g), g)`; these pick discrete actions
    /// by critic argmax.
    pub fn maximizes_q(self) -> bool {
        matches!(self, Algo::Ddpg | Algo::DdpgHer | Algo::Qwsl)
    }

    pub fn uses_advantage_weights(self) -> bool {
        matches!(self, Algo::Wgcsl | Algo::Qwsl)
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "ddpg" => Ok(Algo::Ddpg),
            "ddpg-her" => Ok(Algo::DdpgHer),
            "gcsl" => Ok(Algo::Gcsl),
            "wgcsl" => Ok(Algo::Wgcsl),
            "qwsl" | "q-wsl" => Ok(Algo::Qwsl),
            other => Err(Error::Config(format!("unknown algo {other:?}"))),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every learner scalar in one record. Defaults follow the reference
/// DDPG+HER hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub algo: Algo,
    pub gamma: f64,
    /// Fraction of the old target kept by each soft update.
    pub polyak_retain: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub eta: f64,
    pub action_l2: f64,
    pub random_eps: f64,
    /// Exploration noise std as a fraction of the action bound.
    pub noise_eps: f64,
    pub relabel_prob: f64,
    pub exp_clip_lo: f64,
    pub exp_clip_hi: f64,
    /// Batch quantile of advantages used as the best-advantage threshold.
    pub adv_quantile: f64,
    pub eps_min: f64,
    pub awr_temperature: f64,
    pub hidden: Vec<usize>,
    pub clip_q_target: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Qwsl,
            gamma: 0.98,
            polyak_retain: 0.95,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            batch_size: 256,
            eta: 0.1,
            action_l2: 1.0,
            random_eps: 0.3,
            noise_eps: 0.2,
            relabel_prob: 0.8,
            exp_clip_lo: 0.0,
            exp_clip_hi: 10.0,
            adv_quantile: 0.8,
            eps_min: 0.05,
            awr_temperature: 1.0,
            hidden: vec![256, 256, 256],
            clip_q_target: true,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl AgentConfig {
    pub fn with_algo(algo: Algo) -> Self {
        Self {
            algo,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        unit("polyak_retain", self.polyak_retain)?;
        unit("random_eps", self.random_eps)?;
        unit("relabel_prob", self.relabel_prob)?;
        unit("adv_quantile", self.adv_quantile)?;
        if !(self.eps_min > 0.0 && self.eps_min <= 1.0) {
            return Err(Error::Config(format!(
                "eps_min must lie in (0, 1], got {}",
                self.eps_min
            )));
        }
        if self.algo == Algo::Qwsl && !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be > 0 for qwsl, got {}", self.eta)));
        }
        if !(self.exp_clip_hi >= 1.0 && self.exp_clip_lo >= 0.0 && self.exp_clip_lo <= self.exp_clip_hi) {
            return Err(Error::Config(format!(
                "exp_clip bounds need 0 <= lo <= hi and hi >= 1, got [{}, {}]",
                self.exp_clip_lo, self.exp_clip_hi
            )));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.noise_eps >= 0.0) || !(self.action_l2 >= 0.0) {
            return Err(Error::Config("noise_eps and action_l2 must be >= 0".into()));
        }
        if !(self.awr_temperature > 0.0) {
            return Err(Error::Config("awr_temperature must be > 0".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config(format!(
                "hidden widths must be positive, got {:?}",
                self.hidden
            )));
        }
        Ok(())
    }

    /// Relabeling probability the algorithm actually trains with.
    pub fn effective_relabel_prob(&self) -> f64 {
        match self.algo {
            Algo::Ddpg => 0.0,
            _ => self.relabel_prob,
        }
    }

    /// Set one field from its textual name, as used by config files and
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
        }
        match key {
            "algo" => self.algo = value.trim().parse()?,
            "gamma" => self.gamma = num(key, value)?,
            "polyak_retain" | "polyak" => self.polyak_retain = num(key, value)?,
            "lr_actor" => self.lr_actor = num(key, value)?,
            "lr_critic" => self.lr_critic = num(key, value)?,
            "lr" => {
                self.lr_actor = num(key, value)?;
                self.lr_critic = self.lr_actor;
            }
            "batch_size" | "batch" => self.batch_size = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "action_l2" => self.action_l2 = num(key, value)?,
            "random_eps" => self.random_eps = num(key, value)?,
            "noise_eps" => self.noise_eps = num(key, value)?,
            "relabel_prob" => self.relabel_prob = num(key, value)?,
            "exp_clip_lo" => self.exp_clip_lo = num(key, value)?,
            "exp_clip_hi" => self.exp_clip_hi = num(key, value)?,
            "adv_quantile" => self.adv_quantile = num(key, value)?,
            "eps_min" => self.eps_min = num(key, value)?,
            "awr_temperature" => self.awr_temperature = num(key, value)?,
            "clip_q_target" => self.clip_q_target = num(key, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .map(|w| num::<usize>(key, w))
                    .collect::<Result<Vec<_>>>()?;
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}
