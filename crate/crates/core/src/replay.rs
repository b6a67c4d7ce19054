//! Episodic replay with "future" hindsight relabeling.
//!
//! Each sample picks a stored transition uniformly, then with probability
//! `relabel_prob` swaps its goal for an achieved goal `i` steps into the
//! future of the same episode (`i` uniform in `t+1..=T`). The offset `i - t`
//! travels with the sample so the learner can discount the imitation weight.

use std::collections::{BTreeMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::RewardSpec;
use crate::error::{Error, Result};
use crate::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub achieved: Vec<Vec<f64>>,
    pub desired: Vec<f64>,
    pub env_id: String,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelabeledSample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    pub goal: Vec<f64>,
    pub reward: f64,
    /// `i - t` for relabeled goals, 0 otherwise.
    pub offset: usize,
    pub relabeled: bool,
}

/// Which task the buffer holds and how rewards are recomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    pub capacity: usize,
    pub reward: RewardSpec,
    pub threshold: f64,
    /// Achieved goals are the leading `goal_dim` coordinates of the state.
    pub goal_dim: usize,
}

#[derive(Clone, Debug)]
pub struct EpisodeBuffer {
    config: ReplayConfig,
    episodes: VecDeque<Episode>,
    /// Cumulative transition counts, `cumulative[k]` = transitions before episode k.
    cumulative: Vec<usize>,
    transitions: usize,
    inserted: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelabelStats {
    pub fraction: f64,
    pub offsets: BTreeMap<usize, usize>,
    pub draws: usize,
}

impl EpisodeBuffer {
    pub fn new(config: ReplayConfig) -> Self {
        Self {
            config,
            episodes: VecDeque::new(),
            cumulative: Vec::new(),
            transitions: 0,
            inserted: 0,
        }
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn set_reward(&mut self, reward: RewardSpec) {
        self.config.reward = reward;
    }

    /// Stored transitions.
    pub fn len(&self) -> usize {
        self.transitions
    }

    pub fn is_empty(&self) -> bool {
        self.transitions == 0
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    fn validate(&self, ep: &Episode) -> Result<()> {
        let t = ep.actions.len();
        if t == 0 {
            return Err(Error::Episode("episode has no transitions".into()));
        }
        if ep.states.len() != t + 1 || ep.achieved.len() != t + 1 {
            return Err(Error::Episode(format!(
                "{} actions need {} states and achieved goals, got {} and {}",
                t,
                t + 1,
                ep.states.len(),
                ep.achieved.len()
            )));
        }
        if t > self.config.capacity {
            return Err(Error::Episode(format!("episode of {t} transitions exceeds capacity")));
        }
        let gd = self.config.goal_dim;
        if ep.desired.len() != gd {
            return Err(Error::Episode(format!(
                "desired goal has {} dims, expected {gd}",
                ep.desired.len()
            )));
        }
        for (k, (s, g)) in ep.states.iter().zip(&ep.achieved).enumerate() {
            if s.len() < gd || s[..gd] != g[..] {
                return Err(Error::Episode(format!("achieved[{k}] != phi(states[{k}])")));
            }
        }
        Ok(())
    }

    pub fn store_episode(&mut self, ep: Episode) -> Result<()> {
        self.validate(&ep)?;
        self.transitions += ep.len();
        self.episodes.push_back(ep);
        self.inserted += 1;
        while self.transitions > self.config.capacity {
            let old = self.episodes.pop_front().expect("over capacity implies non-empty");
            self.transitions -= old.len();
        }
        self.cumulative.clear();
        let mut acc = 0;
        for ep in &self.episodes {
            self.cumulative.push(acc);
            acc += ep.len();
        }
        Ok(())
    }

    fn locate(&self, global: usize) -> (usize, usize) {
        let k = self.cumulative.partition_point(|&c| c <= global) - 1;
        (k, global - self.cumulative[k])
    }

    fn draw(&self, relabel_prob: f64, rng: &mut SimRng) -> RelabeledSample {
        let (k, t) = self.locate(rng.random_range(0..self.transitions));
        let ep = &self.episodes[k];
        let horizon = ep.len();
        let relabeled = relabel_prob > 0.0 && rng.random_bool(relabel_prob.min(1.0));
        let (goal, offset) = if relabeled {
            let i = rng.random_range(t + 1..=horizon);
            (ep.achieved[i].clone(), i - t)
        } else {
            (ep.desired.clone(), 0)
        };
        let source = &ep.achieved[self.config.reward.reward_index(t)];
        let reward = self.config.reward.reward(source, &goal, self.config.threshold);
        RelabeledSample {
            state: ep.states[t].clone(),
            action: ep.actions[t].clone(),
            next_state: ep.states[t + 1].clone(),
            goal,
            reward,
            offset,
            relabeled,
        }
    }

    pub fn sample_batch(&self, n: usize, relabel_prob: f64, rng: &mut SimRng) -> Result<Vec<RelabeledSample>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if !(0.0..=1.0).contains(&relabel_prob) {
            return Err(Error::Config(format!(
                "relabel_prob must be in [0, 1], got {relabel_prob}"
            )));
        }
        Ok((0..n).map(|_| self.draw(relabel_prob, rng)).collect())
    }

    pub fn relabel_stats(&self, n_draws: usize, relabel_prob: f64, rng: &mut SimRng) -> Result<RelabelStats> {
        let samples = self.sample_batch(n_draws, relabel_prob, rng)?;
        let mut offsets = BTreeMap::new();
        let mut relabeled = 0;
        for s in &samples {
            if s.relabeled {
                relabeled += 1;
                *offsets.entry(s.offset).or_insert(0) += 1;
            }
        }
        Ok(RelabelStats {
            fraction: relabeled as f64 / n_draws.max(1) as f64,
            offsets,
            draws: n_draws,
        })
    }

    /// One JSON episode per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for ep in &self.episodes {
            serde_json::to_writer(&mut w, ep)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path, config: ReplayConfig) -> Result<Self> {
        let mut buf = Self::new(config);
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            buf.store_episode(serde_json::from_str(&line)?)?;
        }
        Ok(buf)
    }
}
