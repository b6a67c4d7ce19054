//! Goal-conditioned reinforcement-learning laboratory.
//!
//! Joint Q-learning and advantage-weighted supervised learning (Q-WSL) next to
//! its baselines (DDPG, DDPG+HER, GCSL, WGCSL), small goal-reaching tasks
//! built to expose trajectory stitching, and executable checks of the
//! accompanying theory.
//!
//! * [`approximator`]: dense networks, Adam, running normalizers.
//! * [`envs`]: `grid-stitch`, `point-reach`, `point-ymaze` and wrappers.
//! * [`replay`]: episodic buffer with future-goal hindsight relabeling.
//! * [`agents`]: the actor-critic learner and its five actor objectives.
//! * [`analysis`]: tabular oracle, stitching probe, objective-ordering check.
//! * [`harness`]: training loop, scripted datasets, sweeps, metrics, reports.

// `!(x > 0.0)` is deliberate: it also rejects NaN. Index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agents;
pub mod analysis;
pub mod approximator;
pub mod envs;
mod error;
pub mod harness;
pub mod replay;

pub use agents::{Agent, AgentConfig, Algo};
pub use approximator::{AdamState, DenseNet, Head, Normalizer};
pub use envs::{make_env, EnvOptions, GoalEnv, Observation, RewardMode, RewardSpec};
pub use error::{Error, Result};
pub use harness::{MetricsRecord, RunConfig};
pub use replay::{Episode, EpisodeBuffer, RelabeledSample};

/// The one RNG type used everywhere; seeded runs are bit-reproducible.
pub type SimRng = rand_chacha::ChaCha8Rng;
