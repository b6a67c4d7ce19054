use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use super::metrics::{write_csv, SweepRecord};
use super::train::train;
use super::RunConfig;
use crate::agents::Algo;
use crate::envs::RewardMode;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    RelabelRatio,
    Eta,
    Noise,
    RewardMode,
}

impl SweepKind {
    pub const ALL: [SweepKind; 4] = [
        SweepKind::RelabelRatio,
        SweepKind::Eta,
        SweepKind::Noise,
        SweepKind::RewardMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::RelabelRatio => "relabel_ratio",
            SweepKind::Eta => "eta",
            SweepKind::Noise => "noise",
            SweepKind::RewardMode => "reward_mode",
        }
    }

    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            SweepKind::RelabelRatio => &["0", "0.5", "0.8", "1"],
            SweepKind::Eta => &["0.1", "0.2", "1", "3"],
            SweepKind::Noise => &["0.2", "0.5", "1", "1.5"],
            SweepKind::RewardMode => &["sparse", "indicator"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Apply one sweep value to a base configuration.
    pub fn apply(self, cfg: &mut RunConfig, value: &str) -> Result<()> {
        match self {
            SweepKind::RelabelRatio => cfg.set("relabel_prob", value),
            SweepKind::Eta => cfg.set("eta", value),
            SweepKind::Noise => cfg.set("action_noise", value),
            SweepKind::RewardMode => {
                cfg.reward_mode = value.parse::<RewardMode>()?;
                Ok(())
            }
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown sweep kind {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<String>,
    pub algos: Vec<Algo>,
    pub base: RunConfig,
}

impl SweepConfig {
    pub fn new(kind: SweepKind, base: RunConfig) -> Self {
        Self {
            kind,
            values: kind.default_values(),
            algos: vec![base.algo()],
            base,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub path: Option<PathBuf>,
}

/// Sweep value x algorithm x seed; one combined metrics file with the sweep
/// cell in its leading columns.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    if cfg.values.is_empty() {
        return Err(Error::Config("sweep value set is empty".into()));
    }
    if cfg.algos.is_empty() {
        return Err(Error::Config("sweep needs at least one algorithm".into()));
    }
    let mut records = Vec::new();
    for value in &cfg.values {
        for &algo in &cfg.algos {
            let mut run = cfg.base.clone();
            run.out_dir = None;
            run.agent.algo = algo;
            cfg.kind.apply(&mut run, value)?;
            let out = train(&run)?;
            records.extend(
                out.records()
                    .iter()
                    .map(|r| SweepRecord::new(cfg.kind.name(), value, r)),
            );
        }
    }
    let mut path = None;
    if let Some(dir) = &cfg.base.out_dir {
        fs::create_dir_all(dir)?;
        let p = dir.join(format!("sweep_{}_{}.csv", cfg.kind.name(), cfg.base.env));
        write_csv(&p, &records)?;
        path = Some(p);
    }
    Ok(SweepOutput { records, path })
}
