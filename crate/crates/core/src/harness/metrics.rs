use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation row per (epoch, seed). Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub seed: u64,
    pub algo: String,
    pub env: String,
    pub success_rate: f64,
    pub mean_actor_loss: f64,
    pub mean_critic_loss: Option<f64>,
    pub mean_q: Option<f64>,
    pub mean_weight: Option<f64>,
    pub relabel_fraction: f64,
    pub wall_time: f64,
}

/// A metrics row tagged with the sweep cell that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep_kind: String,
    pub sweep_value: String,
    pub epoch: usize,
    pub seed: u64,
    pub algo: String,
    pub env: String,
    pub success_rate: f64,
    pub mean_actor_loss: f64,
    pub mean_critic_loss: Option<f64>,
    pub mean_q: Option<f64>,
    pub mean_weight: Option<f64>,
    pub relabel_fraction: f64,
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn new(kind: &str, value: &str, r: &MetricsRecord) -> Self {
        Self {
            sweep_kind: kind.to_string(),
            sweep_value: value.to_string(),
            epoch: r.epoch,
            seed: r.seed,
            algo: r.algo.clone(),
            env: r.env.clone(),
            success_rate: r.success_rate,
            mean_actor_loss: r.mean_actor_loss,
            mean_critic_loss: r.mean_critic_loss,
            mean_q: r.mean_q,
            mean_weight: r.mean_weight,
            relabel_fraction: r.relabel_fraction,
            wall_time: r.wall_time,
        }
    }
}

/// Serialize rows as CSV with a header row.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Metrics(e.to_string()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let bytes = to_csv(rows)?;
    let mut f = File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Row of either metrics layout, as read back by [`report`].
#[derive(Clone, Debug, PartialEq, Deserialize)]
struct AnyRecord {
    #[serde(default)]
    sweep_kind: Option<String>,
    #[serde(default)]
    sweep_value: Option<String>,
    epoch: usize,
    seed: u64,
    algo: String,
    env: String,
    success_rate: f64,
}

fn read_records(reader: impl Read, label: &str) -> Result<Vec<AnyRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: AnyRecord = row.map_err(|e| Error::Metrics(format!("{label} row {}: {e}", i + 1)))?;
        if !(0.0..=1.0).contains(&row.success_rate) {
            return Err(Error::Metrics(format!(
                "{label} row {}: success_rate out of [0, 1]",
                i + 1
            )));
        }
        out.push(row);
    }
    Ok(out)
}

/// Final-epoch success over seeds for one (env, algo, sweep cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub env: String,
    pub algo: String,
    pub sweep_kind: String,
    pub sweep_value: String,
    pub seeds: usize,
    pub final_epoch: usize,
    pub mean_success: f64,
    pub std_success: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Summarize metrics CSV contents: for each group, the success of every
/// seed's last recorded epoch.
pub fn summarize(sources: &[(String, Vec<u8>)]) -> Result<Vec<SummaryRow>> {
    if sources.is_empty() {
        return Err(Error::Metrics("no metrics files given".into()));
    }
    type Key = (String, String, String, String);
    let mut last: BTreeMap<Key, BTreeMap<u64, (usize, f64)>> = BTreeMap::new();
    for (label, bytes) in sources {
        for r in read_records(&bytes[..], label)? {
            let key = (
                r.env,
                r.algo,
                r.sweep_kind.unwrap_or_default(),
                r.sweep_value.unwrap_or_default(),
            );
            let seeds = last.entry(key).or_default();
            let slot = seeds.entry(r.seed).or_insert((r.epoch, r.success_rate));
            if r.epoch >= slot.0 {
                *slot = (r.epoch, r.success_rate);
            }
        }
    }
    Ok(last
        .into_iter()
        .map(|((env, algo, sweep_kind, sweep_value), seeds)| {
            let rates: Vec<f64> = seeds.values().map(|v| v.1).collect();
            let final_epoch = seeds.values().map(|v| v.0).max().unwrap_or(0);
            let (mean, std) = mean_and_std(&rates);
            SummaryRow {
                env,
                algo,
                sweep_kind,
                sweep_value,
                seeds: rates.len(),
                final_epoch,
                mean_success: mean,
                std_success: std,
            }
        })
        .collect())
}

pub fn report(paths: &[&Path]) -> Result<Vec<SummaryRow>> {
    let mut sources = Vec::new();
    for p in paths {
        sources.push((p.display().to_string(), std::fs::read(p)?));
    }
    summarize(&sources)
}

/// Fixed-width table with success rendered as percentages.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<12} {:<9} {:<14} {:<8} {:>5} {:>18}\n",
        "env", "algo", "sweep", "value", "seeds", "success (%)"
    );
    for r in rows {
        let sweep = if r.sweep_kind.is_empty() { "-" } else { &r.sweep_kind };
        let value = if r.sweep_value.is_empty() { "-" } else { &r.sweep_value };
        let cell = format!("{:.1} ± {:.1}", 100.0 * r.mean_success, 100.0 * r.std_success);
        out.push_str(&format!(
            "{:<12} {:<9} {:<14} {:<8} {:>5} {:>18}\n",
            r.env, r.algo, sweep, value, r.seeds, cell
        ));
    }
    out
}
