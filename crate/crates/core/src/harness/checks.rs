use rand::SeedableRng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::agents::{Agent, AgentConfig};
use crate::analysis::{
    check_gradients, check_objective_ordering, q_learning, value_iteration, QLearningConfig, WeightFloor,
};
use crate::envs::{make_env, EnvOptions, GridStitch, RewardMode};
use crate::error::Result;
use crate::harness::train::{collect_episode, replay_config};
use crate::replay::EpisodeBuffer;
use crate::SimRng;

/// Largest accepted relative error between analytic and finite-difference gradients.
pub const GRADIENT_TOL: f64 = 1e-4;
/// Largest accepted sup-norm gap between learned and exact tabular values.
pub const ORACLE_TOL: f64 = 1e-3;
/// Target hindsight fraction and its accepted deviation.
pub const RELABEL_TARGET: f64 = 0.8;
pub const RELABEL_TOL: f64 = 0.01;

/// Verdict of one executable check, with machine-readable details.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub detail: Value,
}

impl CheckOutcome {
    /// `PASS name: summary` or `FAIL name: summary`.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.summary
        )
    }
}

/// Analytic against central-difference gradients on `n_nets` random nets.
pub fn gradient_check(n_nets: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = SimRng::seed_from_u64(seed);
    let report = check_gradients(n_nets, &mut rng)?;
    Ok(CheckOutcome {
        name: "gradients".into(),
        passed: report.max_rel_error < GRADIENT_TOL,
        summary: format!(
            "max relative error {:.3e} over {} nets ({} components), tolerance {GRADIENT_TOL:e}",
            report.max_rel_error, report.nets, report.components
        ),
        detail: serde_json::to_value(&report)?,
    })
}

/// Objective ordering `J_QWSL >= J_WGCSL >= J_GCSL` on random batches whose
/// weights satisfy the premise `w >= gamma^offset`.
pub fn ordering_check(n_batches: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = SimRng::seed_from_u64(seed);
    let cfg = AgentConfig::default();
    let report = check_objective_ordering(n_batches, &cfg, WeightFloor::Enforced, &mut rng)?;
    Ok(CheckOutcome {
        name: "theorem51".into(),
        passed: report.violations == 0,
        summary: format!(
            "{} violations in {} batches (qwsl<wgcsl {}, wgcsl<gcsl {}, worst wgcsl-gcsl {:.3e})",
            report.violations, report.batches, report.qwsl_below_wgcsl, report.wgcsl_below_gcsl, report.worst_wgcsl_gap
        ),
        detail: serde_json::to_value(&report)?,
    })
}

/// Tabular Q-learning on `grid-stitch` against value iteration: sup-norm
/// gap and greedy-action agreement on every (state, goal) pair.
pub fn oracle_check(seed: u64) -> Result<CheckOutcome> {
    let env = GridStitch::new();
    let cfg = QLearningConfig::default();
    let exact = value_iteration(&env, cfg.gamma, RewardMode::SparseNeg)?;
    let mut rng = SimRng::seed_from_u64(seed);
    let learned = q_learning(&env, &cfg, &mut rng)?;
    let sup = learned.sup_distance(&exact);
    let mut mismatches = Vec::new();
    let n = exact.num_states;
    for s in 0..n {
        for g in 0..n {
            let a = learned.greedy(s, g);
            if !exact.optimal_actions(s, g, 1e-9).contains(&a) {
                mismatches.push(json!({ "state": s, "goal": g, "action": a }));
            }
        }
    }
    Ok(CheckOutcome {
        name: "oracle".into(),
        passed: sup <= ORACLE_TOL && mismatches.is_empty(),
        summary: format!(
            "sup-norm {sup:.3e} (tolerance {ORACLE_TOL:e}), {} greedy mismatches over {} pairs",
            mismatches.len(),
            n * n
        ),
        detail: json!({ "sup_norm": sup, "mismatches": mismatches, "pairs": n * n }),
    })
}

/// Hindsight fraction and offsets over `draws` samples from a `point-reach`
/// buffer of exploratory episodes.
pub fn relabel_check(draws: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut env = make_env("point-reach", &EnvOptions::default())?;
    let agent = Agent::new(AgentConfig::default(), env.spec(), RewardMode::SparseNeg, &mut rng)?;
    let mut buffer = EpisodeBuffer::new(replay_config(env.as_ref(), usize::MAX));
    for _ in 0..20 {
        buffer.store_episode(collect_episode(env.as_mut(), &agent, true, &mut rng)?)?;
    }
    let stats = buffer.relabel_stats(draws, RELABEL_TARGET, &mut rng)?;
    let min_offset = stats.offsets.keys().next().copied();
    let offsets_ok = min_offset.is_some_and(|m| m >= 1);
    Ok(CheckOutcome {
        name: "relabel".into(),
        passed: (stats.fraction - RELABEL_TARGET).abs() <= RELABEL_TOL && offsets_ok,
        summary: format!(
            "fraction {:.4} over {} draws (target {RELABEL_TARGET} +/- {RELABEL_TOL}), min relabeled offset {}",
            stats.fraction,
            stats.draws,
            min_offset.map_or("none".to_string(), |m| m.to_string())
        ),
        detail: json!({ "fraction": stats.fraction, "draws": stats.draws, "min_offset": min_offset }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_checks_run() {
        assert!(gradient_check(3, 1).unwrap().passed);
        let r = relabel_check(20_000, 2).unwrap();
        assert!(r.detail["min_offset"].as_u64().unwrap() >= 1);
        assert!(r.line().starts_with("PASS relabel") || r.line().starts_with("FAIL relabel"));
    }

    #[test]
    fn ordering_check_reports_counts() {
        let r = ordering_check(10, 3).unwrap();
        assert_eq!(r.detail["batches"], 10);
        assert_eq!(r.passed, r.detail["violations"] == 0);
    }
}
