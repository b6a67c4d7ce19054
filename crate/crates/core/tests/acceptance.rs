//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to the
//! process stdout (bypassing the test harness capture) and then asserts.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use qwsl_core::agents::{AgentConfig, Algo, TargetStats};
use qwsl_core::harness::{
    gradient_check, oracle_check, ordering_check, relabel_check, train, train_offline_stitch, train_seed, CheckOutcome,
    StitchConfig, StitchRow,
};
use qwsl_core::{RewardMode, RunConfig};

const SEEDS: [u64; 5] = [100, 200, 300, 400, 500];

// stitching separation
const STITCH_EPISODES: usize = 100;
const STITCH_UPDATES: usize = 2000;
const STITCH_MIN_CROSS: f64 = 0.9;
const STITCH_MIN_GAP: f64 = 0.3;
const STITCH_MAX_SECS_PER_SEED: f64 = 120.0;
/// Behaviour noise of the informational coverage run; not part of the verdict.
const STITCH_COVERAGE_EPS: f64 = 0.3;

// point-reach learning and its ablations
const REACH_EPOCHS: usize = 20;
const REACH_MIN_SUCCESS: f64 = 0.95;
const REACH_MAX_SECS: f64 = 15.0 * 60.0;
const ETA_VALUES: [f64; 4] = [0.1, 0.2, 1.0, 3.0];
const ETA_MAX_SPREAD: f64 = 0.1;
const REWARD_MAX_GAP: f64 = 0.1;

// checks
const ORDERING_BATCHES: usize = 1000;
const GRADIENT_NETS: usize = 100;
const RELABEL_DRAWS: usize = 100_000;
const CLIP_LO: f64 = -50.0;
const CLIP_HI: f64 = 0.0;
const EQUIVALENCE_CYCLES: usize = 3;

fn verdict(id: u32, name: &str, passed: bool, detail: &str) -> bool {
    let line = format!("{} [{id:02}] {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    passed
}

fn info(id: u32, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "INFO [{id:02}] {detail}").unwrap();
}

fn check_verdict(id: u32, outcome: &CheckOutcome) -> bool {
    verdict(id, &outcome.name, outcome.passed, &outcome.summary)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Desk-scale loop: 2-layer 64-unit nets, 50 cycles of 2 episodes and 20 updates per epoch.
fn reach_config(eta: f64, mode: RewardMode) -> RunConfig {
    RunConfig {
        env: "point-reach".into(),
        reward_mode: mode,
        seeds: SEEDS.to_vec(),
        epochs: REACH_EPOCHS,
        cycles_per_epoch: 50,
        episodes_per_cycle: 2,
        batches_per_cycle: 20,
        eval_rollouts: 100,
        agent: AgentConfig {
            algo: Algo::Qwsl,
            hidden: vec![64, 64],
            eta,
            ..AgentConfig::default()
        },
        ..RunConfig::default()
    }
}

struct ReachResult {
    finals: Vec<f64>,
    targets: Vec<TargetStats>,
    elapsed: Duration,
}

type ReachCache = Mutex<HashMap<(u64, RewardMode), Arc<OnceLock<ReachResult>>>>;

/// Q-WSL point-reach runs, shared between criteria that need the same configuration.
fn reach(eta: f64, mode: RewardMode) -> Arc<OnceLock<ReachResult>> {
    static CACHE: OnceLock<ReachCache> = OnceLock::new();
    let cell = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry((eta.to_bits(), mode))
        .or_default()
        .clone();
    cell.get_or_init(|| {
        let start = Instant::now();
        let out = train(&reach_config(eta, mode)).unwrap();
        ReachResult {
            finals: out
                .runs
                .iter()
                .map(|r| r.records.last().unwrap().success_rate)
                .collect(),
            targets: out.runs.iter().map(|r| r.target_stats.clone()).collect(),
            elapsed: start.elapsed(),
        }
    });
    cell
}

fn stitch_config(behavior_eps: f64) -> StitchConfig {
    StitchConfig {
        env: "grid-stitch".into(),
        algos: vec![Algo::Qwsl, Algo::DdpgHer, Algo::Gcsl],
        seeds: SEEDS.to_vec(),
        episodes: STITCH_EPISODES,
        updates: STITCH_UPDATES,
        agent: AgentConfig {
            hidden: vec![64, 64],
            batch_size: 128,
            ..AgentConfig::default()
        },
        behavior_eps,
        ..StitchConfig::default()
    }
}

fn cross(rows: &[StitchRow], algo: &str) -> f64 {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.algo == algo)
        .map(|r| r.report.cross_success)
        .collect();
    mean(&xs)
}

#[test]
fn c01_stitching_separation() {
    let start = Instant::now();
    let rows = train_offline_stitch(&stitch_config(0.0)).unwrap();
    let per_seed = start.elapsed().as_secs_f64() / SEEDS.len() as f64;
    let (q, d, g) = (cross(&rows, "qwsl"), cross(&rows, "ddpg-her"), cross(&rows, "gcsl"));
    let passed = q >= STITCH_MIN_CROSS
        && d >= STITCH_MIN_CROSS
        && q - g >= STITCH_MIN_GAP
        && per_seed < STITCH_MAX_SECS_PER_SEED;

    let noisy = train_offline_stitch(&stitch_config(STITCH_COVERAGE_EPS)).unwrap();
    info(
        1,
        &format!(
            "behaviour noise {STITCH_COVERAGE_EPS}: cross qwsl {:.3} ddpg-her {:.3} gcsl {:.3}",
            cross(&noisy, "qwsl"),
            cross(&noisy, "ddpg-her"),
            cross(&noisy, "gcsl")
        ),
    );
    assert!(verdict(
        1,
        "stitching separation",
        passed,
        &format!(
            "cross qwsl {q:.3} ddpg-her {d:.3} (need >= {STITCH_MIN_CROSS}), gcsl {g:.3}, qwsl-gcsl {:.3} (need >= {STITCH_MIN_GAP}), {per_seed:.1} s/seed",
            q - g
        )
    ));
}

#[test]
fn c02_tabular_oracle_equivalence() {
    assert!(check_verdict(2, &oracle_check(0).unwrap()));
}

#[test]
fn c03_objective_ordering() {
    assert!(check_verdict(3, &ordering_check(ORDERING_BATCHES, 0).unwrap()));
}

#[test]
fn c04_gradient_fidelity() {
    assert!(check_verdict(4, &gradient_check(GRADIENT_NETS, 0).unwrap()));
}

#[test]
fn c05_point_reach_learning() {
    let r = reach(0.1, RewardMode::SparseNeg);
    let r = r.get().unwrap();
    let m = mean(&r.finals);
    let secs = r.elapsed.as_secs_f64();
    assert!(verdict(
        5,
        "point-reach learning",
        m >= REACH_MIN_SUCCESS && secs < REACH_MAX_SECS,
        &format!(
            "mean final success {m:.3} after {REACH_EPOCHS} epochs (need >= {REACH_MIN_SUCCESS}), per seed {:?}, {secs:.0} s (limit {REACH_MAX_SECS:.0} s)",
            r.finals
        )
    ));
}

#[test]
fn c06_eta_insensitivity() {
    let means: Vec<f64> = ETA_VALUES
        .iter()
        .map(|&eta| mean(&reach(eta, RewardMode::SparseNeg).get().unwrap().finals))
        .collect();
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
    assert!(verdict(
        6,
        "eta insensitivity",
        spread <= ETA_MAX_SPREAD,
        &format!("mean final success {means:?} for eta {ETA_VALUES:?}, spread {spread:.3} (limit {ETA_MAX_SPREAD})")
    ));
}

#[test]
fn c07_relabel_mechanics() {
    assert!(check_verdict(7, &relabel_check(RELABEL_DRAWS, 0).unwrap()));
}

#[test]
fn c08_q_target_clip() {
    let r = reach(0.1, RewardMode::SparseNeg);
    let stats = &r.get().unwrap().targets;
    let count: u64 = stats.iter().map(|s| s.count).sum();
    let violations: u64 = stats.iter().map(|s| s.violations).sum();
    let clipped: u64 = stats.iter().map(|s| s.clipped).sum();
    let lo = stats.iter().map(|s| s.emitted_min).fold(f64::MAX, f64::min);
    let hi = stats.iter().map(|s| s.emitted_max).fold(f64::MIN, f64::max);
    assert!(verdict(
        8,
        "q-target clip",
        count > 0 && violations == 0 && lo >= CLIP_LO && hi <= CLIP_HI,
        &format!("{count} targets in [{lo:.4}, {hi:.4}] (bounds [{CLIP_LO}, {CLIP_HI}]), {clipped} clipped, {violations} violations")
    ));
}

#[test]
fn c09_reward_form_robustness() {
    let sparse = mean(&reach(0.1, RewardMode::SparseNeg).get().unwrap().finals);
    let indicator = mean(&reach(0.1, RewardMode::Indicator).get().unwrap().finals);
    let gap = (sparse - indicator).abs();
    assert!(verdict(
        9,
        "reward-form robustness",
        gap <= REWARD_MAX_GAP,
        &format!(
            "mean final success sparse {sparse:.3} indicator {indicator:.3}, gap {gap:.3} (limit {REWARD_MAX_GAP})"
        )
    ));
}

#[test]
fn c10_determinism() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut bodies = Vec::new();
    for d in &dirs {
        let mut cfg = reach_config(0.1, RewardMode::SparseNeg);
        cfg.seeds = vec![SEEDS[0]];
        cfg.epochs = 2;
        cfg.cycles_per_epoch = 5;
        cfg.out_dir = Some(d.path().to_path_buf());
        let out = train(&cfg).unwrap();
        bodies.push(fs::read(out.metrics_path.unwrap()).unwrap());
    }
    assert!(verdict(
        10,
        "determinism",
        bodies[0] == bodies[1] && !bodies[0].is_empty(),
        &format!(
            "metrics CSVs of {} and {} bytes, identical: {}",
            bodies[0].len(),
            bodies[1].len(),
            bodies[0] == bodies[1]
        )
    ));
}

#[test]
fn c11_ddpg_her_without_relabeling_is_ddpg() {
    let trajectory = |algo: Algo, relabel_prob: f64| {
        let mut cfg = reach_config(0.1, RewardMode::SparseNeg);
        cfg.epochs = 1;
        cfg.cycles_per_epoch = EQUIVALENCE_CYCLES;
        cfg.eval_rollouts = 2;
        cfg.agent.algo = algo;
        cfg.agent.relabel_prob = relabel_prob;
        let mut params = Vec::new();
        train_seed(&cfg, SEEDS[0], &mut |_, _, agent| {
            params.push((agent.actor.params().to_vec(), agent.critic.params().to_vec()));
        })
        .unwrap();
        params
    };
    let ddpg = trajectory(Algo::Ddpg, 0.8);
    let her = trajectory(Algo::DdpgHer, 0.0);
    let same = ddpg.len() == EQUIVALENCE_CYCLES && ddpg == her;
    let moved = ddpg.windows(2).all(|w| w[0] != w[1]);
    assert!(verdict(
        11,
        "ddpg-her without relabeling equals ddpg",
        same && moved,
        &format!(
            "{} cycles compared, parameters identical: {same}, parameters change every cycle: {moved}",
            ddpg.len()
        )
    ));
}
