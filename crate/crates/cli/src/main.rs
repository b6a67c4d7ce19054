use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qwsl_core::harness::{
    gradient_check, oracle_check, ordering_check, parse_seed_list, relabel_check, render_summary, report, sweep, train,
    train_offline_stitch, write_stitch_csv, CheckOutcome, StitchConfig, SweepConfig, SweepKind,
};
use qwsl_core::{Algo, RewardMode, RunConfig};

#[derive(Parser)]
#[command(
    name = "qwsl",
    version,
    about = "Goal-conditioned RL laboratory: train, stitch, sweep, check, report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Online training; writes a metrics CSV and one checkpoint per seed.
    Train(TrainArgs),
    /// Offline training on a scripted same-side dataset, then the stitching probe.
    Stitch(StitchArgs),
    /// Ablation sweep over one configuration axis.
    Sweep(SweepArgs),
    /// Executable correctness checks; exits non-zero on failure.
    Check(CheckArgs),
    /// Mean and standard deviation of final success per group of metrics files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Options shared by every command that builds a run configuration.
/// Precedence: defaults, then `--config`, then explicit flags, then `--set`.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated seeds, e.g. `100,200,300`.
    #[arg(long)]
    seed_list: Option<String>,
    /// Flat `key = value` file with run and agent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    action_noise: Option<f64>,
    #[arg(long)]
    reward_mode: Option<RewardMode>,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Extra `key=value` overrides, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn build(&self, algo: Option<Algo>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)
                .with_context(|| format!("reading {}", path.display()))?;
        }
        if let Some(env) = &self.env {
            cfg.env = env.clone();
        }
        if let Some(algo) = algo {
            cfg.agent.algo = algo;
        }
        if let Some(seeds) = &self.seed_list {
            cfg.seeds = parse_seed_list(seeds)?;
        }
        if let Some(noise) = self.action_noise {
            cfg.action_noise = noise;
        }
        if let Some(mode) = self.reward_mode {
            cfg.reward_mode = mode;
        }
        cfg.out_dir = Some(self.out_dir.clone());
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "qwsl")]
    algo: Algo,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct StitchArgs {
    /// Comma-separated algorithms.
    #[arg(long, default_value = "qwsl,ddpg-her,gcsl")]
    algos: String,
    /// Scripted episodes in the frozen buffer.
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Gradient updates per algorithm and seed.
    #[arg(long, default_value_t = 2000)]
    updates: usize,
    /// Random-action probability of the scripted behaviour.
    #[arg(long, default_value_t = 0.0)]
    behavior_eps: f64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    kind: SweepKind,
    /// Comma-separated values; defaults to the kind's standard grid.
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated algorithms; defaults to the configured one.
    #[arg(long)]
    algos: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Gradients,
    Theorem51,
    Oracle,
    Relabel,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    kind: CheckKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Nets, batches or draws; defaults to 100, 1000 and 100000.
    #[arg(long)]
    n: Option<usize>,
}

fn parse_algos(list: &str) -> Result<Vec<Algo>> {
    let algos = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Algo>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if algos.is_empty() {
        bail!("empty algorithm list");
    }
    Ok(algos)
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.run.build(Some(args.algo))?;
    let out = train(&cfg)?;
    for run in &out.runs {
        let last = run.records.last().map_or(0.0, |r| r.success_rate);
        println!("seed {} final success {:.3}", run.seed, last);
    }
    println!("mean final success {:.3}", out.final_success());
    if let Some(p) = &out.metrics_path {
        println!("metrics {}", p.display());
    }
    Ok(())
}

fn run_stitch(args: &StitchArgs) -> Result<()> {
    let base = args.run.build(None)?;
    if !matches!(base.env.as_str(), "grid-stitch" | "point-ymaze") {
        bail!("stitch runs on grid-stitch or point-ymaze, got {:?}", base.env);
    }
    let cfg = StitchConfig {
        env: base.env.clone(),
        algos: parse_algos(&args.algos)?,
        seeds: base.seeds.clone(),
        episodes: args.episodes,
        updates: args.updates,
        batches_per_cycle: base.batches_per_cycle,
        agent: base.agent.clone(),
        reward_mode: base.reward_mode,
        behavior_eps: args.behavior_eps,
        ..StitchConfig::default()
    };
    let rows = train_offline_stitch(&cfg)?;
    for r in &rows {
        println!(
            "{:<9} seed {:<6} seen {:.3} cross {:.3}",
            r.algo, r.seed, r.report.seen_success, r.report.cross_success
        );
    }
    std::fs::create_dir_all(&args.run.out_dir)?;
    let path = args.run.out_dir.join(format!("stitch_{}.csv", cfg.env));
    write_stitch_csv(&path, &rows)?;
    println!("results {}", path.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let base = args.run.build(None)?;
    let mut cfg = SweepConfig::new(args.kind, base);
    if let Some(values) = &args.values {
        cfg.values = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
    }
    if let Some(algos) = &args.algos {
        cfg.algos = parse_algos(algos)?;
    }
    let out = sweep(&cfg)?;
    if let Some(p) = &out.path {
        println!("{}", render_summary(&report(&[p.as_path()])?));
        println!("metrics {}", p.display());
    }
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<CheckOutcome> {
    Ok(match args.kind {
        CheckKind::Gradients => gradient_check(args.n.unwrap_or(100), args.seed)?,
        CheckKind::Theorem51 => ordering_check(args.n.unwrap_or(1000), args.seed)?,
        CheckKind::Oracle => oracle_check(args.seed)?,
        CheckKind::Relabel => relabel_check(args.n.unwrap_or(100_000), args.seed)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => run_train(a).map(|_| true),
        Command::Stitch(a) => run_stitch(a).map(|_| true),
        Command::Sweep(a) => run_sweep(a).map(|_| true),
        Command::Check(a) => run_check(a).and_then(|outcome| {
            println!("{}", outcome.line());
            println!("{}", serde_json::to_string(&outcome)?);
            Ok(outcome.passed)
        }),
        Command::Report { files } => {
            let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            report(&paths)
                .map(|rows| {
                    print!("{}", render_summary(&rows));
                    true
                })
                .map_err(anyhow::Error::from)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
