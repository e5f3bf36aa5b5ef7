use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use evoq::envs::EnvId;
use evoq::harness::{self, Experiment, TestOptions, PRESETS};
use evoq::metrics::{stability_csv, sweep_csv};

#[derive(Parser)]
#[command(
    name = "evoq",
    version,
    about = "Evolve and analyse decision-tree policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured multi-run experiment
    Train(TrainArgs),
    /// Greedy evaluation of a saved tree
    Test(TestArgs),
    /// Prune a tree against validation episodes
    Simplify(SimplifyArgs),
    /// Print a tree, its DOT graph and its complexity
    Inspect(InspectArgs),
    /// Mann-Whitney U test between two result sets
    Compare(CompareArgs),
    /// Noise-robustness or stability curves as CSV
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config file
    #[arg(long, conflicts_with = "preset", required_unless_present_any = ["preset", "list_presets"])]
    config: Option<PathBuf>,
    /// Shipped config, e.g. cartpole_orthogonal
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    list_presets: bool,
    /// Base seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct EnvTree {
    /// Tree JSON file
    tree: PathBuf,
    /// CartPole-v1, MountainCar-v0 or LunarLander-v2
    #[arg(long)]
    env: EnvId,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: EnvTree,
    /// Standard deviation of Gaussian observation noise
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Also write the summary as JSON
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimplifyArgs {
    #[command(flatten)]
    common: EnvTree,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    tree: PathBuf,
    /// Write the DOT graph here instead of printing it
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// results.json, an output directory, or a JSON array of scores
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: EnvTree,
    /// Comma-separated noise levels
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "stability",
        required_unless_present = "stability"
    )]
    sigmas: Vec<f64>,
    /// Mean distance from the zero state per step instead of a noise sweep
    #[arg(long)]
    stability: bool,
    #[arg(long, default_value_t = 500)]
    horizon: usize,
    /// CSV destination; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn train(args: TrainArgs) -> Result<()> {
    if args.list_presets {
        for (name, _) in PRESETS {
            println!("{name}");
        }
        return Ok(());
    }
    let mut exp = match (&args.config, &args.preset) {
        (Some(path), _) => Experiment::load(path)?,
        (None, Some(name)) => Experiment::preset(name)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let c = &mut exp.config;
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(o) = args.output {
        c.output_dir = o;
    }
    if let Some(r) = args.runs {
        c.runs = r;
    }
    if args.workers.is_some() {
        c.workers = args.workers;
    }
    if args.max_steps.is_some() {
        c.max_steps = args.max_steps;
    }
    c.validate().map_err(anyhow::Error::msg)?;
    let results = harness::train(&exp)?;
    print!("{}", harness::summary_csv(&results.records));
    for f in &results.failures {
        eprintln!("run {} failed: {}", f.run + 1, f.error);
    }
    eprintln!("wrote {}", exp.config.output_dir.display());
    if results.records.is_empty() {
        bail!("every run failed");
    }
    Ok(())
}

fn test(args: TestArgs) -> Result<()> {
    let c = &args.common;
    let tree = harness::load_tree(&c.tree, Some(c.env))?;
    let opts = TestOptions {
        episodes: c.episodes,
        max_steps: c.max_steps,
        sigma: args.sigma,
        seed: c.seed,
    };
    if !(opts.sigma.is_finite() && opts.sigma >= 0.0) {
        bail!("--sigma must be finite and >= 0");
    }
    let s = harness::test_tree(&tree, c.env, &opts)?;
    println!(
        "{}: {} episodes, max_steps {}, sigma {}: mean {:.2} std {:.2}",
        s.environment, s.episodes, s.max_steps, s.sigma, s.mean, s.std
    );
    if let Some(out) = &args.output {
        write(out, &(serde_json::to_string_pretty(&s)? + "\n"))?;
    }
    Ok(())
}

fn simplify(args: SimplifyArgs) -> Result<()> {
    let c = &args.common;
    let tree = harness::load_tree(&c.tree, Some(c.env))?;
    let simple = harness::simplify_tree(&tree, c.env, c.episodes, c.max_steps, c.seed)?;
    write(&args.output, &(simple.to_json() + "\n"))?;
    print!("{}", simple.to_text());
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let tree = harness::load_tree(&args.tree, None)?;
    let i = harness::inspect(&tree);
    print!("{}", i.text);
    let r = i.report;
    println!(
        "l = {}, n_o = {}, n_nao = {}, n_naoc = {}, M = {:.2}",
        r.l, r.n_o, r.n_nao, r.n_naoc, r.m
    );
    match &args.dot {
        Some(path) => write(path, &i.dot)?,
        None => print!("{}", i.dot),
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let a = harness::load_scores(&args.a)?;
    let b = harness::load_scores(&args.b)?;
    let c = harness::compare(&a, &b)?;
    println!(
        "U = {}, p = {:.6} ({:?}); {} at alpha = {}",
        c.outcome.u,
        c.outcome.p_value,
        c.outcome.method,
        if c.significant {
            "significant"
        } else {
            "not significant"
        },
        c.alpha
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let c = &args.common;
    let tree = harness::load_tree(&c.tree, Some(c.env))?;
    let csv = if args.stability {
        stability_csv(&harness::sweep_stability(
            &tree,
            c.env,
            c.episodes,
            args.horizon,
            c.seed,
        )?)
    } else {
        sweep_csv(&harness::sweep_noise(
            &tree,
            c.env,
            &args.sigmas,
            c.episodes,
            c.max_steps,
            c.seed,
        )?)
    };
    match &args.output {
        Some(path) => write(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Test(a) => test(a),
        Command::Simplify(a) => simplify(a),
        Command::Inspect(a) => inspect(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
