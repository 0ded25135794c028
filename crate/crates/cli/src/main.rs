//! `cmgp` — train, evaluate and compare runs, render policy arrow plots,
//! and print evolved programs.
//!
//! Exit codes: 0 on success, 1 on runtime failures (unreadable artifacts,
//! invalid config values), 2 on usage errors (clap's default for unknown
//! flags or missing required ones).

mod arrows;
mod compare;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cmgp_core::agent::{
    artifacts, evaluate_policy, program_action, run, Arm, EvalArtifact, ProgramsArtifact,
    RunConfig,
};
use cmgp_core::agent::policy::actor_action;
use cmgp_core::envs::{Environment, SimpleGoal};
use cmgp_core::neural::{DiffNet, NetCheckpoint};
use cmgp_core::program::{render_listing, simplify, to_expression, uniform_domain, Expr};

#[derive(Parser)]
#[command(name = "cmgp", version, about = "Programs as policies, steered by twin critics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training arm and write its artifacts.
    Train(TrainArgs),
    /// Re-evaluate a saved policy over fresh deterministic episodes.
    Eval(EvalArgs),
    /// Sample a program policy on a grid and plot it as arrows.
    PlotArrows(PlotArrowsArgs),
    /// Print the raw program listing from a programs artifact.
    ShowProgram(ShowProgramArgs),
    /// Print the constant-propagated program listing over a state domain.
    Simplify(SimplifyArgs),
    /// Aggregate learning curves from several run directories.
    Compare(CompareArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Training arm; overrides the config file.
    #[arg(long)]
    arm: Option<Arm>,
    /// Total environment steps; overrides the config file.
    #[arg(long)]
    steps: Option<u64>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat JSON config file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["run", "programs"]))]
struct EvalArgs {
    /// Run directory; uses its programs.json, or actor.json for neural runs.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Explicit programs artifact, instead of a run directory.
    #[arg(long)]
    programs: Option<PathBuf>,
    /// Number of evaluation episodes.
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    /// Seed for evaluation start states.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArrowsArgs {
    /// Programs artifact to sample.
    #[arg(long)]
    program: PathBuf,
    /// Grid resolution (grid x grid samples over the unit box).
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Seed for the stochastic program decode.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file; `.svg` renders markup, `.csv` writes rows.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShowProgramArgs {
    /// Programs artifact to print.
    #[arg(long)]
    program: PathBuf,
}

#[derive(Args)]
struct SimplifyArgs {
    /// Programs artifact to simplify.
    #[arg(long)]
    program: PathBuf,
    /// State-variable interval the simplification may assume.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 1.0])]
    domain: Vec<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories to aggregate (one or more).
    #[arg(long, num_args = 1.., required = true)]
    runs: Vec<PathBuf>,
    /// Bin width in environment steps for curve alignment.
    #[arg(long, default_value_t = 500)]
    bin: u64,
    /// Destination CSV.
    #[arg(long, default_value = "curves.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::PlotArrows(args) => cmd_plot_arrows(args),
        Command::ShowProgram(args) => cmd_show_program(args),
        Command::Simplify(args) => cmd_simplify(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => artifacts::read_json::<RunConfig>(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(arm) = args.arm {
        cfg.arm = arm;
    }
    if let Some(steps) = args.steps {
        cfg.total_steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let outcome = run(&cfg, Some(&args.out))?;
    println!(
        "arm={} seed={} env_steps={} critic_updates={} policy_updates={} episodes={} \
         eval_mean={:.4} eval_stderr={:.4} -> {}",
        outcome.arm,
        outcome.seed,
        outcome.env_steps,
        outcome.critic_updates,
        outcome.policy_updates,
        outcome.episode_returns.len(),
        outcome.eval_mean,
        outcome.eval_stderr,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let programs_path = args.programs.clone().or_else(|| {
        args.run
            .as_ref()
            .map(|d| d.join("programs.json"))
            .filter(|p| p.exists())
    });

    let mut env = SimpleGoal::<f64>::new(args.seed);
    let (low, high) = env.action_bounds();
    let report = if let Some(path) = programs_path {
        let artifact: ProgramsArtifact = artifacts::read_json(&path)
            .with_context(|| format!("reading programs {}", path.display()))?;
        let genomes = artifact.to_genomes::<f64>();
        evaluate_policy(
            &mut env,
            |s: &[f64], r: &mut _| program_action(&genomes, s, low, high, r),
            args.episodes,
            args.seed,
        )
    } else {
        let dir = args.run.as_ref().expect("clap group guarantees a source");
        let path = dir.join("actor.json");
        let checkpoint: NetCheckpoint = artifacts::read_json(&path)
            .with_context(|| format!("reading actor {}", path.display()))?;
        let actor = DiffNet::<f64>::from_checkpoint(&checkpoint)
            .context("loading actor checkpoint")?;
        evaluate_policy(
            &mut env,
            |s: &[f64], _r: &mut _| actor_action(&actor, s, low, high),
            args.episodes,
            args.seed,
        )
    };

    println!(
        "episodes={} mean={:.4} stderr={:.4}",
        report.returns.len(),
        report.mean,
        report.stderr
    );
    if let Some(out) = &args.out {
        artifacts::write_json(
            out,
            &EvalArtifact {
                episodes: report.returns.len(),
                mean: report.mean,
                stderr: report.stderr,
                returns: report.returns.clone(),
            },
        )?;
    }
    Ok(())
}

fn cmd_plot_arrows(args: PlotArrowsArgs) -> Result<()> {
    if args.grid == 0 {
        bail!("--grid must be at least 1");
    }
    let artifact: ProgramsArtifact = artifacts::read_json(&args.program)
        .with_context(|| format!("reading programs {}", args.program.display()))?;
    let rows = arrows::grid_arrows(&artifact, args.grid, args.seed)?;

    let ext = args
        .out
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("svg") => artifacts::write_atomic(&args.out, arrows::to_svg(&rows).as_bytes())?,
        Some("csv") => artifacts::write_csv(
            &args.out,
            "x,y,dx,dy",
            rows.iter()
                .map(|a| format!("{},{},{},{}", a.x, a.y, a.dx, a.dy)),
        )?,
        _ => bail!("--out must end in .svg or .csv: {}", args.out.display()),
    }
    println!("{} arrows -> {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_show_program(args: ShowProgramArgs) -> Result<()> {
    let (exprs, _) = load_expressions(&args.program)?;
    println!("{}", render_listing(&exprs));
    Ok(())
}

fn cmd_simplify(args: SimplifyArgs) -> Result<()> {
    let (lo, hi) = (args.domain[0], args.domain[1]);
    if lo.is_nan() || hi.is_nan() || lo > hi {
        bail!("--domain expects LO <= HI, got {lo} {hi}");
    }
    let (exprs, state_dim) = load_expressions(&args.program)?;
    let domain = uniform_domain(state_dim, lo, hi);
    let simplified: Vec<Option<Expr<f64>>> = exprs
        .iter()
        .map(|e| e.as_ref().map(|x| simplify(x, &domain)))
        .collect();
    println!("{}", render_listing(&simplified));
    Ok(())
}

fn load_expressions(path: &Path) -> Result<(Vec<Option<Expr<f64>>>, usize)> {
    let artifact: ProgramsArtifact = artifacts::read_json(path)
        .with_context(|| format!("reading programs {}", path.display()))?;
    let exprs = artifact
        .to_genomes::<f64>()
        .iter()
        .map(|g| to_expression(g, artifact.state_dim))
        .collect();
    Ok((exprs, artifact.state_dim))
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    if args.bin == 0 {
        bail!("--bin must be at least 1");
    }
    let runs = args
        .runs
        .iter()
        .map(|dir| compare::load_run(dir))
        .collect::<Result<Vec<_>>>()?;
    let arms: std::collections::BTreeSet<&str> =
        runs.iter().map(|r| r.arm.as_str()).collect();
    if arms.len() > 1 {
        eprintln!(
            "warning: comparing runs from different arms: {}",
            arms.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    let curve = compare::aligned_curves(&runs, args.bin);
    artifacts::write_csv(
        &args.out,
        "step,mean,stderr,arm",
        curve
            .iter()
            .map(|(step, mean, stderr, arm)| format!("{step},{mean},{stderr},{arm}")),
    )?;
    println!("{} curve points -> {}", curve.len(), args.out.display());
    Ok(())
}
