//! Subcommand implementations behind the `sfcsim` binary. Each returns a
//! typed error that maps to an exit code: 2 for configuration and usage
//! problems, 1 for runtime failures and failed verification.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use sfcsim_core::policy::PolicyError;
use sfcsim_core::sim::{run_evaluation, run_training, write_metrics_csv, EvaluationSummary, SimError};
use sfcsim_core::verify::{run_suite, VerifyLevel};
use sfcsim_core::{AgentBundle, BundleKind, Mode};

use crate::scenario::{ResolvedScenario, Scenario, ScenarioError};

/// Environment variable consulted for the master seed when `--seed` is
/// absent. Only the seed can be overridden this way.
pub const SEED_ENV: &str = "SFCSIM_SEED";

/// Column order of `eval.csv`.
pub const EVAL_HEADER: &str =
    "bundle, seeds, mean_profit, std_profit, mean_acceptance, std_acceptance";

/// Column order of `sweep.csv`: one evaluation row per (axis value, bundle).
pub const SWEEP_HEADER: &str =
    "axis, value, bundle, seeds, mean_profit, std_profit, mean_acceptance, std_acceptance";

/// A failed subcommand, classified by exit code.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 2,
            CommandError::Run(_) | CommandError::Verify(_) => 1,
        }
    }
}

impl From<ScenarioError> for CommandError {
    fn from(e: ScenarioError) -> CommandError {
        CommandError::Usage(e.to_string())
    }
}

fn sim_err(e: SimError) -> CommandError {
    match e {
        SimError::Config(_) | SimError::Workload(_) => CommandError::Usage(e.to_string()),
        SimError::Policy(p) => policy_err(p),
        other => CommandError::Run(other.to_string()),
    }
}

fn policy_err(e: PolicyError) -> CommandError {
    match e {
        PolicyError::MissingCheckpoint { .. }
        | PolicyError::UnknownBundle(_)
        | PolicyError::UncoveredClass { .. }
        | PolicyError::Config(_) => CommandError::Usage(e.to_string()),
        other => CommandError::Run(other.to_string()),
    }
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> CommandError {
    CommandError::Run(format!("cannot {what} {}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "sfcsim",
    about = "Simulates and trains service chain placement on an edge network",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train learning agents; writes metrics.csv, checkpoints/, and a
    /// resolved scenario snapshot.
    Train(TrainArgs),
    /// Evaluate one bundle over independent seeds; writes eval.csv.
    Eval(EvalArgs),
    /// Evaluate along an axis (lambda) or train-and-evaluate per value
    /// (gamma); writes sweep.csv.
    Sweep(SweepArgs),
    /// Run the self-check oracle suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Scenario file; omitted means the built-in defaults.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed override; beats SFCSIM_SEED and the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bundle to train; it needs at least one learning role.
    #[arg(long, default_value = "RL+RL", value_parser = parse_bundle)]
    pub bundle: BundleKind,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Scenario file; omitted means the built-in defaults.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed override; beats SFCSIM_SEED and the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// One of RL+RL, RL+H, H+RL, H+H.
    #[arg(long, value_parser = parse_bundle)]
    pub bundle: BundleKind,
    /// Checkpoint directory; required for bundles with learning roles.
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Number of independent evaluation seeds.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Scenario file; omitted means the built-in defaults.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed override; beats SFCSIM_SEED and the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Swept parameter.
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Checkpoint directory evaluated at every lambda point.
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Number of independent evaluation seeds per cell.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
}

/// Swept parameter: request intensity or discount factor.
#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Axis {
    /// Arrival rate; evaluates H+H and RL+RL at each value.
    Lambda,
    /// Discount factor; trains and evaluates RL+RL at each value.
    Gamma,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// fast: small batteries, well under a minute. full: adds the large
    /// batteries and the placement-oracle bound.
    #[arg(long, default_value = "fast", value_parser = parse_level)]
    pub level: VerifyLevel,
}

fn parse_bundle(s: &str) -> Result<BundleKind, String> {
    s.parse::<BundleKind>().map_err(|e| e.to_string())
}

fn parse_level(s: &str) -> Result<VerifyLevel, String> {
    s.parse()
}

pub fn dispatch(cli: &Cli) -> Result<(), CommandError> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Seed precedence: flag, then environment, then whatever the scenario file
/// says. Returns the override to apply, if any.
pub fn resolve_seed(
    flag: Option<u64>,
    env: Result<String, std::env::VarError>,
) -> Result<Option<u64>, CommandError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match env {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CommandError::Usage(format!("{SEED_ENV}={text:?} is not a u64"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CommandError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<(Scenario, Option<PathBuf>), CommandError> {
    match path {
        Some(p) => {
            let scenario = Scenario::load(p)?;
            Ok((scenario, p.parent().map(Path::to_path_buf)))
        }
        None => Ok((Scenario::default(), None)),
    }
}

fn prepare(
    scenario_path: &Option<PathBuf>,
    seed_flag: Option<u64>,
    out: &Path,
) -> Result<ResolvedScenario, CommandError> {
    let (mut scenario, base) = load_scenario(scenario_path)?;
    if let Some(seed) = resolve_seed(seed_flag, std::env::var(SEED_ENV))? {
        scenario.sim.master_seed = seed;
    }
    let resolved = scenario.resolve(base.as_deref())?;
    fs::create_dir_all(out).map_err(|e| io_err("create", out, e))?;
    let snapshot_path = out.join("scenario.resolved.toml");
    fs::write(&snapshot_path, resolved.snapshot.to_toml_string()?)
        .map_err(|e| io_err("write", &snapshot_path, e))?;
    Ok(resolved)
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CommandError> {
    let resolved = prepare(&args.scenario, args.seed, &args.out)?;
    let episodes = resolved.cfg.params.episodes;

    let mut run = run_training(&resolved.graph, args.bundle, &resolved.cfg, |m| {
        if (m.episode + 1) % 50 == 0 || m.episode + 1 == episodes {
            eprintln!(
                "episode {}/{episodes}: profit {:.1}, acceptance {:.3}",
                m.episode + 1,
                m.total_profit,
                m.acceptance_ratio()
            );
        }
    })
    .map_err(sim_err)?;

    let metrics_path = args.out.join("metrics.csv");
    let mut csv = Vec::new();
    write_metrics_csv(&mut csv, &run.episodes).map_err(|e| io_err("format", &metrics_path, e))?;
    fs::write(&metrics_path, csv).map_err(|e| io_err("write", &metrics_path, e))?;

    let ckpt_dir = args.out.join("checkpoints");
    run.bundle
        .save_checkpoints(&ckpt_dir)
        .map_err(policy_err)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn evaluate_bundle(
    resolved: &ResolvedScenario,
    kind: BundleKind,
    checkpoints: Option<&Path>,
    seeds: usize,
) -> Result<EvaluationSummary, CommandError> {
    let mut bundle = AgentBundle::new(
        kind,
        Mode::Eval,
        &resolved.graph,
        resolved.cfg.bundle_config(),
        resolved.cfg.params.master_seed,
    )
    .map_err(policy_err)?;
    if kind.uses_rl() {
        let dir = checkpoints.ok_or_else(|| {
            CommandError::Usage(format!(
                "bundle {kind} has learning roles; pass --checkpoints"
            ))
        })?;
        bundle.load_checkpoints(dir).map_err(policy_err)?;
    }
    run_evaluation(&resolved.graph, &mut bundle, &resolved.cfg, seeds).map_err(sim_err)
}

fn eval_row(summary: &EvaluationSummary) -> String {
    format!(
        "{}, {}, {}, {}, {}, {}",
        summary.bundle,
        summary.seeds,
        summary.mean_profit,
        summary.std_profit,
        summary.mean_acceptance,
        summary.std_acceptance
    )
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CommandError> {
    let resolved = prepare(&args.scenario, args.seed, &args.out)?;
    let summary = evaluate_bundle(
        &resolved,
        args.bundle,
        args.checkpoints.as_deref(),
        args.seeds,
    )?;

    let mut text = String::new();
    let _ = writeln!(text, "{EVAL_HEADER}");
    let _ = writeln!(text, "{}", eval_row(&summary));
    let path = args.out.join("eval.csv");
    fs::write(&path, &text).map_err(|e| io_err("write", &path, e))?;
    print!("{text}");
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CommandError> {
    if args.values.is_empty() {
        return Err(CommandError::Usage(
            "--values needs at least one value".into(),
        ));
    }
    for value in &args.values {
        let ok = match args.axis {
            Axis::Lambda => value.is_finite() && *value > 0.0,
            Axis::Gamma => value.is_finite() && (0.0..=1.0).contains(value),
        };
        if !ok {
            return Err(CommandError::Usage(format!(
                "value {value} is out of range for axis {:?}",
                args.axis
            )));
        }
    }
    if args.axis == Axis::Lambda && args.checkpoints.is_none() {
        return Err(CommandError::Usage(
            "lambda sweeps evaluate RL+RL; pass --checkpoints".into(),
        ));
    }

    let resolved = prepare(&args.scenario, args.seed, &args.out)?;
    let mut rows = Vec::new();

    match args.axis {
        Axis::Lambda => {
            for &value in &args.values {
                for kind in [BundleKind::HH, BundleKind::RlRl] {
                    let mut cell = ResolvedScenario {
                        graph: resolved.graph.clone(),
                        cfg: resolved.cfg.clone(),
                        snapshot: resolved.snapshot.clone(),
                    };
                    cell.cfg.workload.arrival_rate = value;
                    eprintln!("lambda {value}, bundle {kind}");
                    let summary =
                        evaluate_bundle(&cell, kind, args.checkpoints.as_deref(), args.seeds)?;
                    rows.push(format!("lambda, {value}, {}", eval_row(&summary)));
                }
            }
        }
        Axis::Gamma => {
            for &value in &args.values {
                let mut cell = ResolvedScenario {
                    graph: resolved.graph.clone(),
                    cfg: resolved.cfg.clone(),
                    snapshot: resolved.snapshot.clone(),
                };
                cell.cfg.dqn.discount = value;
                let episodes = cell.cfg.params.episodes;
                eprintln!("gamma {value}: training {episodes} episodes");
                let mut run =
                    run_training(&cell.graph, BundleKind::RlRl, &cell.cfg, |m| {
                        if (m.episode + 1) % 100 == 0 {
                            eprintln!("gamma {value}: episode {}/{episodes}", m.episode + 1);
                        }
                    })
                    .map_err(sim_err)?;

                let cell_dir = args.out.join(format!("gamma_{value}"));
                let ckpt_dir = cell_dir.join("checkpoints");
                run.bundle.save_checkpoints(&ckpt_dir).map_err(policy_err)?;
                let metrics_path = cell_dir.join("metrics.csv");
                let mut csv = Vec::new();
                write_metrics_csv(&mut csv, &run.episodes)
                    .map_err(|e| io_err("format", &metrics_path, e))?;
                fs::write(&metrics_path, csv).map_err(|e| io_err("write", &metrics_path, e))?;

                let summary =
                    evaluate_bundle(&cell, BundleKind::RlRl, Some(&ckpt_dir), args.seeds)?;
                rows.push(format!("gamma, {value}, {}", eval_row(&summary)));
            }
        }
    }

    let mut text = String::new();
    let _ = writeln!(text, "{SWEEP_HEADER}");
    for row in &rows {
        let _ = writeln!(text, "{row}");
    }
    let path = args.out.join("sweep.csv");
    fs::write(&path, &text).map_err(|e| io_err("write", &path, e))?;
    print!("{text}");
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CommandError> {
    let results = run_suite(args.level);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut failed = 0;
    for result in &results {
        let status = if result.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:width$}  {}", result.name, result.detail);
        if !result.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CommandError::Verify(failed));
    }
    println!("all {} checks passed", results.len());
    Ok(())
}
