//! Episode runner: advances slot time, expires departures, feeds arrivals
//! to the agent bundle, and accumulates per-episode metrics. Training and
//! evaluation drive it over derived workload seeds so runs are reproducible
//! from one master seed.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encoding::EncodingConfig;
use crate::feasibility::ConstraintConfig;
use crate::learn::DqnConfig;
use crate::network::{LedgerEvent, NetworkError, NetworkGraph, ResourceLedger};
use crate::policy::{
    AgentBundle, BundleConfig, BundleKind, Decision, Mode, PolicyError, RejectReason,
    PATTERN_CLASS_MAX, PATTERN_CLASS_MIN,
};
use crate::seeds::{derive_seed, STREAM_EVAL, STREAM_WORKLOAD};
use crate::workload::{generate_stream, SfcRequest, WorkloadConfig, WorkloadError};

/// Errors from episode execution or run configuration.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("simulation invariant violated: {0}")]
    InvariantViolated(String),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Scalar run parameters; the `[sim]` section of a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub episodes: u32,
    /// Cycles one core processes per second.
    pub cycles_per_second: f64,
    /// Availability of a single VNF instance.
    pub vnf_availability: f64,
    /// Extra-core budget as a multiple of a request's base cores.
    pub budget_factor: u32,
    /// Rewards are divided by this before entering replay memory.
    pub reward_scale: f64,
    /// Candidate paths offered per request.
    pub k_paths: usize,
    pub master_seed: u64,
}

impl Default for SimParams {
    fn default() -> SimParams {
        SimParams {
            episodes: 700,
            cycles_per_second: 1e9,
            vnf_availability: 0.99,
            budget_factor: 2,
            reward_scale: 1000.0,
            k_paths: 8,
            master_seed: 0,
        }
    }
}

/// Everything one run needs beyond the topology.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimConfig {
    pub params: SimParams,
    pub workload: WorkloadConfig,
    pub dqn: DqnConfig,
    pub encoding: EncodingConfig,
}

impl SimConfig {
    pub fn constraints(&self) -> ConstraintConfig {
        ConstraintConfig {
            vnf_availability: self.params.vnf_availability,
            cycles_per_second: self.params.cycles_per_second,
            budget_factor: self.params.budget_factor,
        }
    }

    pub fn bundle_config(&self) -> BundleConfig {
        BundleConfig {
            enc: self.encoding.clone(),
            constraints: self.constraints(),
            dqn: self.dqn.clone(),
            k_paths: self.params.k_paths,
            reward_scale: self.params.reward_scale,
        }
    }

    /// Checks the whole config, including constraints that only bind when a
    /// learning role must encode or serve every request.
    pub fn validate_for(&self, kind: BundleKind) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.params.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        if !(self.params.cycles_per_second.is_finite() && self.params.cycles_per_second > 0.0) {
            return bad("cycles_per_second must be positive".into());
        }
        if !(0.0 < self.params.vnf_availability && self.params.vnf_availability < 1.0) {
            return bad(format!(
                "vnf_availability {} must lie strictly between 0 and 1",
                self.params.vnf_availability
            ));
        }
        if !(self.params.reward_scale.is_finite() && self.params.reward_scale > 0.0) {
            return bad("reward_scale must be positive".into());
        }
        if self.params.k_paths == 0 {
            return bad("k_paths must be positive".into());
        }
        self.workload.validate()?;
        self.dqn.validate().map_err(PolicyError::from)?;
        if kind.uses_rl() && self.workload.vnf_count_max > self.encoding.v_max {
            return bad(format!(
                "vnf_count_max {} exceeds the observation's v_max {}",
                self.workload.vnf_count_max, self.encoding.v_max
            ));
        }
        if kind.pattern_is_rl()
            && (self.workload.vnf_count_min < PATTERN_CLASS_MIN
                || self.workload.vnf_count_max > PATTERN_CLASS_MAX)
        {
            return bad(format!(
                "pattern agents cover chains of {PATTERN_CLASS_MIN}..={PATTERN_CLASS_MAX} VNFs, \
                 but the workload draws {}..={}",
                self.workload.vnf_count_min, self.workload.vnf_count_max
            ));
        }
        Ok(())
    }
}

/// Counters and traces for one episode.
#[derive(Clone, Debug, Default)]
pub struct EpisodeMetrics {
    pub episode: u32,
    pub seed: u64,
    pub offered: usize,
    pub accepted: usize,
    pub rejected_policy: usize,
    pub rejected_config: usize,
    pub rejected_pattern: usize,
    pub rejected_nopath: usize,
    pub total_profit: f64,
    pub path_losses: Vec<f64>,
    pub pattern_losses: Vec<f64>,
    pub runtime: Duration,
}

impl EpisodeMetrics {
    pub fn rejected(&self) -> usize {
        self.rejected_policy + self.rejected_config + self.rejected_pattern + self.rejected_nopath
    }

    pub fn acceptance_ratio(&self) -> f64 {
        if self.offered == 0 {
            0.0
        } else {
            self.accepted as f64 / self.offered as f64
        }
    }

    pub fn mean_loss_path(&self) -> f64 {
        mean_or_zero(&self.path_losses)
    }

    pub fn mean_loss_pattern(&self) -> f64 {
        mean_or_zero(&self.pattern_losses)
    }
}

fn mean_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// One request's verdict, kept for replay-style audits.
#[derive(Clone, Debug)]
pub struct DecisionRecord {
    pub request: SfcRequest,
    pub decision: Decision,
    pub reward: f64,
}

/// Everything one episode produced: metrics, the per-request decision log,
/// and the ledger's reservation event log.
#[derive(Debug)]
pub struct EpisodeTrace {
    pub metrics: EpisodeMetrics,
    pub decisions: Vec<DecisionRecord>,
    pub events: Vec<LedgerEvent>,
}

/// Runs one episode and returns its metrics.
pub fn run_episode(
    graph: &NetworkGraph,
    bundle: &mut AgentBundle,
    cfg: &SimConfig,
    seed: u64,
) -> Result<EpisodeMetrics, SimError> {
    run_episode_traced(graph, bundle, cfg, seed).map(|trace| trace.metrics)
}

/// Runs one episode and additionally returns the decision and event logs.
///
/// The workload stream is generated from `seed`; slot by slot, expired
/// reservations are released before that slot's arrivals are decided. After
/// the horizon the ledger drains to empty and the full reservation log is
/// audited against installed capacity.
pub fn run_episode_traced(
    graph: &NetworkGraph,
    bundle: &mut AgentBundle,
    cfg: &SimConfig,
    seed: u64,
) -> Result<EpisodeTrace, SimError> {
    let start = Instant::now();
    let mut workload = cfg.workload.clone();
    workload.seed = seed;
    let stream = generate_stream(&workload, graph)?;

    let mut ledger = ResourceLedger::new(graph);
    let mut metrics = EpisodeMetrics {
        seed,
        offered: stream.len(),
        ..EpisodeMetrics::default()
    };
    let mut log = Vec::with_capacity(stream.len());

    let mut next = 0;
    for slot in 0..workload.horizon {
        ledger.advance_to(slot)?;
        while next < stream.len() && stream[next].arrival == slot {
            let request = &stream[next];
            let outcome = bundle.decide(graph, &mut ledger, request)?;
            match &outcome.decision {
                Decision::Accept(_) => {
                    metrics.accepted += 1;
                    metrics.total_profit += outcome.reward;
                }
                Decision::Reject(RejectReason::PolicyReject) => metrics.rejected_policy += 1,
                Decision::Reject(RejectReason::ConfigInfeasible) => metrics.rejected_config += 1,
                Decision::Reject(RejectReason::PatternInfeasible) => metrics.rejected_pattern += 1,
                Decision::Reject(RejectReason::NoCandidatePath) => metrics.rejected_nopath += 1,
            }
            log.push(DecisionRecord {
                request: request.clone(),
                decision: outcome.decision,
                reward: outcome.reward,
            });
            next += 1;
        }
    }

    bundle.end_episode();
    ledger.drain()?;
    if !ledger.is_pristine() {
        return Err(SimError::InvariantViolated(
            "ledger not fully restored after drain".into(),
        ));
    }
    crate::verify::audit_reservation_log(graph, ledger.events())
        .map_err(SimError::InvariantViolated)?;

    let (path_losses, pattern_losses) = bundle.drain_losses();
    metrics.path_losses = path_losses;
    metrics.pattern_losses = pattern_losses;
    metrics.runtime = start.elapsed();
    Ok(EpisodeTrace {
        metrics,
        decisions: log,
        events: ledger.events().to_vec(),
    })
}

/// A finished training run: the trained bundle and one metrics row per
/// episode.
pub struct TrainingRun {
    pub bundle: AgentBundle,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Trains a bundle with at least one learning role for `episodes` episodes.
/// Episode e draws its workload from a seed derived from the master seed,
/// so the arrival sequence is independent of the bundle's decisions.
/// `on_episode` observes each row as it completes.
pub fn run_training(
    graph: &NetworkGraph,
    kind: BundleKind,
    cfg: &SimConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<TrainingRun, SimError> {
    if !kind.uses_rl() {
        return Err(SimError::Config(format!(
            "bundle {kind} has no learning role to train"
        )));
    }
    cfg.validate_for(kind)?;
    let mut bundle = AgentBundle::new(
        kind,
        Mode::Train,
        graph,
        cfg.bundle_config(),
        cfg.params.master_seed,
    )?;
    let workload_root = derive_seed(cfg.params.master_seed, STREAM_WORKLOAD);

    let mut episodes = Vec::with_capacity(cfg.params.episodes as usize);
    for ep in 0..cfg.params.episodes {
        bundle.set_episode(ep);
        let seed = derive_seed(workload_root, ep as u64);
        let mut metrics = run_episode(graph, &mut bundle, cfg, seed)?;
        metrics.episode = ep;
        on_episode(&metrics);
        episodes.push(metrics);
    }
    Ok(TrainingRun { bundle, episodes })
}

/// Aggregate results of evaluating one bundle over independent seeds.
#[derive(Clone, Debug)]
pub struct EvaluationSummary {
    pub bundle: BundleKind,
    pub seeds: usize,
    pub mean_profit: f64,
    pub std_profit: f64,
    pub mean_acceptance: f64,
    pub std_acceptance: f64,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Evaluates an eval-mode bundle over `n_seeds` derived workload seeds, one
/// episode each, and aggregates profit and acceptance ratio.
pub fn run_evaluation(
    graph: &NetworkGraph,
    bundle: &mut AgentBundle,
    cfg: &SimConfig,
    n_seeds: usize,
) -> Result<EvaluationSummary, SimError> {
    if bundle.mode() != Mode::Eval {
        return Err(SimError::Config(
            "evaluation requires a bundle in eval mode".into(),
        ));
    }
    if n_seeds == 0 {
        return Err(SimError::Config("n_seeds must be positive".into()));
    }
    cfg.validate_for(bundle.kind())?;
    let eval_root = derive_seed(cfg.params.master_seed, STREAM_EVAL);

    let mut episodes = Vec::with_capacity(n_seeds);
    for i in 0..n_seeds {
        let seed = derive_seed(eval_root, i as u64);
        let mut metrics = run_episode(graph, bundle, cfg, seed)?;
        metrics.episode = i as u32;
        episodes.push(metrics);
    }

    let profits: Vec<f64> = episodes.iter().map(|m| m.total_profit).collect();
    let ratios: Vec<f64> = episodes.iter().map(|m| m.acceptance_ratio()).collect();
    Ok(EvaluationSummary {
        bundle: bundle.kind(),
        seeds: n_seeds,
        mean_profit: mean_or_zero(&profits),
        std_profit: sample_std(&profits),
        mean_acceptance: mean_or_zero(&ratios),
        std_acceptance: sample_std(&ratios),
        episodes,
    })
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two
/// values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = mean_or_zero(values);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    var.sqrt()
}

/// Column order of the per-episode metrics CSV. Stable: downstream tooling
/// parses it by name.
pub const METRICS_HEADER: &str = "episode, seed, offered, accepted, rejected_policy, rejected_config, rejected_pattern, rejected_nopath, acceptance_ratio, total_profit, mean_loss_path, mean_loss_pattern";

/// Writes metrics rows under [`METRICS_HEADER`]. Output is a pure function
/// of the rows: floats use Rust's shortest round-trip formatting.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[EpisodeMetrics]) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in rows {
        writeln!(
            out,
            "{}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}",
            m.episode,
            m.seed,
            m.offered,
            m.accepted,
            m.rejected_policy,
            m.rejected_config,
            m.rejected_pattern,
            m.rejected_nopath,
            m.acceptance_ratio(),
            m.total_profit,
            m.mean_loss_path(),
            m.mean_loss_pattern(),
        )?;
    }
    Ok(())
}
