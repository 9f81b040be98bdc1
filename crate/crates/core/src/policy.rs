//! The per-request decision cascade: a path agent admits the request and
//! picks a candidate path, the core-configuration heuristic grants extra
//! cores, and a pattern agent distributes the chain over the path. Path and
//! pattern roles can each be a learning agent or a greedy heuristic.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::encoding::{encode_path, encode_state, pattern_observation, EncodingConfig, EncodingError, ObservationLayout};
use crate::feasibility::{check_feasible, compute_reward, configure_vnfs, ConstraintConfig, Deployment, VnfAllocation};
use crate::learn::{CheckpointError, DqnAgent, DqnConfig, LearnError};
use crate::network::{candidate_paths, CandidatePath, NetworkGraph, NetworkError, ResourceLedger};
use crate::patterns::{enumerate_patterns, pattern_to_placement, Pattern, PatternError};
use crate::seeds::{derive_seed, STREAM_AGENT};
use crate::workload::SfcRequest;

/// Smallest and largest chain length and path size covered by dedicated
/// pattern agents.
pub const PATTERN_CLASS_MIN: usize = 2;
pub const PATTERN_CLASS_MAX: usize = 4;

/// Errors raised by bundle construction, checkpointing, or internal misuse.
/// Request rejections are data, not errors.
#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("no checkpoint for agent {agent} at {path}")]
    MissingCheckpoint { agent: String, path: PathBuf },
    #[error("no pattern agent covers m={m}, n={n}")]
    UncoveredClass { m: usize, n: usize },
    #[error("unknown bundle name {0:?}; expected RL+RL, RL+H, H+RL, or H+H")]
    UnknownBundle(String),
    #[error("invalid bundle config: {0}")]
    Config(String),
}

/// Whether agents explore and store transitions, or act greedily.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Train,
    Eval,
}

/// Which roles are learning agents and which are heuristics.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BundleKind {
    RlRl,
    RlH,
    HRl,
    HH,
}

impl BundleKind {
    pub const ALL: [BundleKind; 4] = [BundleKind::RlRl, BundleKind::RlH, BundleKind::HRl, BundleKind::HH];

    pub fn path_is_rl(self) -> bool {
        matches!(self, BundleKind::RlRl | BundleKind::RlH)
    }

    pub fn pattern_is_rl(self) -> bool {
        matches!(self, BundleKind::RlRl | BundleKind::HRl)
    }

    pub fn uses_rl(self) -> bool {
        self.path_is_rl() || self.pattern_is_rl()
    }
}

impl fmt::Display for BundleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BundleKind::RlRl => "RL+RL",
            BundleKind::RlH => "RL+H",
            BundleKind::HRl => "H+RL",
            BundleKind::HH => "H+H",
        })
    }
}

impl FromStr for BundleKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<BundleKind, PolicyError> {
        match s {
            "RL+RL" => Ok(BundleKind::RlRl),
            "RL+H" => Ok(BundleKind::RlH),
            "H+RL" => Ok(BundleKind::HRl),
            "H+H" => Ok(BundleKind::HH),
            other => Err(PolicyError::UnknownBundle(other.to_string())),
        }
    }
}

/// Stable identity of one agent, used for checkpoint filenames and logs.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum AgentId {
    Path,
    Pattern { m: usize, n: usize },
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Path => f.write_str("path"),
            AgentId::Pattern { m, n } => write!(f, "pattern_m{m}_n{n}"),
        }
    }
}

/// Why a request was not admitted.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RejectReason {
    /// No candidate path exists between the endpoints.
    NoCandidatePath,
    /// The path agent chose the reject action.
    PolicyReject,
    /// No core grant satisfies the reliability and delay bounds in budget.
    ConfigInfeasible,
    /// The concrete placement violates a constraint at decision time.
    PatternInfeasible,
}

/// The verdict for one request.
#[derive(Clone, Debug)]
pub enum Decision {
    Accept(Deployment),
    Reject(RejectReason),
}

/// Record of one stored learning step: which agent acted, what it chose,
/// and the (scaled) reward it was credited. Emitted only by learning roles
/// in training mode, mirroring what enters replay memory.
#[derive(Clone, PartialEq, Debug)]
pub struct EmittedTransition {
    pub agent: AgentId,
    pub action: usize,
    pub reward: f64,
}

/// Everything `decide` produced for one request. `reward` is the unscaled
/// profit (zero for every rejection).
#[derive(Clone, Debug)]
pub struct PlacementOutcome {
    pub decision: Decision,
    pub reward: f64,
    pub transitions: Vec<EmittedTransition>,
}

impl PlacementOutcome {
    fn reject(reason: RejectReason, transitions: Vec<EmittedTransition>) -> PlacementOutcome {
        PlacementOutcome {
            decision: Decision::Reject(reason),
            reward: 0.0,
            transitions,
        }
    }

    pub fn accepted(&self) -> bool {
        matches!(self.decision, Decision::Accept(_))
    }
}

/// Static configuration shared by every agent in a bundle.
#[derive(Clone, Debug)]
pub struct BundleConfig {
    pub enc: EncodingConfig,
    pub constraints: ConstraintConfig,
    pub dqn: DqnConfig,
    /// Candidate paths offered to the path agent (its action space is this
    /// plus the reject action).
    pub k_paths: usize,
    /// Rewards are divided by this before entering replay memory.
    pub reward_scale: f64,
}

impl Default for BundleConfig {
    fn default() -> BundleConfig {
        BundleConfig {
            enc: EncodingConfig::default(),
            constraints: ConstraintConfig::default(),
            dqn: DqnConfig::default(),
            k_paths: 8,
            reward_scale: 1000.0,
        }
    }
}

/// The agents serving one simulation run.
///
/// Learning roles hold one DQN per decision class: a single path agent and
/// one pattern agent per (path size m, chain length n) pair. Heuristic
/// roles hold no state. Agent seeds derive from the master seed, so a
/// bundle is reproducible independently of the workload stream.
pub struct AgentBundle {
    kind: BundleKind,
    mode: Mode,
    cfg: BundleConfig,
    layout: ObservationLayout,
    path_agent: Option<DqnAgent>,
    pattern_agents: BTreeMap<(usize, usize), DqnAgent>,
    patterns: BTreeMap<(usize, usize), Vec<Pattern>>,
    decisions_seen: u64,
}

impl AgentBundle {
    pub fn new(
        kind: BundleKind,
        mode: Mode,
        graph: &NetworkGraph,
        cfg: BundleConfig,
        master_seed: u64,
    ) -> Result<AgentBundle, PolicyError> {
        if cfg.k_paths == 0 {
            return Err(PolicyError::Config("k_paths must be positive".into()));
        }
        if !(cfg.reward_scale.is_finite() && cfg.reward_scale > 0.0) {
            return Err(PolicyError::Config(format!(
                "reward_scale {} must be positive",
                cfg.reward_scale
            )));
        }
        let layout = ObservationLayout::for_graph(graph, cfg.enc.v_max);
        let agent_root = derive_seed(master_seed, STREAM_AGENT);

        let mut patterns = BTreeMap::new();
        for m in PATTERN_CLASS_MIN..=PATTERN_CLASS_MAX {
            for n in PATTERN_CLASS_MIN..=PATTERN_CLASS_MAX {
                patterns.insert((m, n), enumerate_patterns(n, m)?);
            }
        }

        let path_agent = if kind.path_is_rl() {
            Some(DqnAgent::new(
                &AgentId::Path.to_string(),
                layout.total(),
                1 + cfg.k_paths,
                layout.fingerprint(),
                &format!("path:k={}", cfg.k_paths),
                cfg.dqn.clone(),
                derive_seed(agent_root, 0),
            )?)
        } else {
            None
        };

        let mut pattern_agents = BTreeMap::new();
        if kind.pattern_is_rl() {
            for (&(m, n), table) in &patterns {
                let index = ((m - PATTERN_CLASS_MIN) * 3 + (n - PATTERN_CLASS_MIN) + 1) as u64;
                let agent = DqnAgent::new(
                    &AgentId::Pattern { m, n }.to_string(),
                    layout.pattern_total(),
                    table.len(),
                    layout.fingerprint(),
                    &format!("pattern:m={m},n={n},actions={}", table.len()),
                    cfg.dqn.clone(),
                    derive_seed(agent_root, index),
                )?;
                pattern_agents.insert((m, n), agent);
            }
        }

        Ok(AgentBundle {
            kind,
            mode,
            cfg,
            layout,
            path_agent,
            pattern_agents,
            patterns,
            decisions_seen: 0,
        })
    }

    pub fn kind(&self) -> BundleKind {
        self.kind
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn layout(&self) -> ObservationLayout {
        self.layout
    }

    /// Runs the cascade for one arrival and, on acceptance, reserves its
    /// resources. The request must arrive at the ledger's current slot.
    /// In training mode every learning agent takes one gradient step per
    /// `update_period` decisions, counted across episodes.
    pub fn decide(
        &mut self,
        graph: &NetworkGraph,
        ledger: &mut ResourceLedger,
        request: &SfcRequest,
    ) -> Result<PlacementOutcome, PolicyError> {
        let outcome = self.decide_inner(graph, ledger, request)?;
        if self.mode == Mode::Train {
            self.decisions_seen += 1;
            if self.decisions_seen % self.cfg.dqn.update_period as u64 == 0 {
                self.learn_tick();
            }
        }
        Ok(outcome)
    }

    fn decide_inner(
        &mut self,
        graph: &NetworkGraph,
        ledger: &mut ResourceLedger,
        request: &SfcRequest,
    ) -> Result<PlacementOutcome, PolicyError> {
        let train = self.mode == Mode::Train;
        let candidates = match candidate_paths(graph, request.src, request.dst, self.cfg.k_paths) {
            Ok(c) => c,
            Err(NetworkError::NoPath { .. }) => {
                return Ok(PlacementOutcome::reject(RejectReason::NoCandidatePath, Vec::new()))
            }
            Err(e) => return Err(e.into()),
        };

        let mut transitions = Vec::new();
        let path_action = match &mut self.path_agent {
            Some(agent) => {
                let obs = encode_state(graph, ledger, request, None, &self.cfg.enc)?;
                agent.act(&obs.values, 1 + candidates.len(), train)?
            }
            None => heuristic_path(&candidates, ledger, request),
        };
        if path_action == 0 {
            self.settle_path(path_action, 0.0, &mut transitions);
            return Ok(PlacementOutcome::reject(RejectReason::PolicyReject, transitions));
        }
        let path = &candidates[path_action - 1];

        let Some(allocations) = configure_vnfs(request, path, &self.cfg.constraints) else {
            self.settle_path(path_action, 0.0, &mut transitions);
            return Ok(PlacementOutcome::reject(RejectReason::ConfigInfeasible, transitions));
        };

        let m = path.compute_len();
        let n = request.vnf_count();
        let (pattern, pattern_action) = if self.kind.pattern_is_rl() {
            let table = self
                .patterns
                .get(&(m, n))
                .ok_or(PolicyError::UncoveredClass { m, n })?;
            let base = encode_state(graph, ledger, request, Some(&allocations), &self.cfg.enc)?;
            let values = pattern_observation(&base, &encode_path(graph, path));
            let agent = self
                .pattern_agents
                .get_mut(&(m, n))
                .ok_or(PolicyError::UncoveredClass { m, n })?;
            let action = agent.act(&values, table.len(), train)?;
            (table[action].clone(), Some(action))
        } else {
            match heuristic_pattern(path, &allocations, ledger) {
                Some(p) => (p, None),
                None => {
                    self.settle_path(path_action, 0.0, &mut transitions);
                    return Ok(PlacementOutcome::reject(RejectReason::PatternInfeasible, transitions));
                }
            }
        };

        let placement = pattern_to_placement(&pattern, path, request)?;
        let deployment = Deployment {
            path: path.clone(),
            pattern,
            placement,
            allocations,
        };
        let report = check_feasible(ledger, request, &deployment, &self.cfg.constraints);
        if !report.feasible() {
            self.settle_path(path_action, 0.0, &mut transitions);
            if let Some(action) = pattern_action {
                self.settle_pattern(m, n, action, 0.0, &mut transitions);
            }
            return Ok(PlacementOutcome::reject(RejectReason::PatternInfeasible, transitions));
        }

        ledger.reserve(request, &deployment)?;
        let reward = compute_reward(request, &deployment.allocations);
        let scaled = reward / self.cfg.reward_scale;
        self.settle_path(path_action, scaled, &mut transitions);
        if let Some(action) = pattern_action {
            self.settle_pattern(m, n, action, scaled, &mut transitions);
        }
        Ok(PlacementOutcome {
            decision: Decision::Accept(deployment),
            reward,
            transitions,
        })
    }

    fn settle_path(&mut self, action: usize, scaled: f64, out: &mut Vec<EmittedTransition>) {
        if self.mode != Mode::Train {
            return;
        }
        if let Some(agent) = &mut self.path_agent {
            agent.finish(scaled);
            out.push(EmittedTransition {
                agent: AgentId::Path,
                action,
                reward: scaled,
            });
        }
    }

    fn settle_pattern(
        &mut self,
        m: usize,
        n: usize,
        action: usize,
        scaled: f64,
        out: &mut Vec<EmittedTransition>,
    ) {
        if self.mode != Mode::Train {
            return;
        }
        if let Some(agent) = self.pattern_agents.get_mut(&(m, n)) {
            agent.finish(scaled);
            out.push(EmittedTransition {
                agent: AgentId::Pattern { m, n },
                action,
                reward: scaled,
            });
        }
    }

    /// Sets every agent's exploration rate for the episode.
    pub fn set_episode(&mut self, episode: u32) {
        if let Some(agent) = &mut self.path_agent {
            agent.set_episode(episode);
        }
        for agent in self.pattern_agents.values_mut() {
            agent.set_episode(episode);
        }
    }

    /// Flushes each agent's last decision as a terminal transition.
    pub fn end_episode(&mut self) {
        if let Some(agent) = &mut self.path_agent {
            agent.end_episode();
        }
        for agent in self.pattern_agents.values_mut() {
            agent.end_episode();
        }
    }

    /// One gradient step for every learning agent past its warmup, in
    /// deterministic order (path first, then pattern classes ascending).
    pub fn learn_tick(&mut self) {
        if let Some(agent) = &mut self.path_agent {
            agent.learn_tick();
        }
        for agent in self.pattern_agents.values_mut() {
            agent.learn_tick();
        }
    }

    /// Losses accumulated since the last drain: the path agent's, and all
    /// pattern agents' pooled in class order.
    pub fn drain_losses(&mut self) -> (Vec<f64>, Vec<f64>) {
        let path = self
            .path_agent
            .as_mut()
            .map(|a| a.drain_losses())
            .unwrap_or_default();
        let mut pattern = Vec::new();
        for agent in self.pattern_agents.values_mut() {
            pattern.extend(agent.drain_losses());
        }
        (path, pattern)
    }

    /// Learning agents in deterministic order (path first, then pattern
    /// classes ascending).
    fn agents_mut(&mut self) -> Vec<(AgentId, &mut DqnAgent)> {
        let mut out = Vec::new();
        if let Some(agent) = &mut self.path_agent {
            out.push((AgentId::Path, agent));
        }
        for (&(m, n), agent) in self.pattern_agents.iter_mut() {
            out.push((AgentId::Pattern { m, n }, agent));
        }
        out
    }

    /// Writes one checkpoint per learning agent into `dir`.
    pub fn save_checkpoints(&mut self, dir: &Path) -> Result<(), PolicyError> {
        std::fs::create_dir_all(dir).map_err(CheckpointError::Io)?;
        for (id, agent) in self.agents_mut() {
            agent.save(&dir.join(format!("{id}.ckpt")))?;
        }
        Ok(())
    }

    /// Restores every learning agent from `dir`; heuristic roles need none.
    pub fn load_checkpoints(&mut self, dir: &Path) -> Result<(), PolicyError> {
        for (id, agent) in self.agents_mut() {
            let path = dir.join(format!("{id}.ckpt"));
            if !path.exists() {
                return Err(PolicyError::MissingCheckpoint {
                    agent: id.to_string(),
                    path,
                });
            }
            agent.load(&path)?;
        }
        Ok(())
    }
}

/// Greedy path rule: among candidates whose every link can carry the
/// request's bandwidth, pick the one with the most residual cores summed
/// over its compute nodes (ties to the lowest index). Returns the action
/// index: 0 rejects, `i + 1` selects `candidates[i]`.
pub fn heuristic_path(
    candidates: &[CandidatePath],
    ledger: &ResourceLedger,
    request: &SfcRequest,
) -> usize {
    let mut best: Option<(u64, usize)> = None;
    for (idx, path) in candidates.iter().enumerate() {
        let fits = path
            .links
            .iter()
            .all(|l| ledger.residual_bandwidth(*l) >= request.bandwidth);
        if !fits {
            continue;
        }
        let cores: u64 = path
            .compute_nodes()
            .iter()
            .map(|n| ledger.residual_cores(*n) as u64)
            .sum();
        match best {
            Some((most, _)) if most >= cores => {}
            _ => best = Some((cores, idx)),
        }
    }
    best.map_or(0, |(_, idx)| idx + 1)
}

/// Greedy placement rule: walk the chain in order with a cursor over the
/// path's compute nodes that never retreats, placing each VNF on the first
/// node whose residual cores (minus what this request already put there)
/// cover its grant. Returns the resulting pattern, or `None` if the cursor
/// runs off the path.
pub fn heuristic_pattern(
    path: &CandidatePath,
    allocs: &[VnfAllocation],
    ledger: &ResourceLedger,
) -> Option<Pattern> {
    let nodes = path.compute_nodes();
    let mut counts = vec![0usize; nodes.len()];
    let mut placed = vec![0u32; nodes.len()];
    let mut cursor = 0;
    for alloc in allocs {
        let need = alloc.total();
        while cursor < nodes.len()
            && ledger.residual_cores(nodes[cursor]).saturating_sub(placed[cursor]) < need
        {
            cursor += 1;
        }
        if cursor == nodes.len() {
            return None;
        }
        counts[cursor] += 1;
        placed[cursor] += need;
    }
    Some(Pattern { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{default_topology, Node, NodeKind};
    use crate::testutil::{path_through, request_with_chain, single_path_graph};
    use crate::types::{Bandwidth, SfcId};
    use crate::workload::VnfSpec;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bundle(kind: BundleKind, mode: Mode, graph: &NetworkGraph, seed: u64) -> AgentBundle {
        let mut cfg = BundleConfig::default();
        cfg.dqn.hidden_width = 32;
        cfg.dqn.hidden_layers = 2;
        AgentBundle::new(kind, mode, graph, cfg, seed).unwrap()
    }

    /// Two disjoint compute corridors between the same access points:
    /// S1 - A1 - A2 - D1 (cores `a`) and S1 - B1 - B2 - D1 (cores `b`).
    fn parallel_graph(a: u32, b: u32) -> NetworkGraph {
        let node = |name: &str, kind: NodeKind, cores: u32| Node {
            name: name.into(),
            kind,
            cores,
        };
        let nodes = vec![
            node("S1", NodeKind::Source, 0),
            node("A1", NodeKind::Compute, a),
            node("A2", NodeKind::Compute, a),
            node("B1", NodeKind::Compute, b),
            node("B2", NodeKind::Compute, b),
            node("D1", NodeKind::Destination, 0),
        ];
        let wire = |x: &str, y: &str| (x.to_string(), y.to_string(), Bandwidth::from_gbps(10.0), 0.001);
        let links = vec![
            wire("S1", "A1"),
            wire("A1", "A2"),
            wire("A2", "D1"),
            wire("S1", "B1"),
            wire("B1", "B2"),
            wire("B2", "D1"),
        ];
        NetworkGraph::new(nodes, links).unwrap()
    }

    #[test]
    fn bundle_names_round_trip() {
        for kind in BundleKind::ALL {
            assert_eq!(kind.to_string().parse::<BundleKind>().unwrap(), kind);
        }
        let err = "RLRL".parse::<BundleKind>().unwrap_err().to_string();
        for name in ["RL+RL", "RL+H", "H+RL", "H+H"] {
            assert!(err.contains(name), "error {err:?} does not list {name}");
        }
    }

    #[test]
    fn uncontended_request_is_accepted_by_heuristics() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut ledger = ResourceLedger::new(&graph);
        let mut bundle = bundle(BundleKind::HH, Mode::Eval, &graph, 1);
        let request = request_with_chain(&[(2, 1e6), (3, 1e6)], &graph);

        let outcome = bundle.decide(&graph, &mut ledger, &request).unwrap();
        let Decision::Accept(deployment) = &outcome.decision else {
            panic!("expected acceptance, got {:?}", outcome.decision);
        };
        let report = check_feasible(&ledger, &request, deployment, &ConstraintConfig::default());
        assert!(report.bandwidth_ok && report.compute_ok && report.reliability_ok && report.delay_ok);
        assert!(outcome.reward > 0.0);
        assert!(outcome.transitions.is_empty());
        assert_eq!(ledger.active_count(), 1);
    }

    #[test]
    fn heuristic_path_prefers_more_residual_cores() {
        let graph = parallel_graph(5, 10);
        let ledger = ResourceLedger::new(&graph);
        let src = graph.sources()[0];
        let dst = graph.destinations()[0];
        let candidates = candidate_paths(&graph, src, dst, 8).unwrap();
        let request = request_with_chain(&[(1, 1e6)], &graph);

        let action = heuristic_path(&candidates, &ledger, &request);
        assert!(action > 0);
        let chosen = &candidates[action - 1];
        let total: u32 = chosen
            .compute_nodes()
            .iter()
            .map(|n| ledger.residual_cores(*n))
            .sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn heuristic_path_rejects_when_bandwidth_is_out() {
        let graph = parallel_graph(5, 10);
        let ledger = ResourceLedger::new(&graph);
        let candidates =
            candidate_paths(&graph, graph.sources()[0], graph.destinations()[0], 8).unwrap();
        let mut request = request_with_chain(&[(1, 1e6)], &graph);
        request.bandwidth = Bandwidth::from_gbps(11.0);
        assert_eq!(heuristic_path(&candidates, &ledger, &request), 0);
    }

    #[test]
    fn heuristic_path_matches_a_scan_oracle() {
        let graph = default_topology(4);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sources = graph.sources();
        let destinations = graph.destinations();

        for round in 0..500 {
            let mut ledger = ResourceLedger::new(&graph);
            let mut bundle = bundle(BundleKind::HH, Mode::Eval, &graph, round);
            for seq in 0..rng.random_range(0..6) {
                let mut filler = request_with_chain(&[(2, 1e6), (2, 1e6)], &graph);
                filler.id = SfcId { source: 9, seq };
                filler.src = sources[rng.random_range(0..sources.len())];
                filler.dst = destinations[rng.random_range(0..destinations.len())];
                filler.departure = 5;
                bundle.decide(&graph, &mut ledger, &filler).unwrap();
            }

            let mut probe = request_with_chain(&[(1, 1e6)], &graph);
            probe.src = sources[rng.random_range(0..sources.len())];
            probe.dst = destinations[rng.random_range(0..destinations.len())];
            probe.bandwidth = Bandwidth::from_gbps(rng.random_range(0.2..9.0));
            let candidates = candidate_paths(&graph, probe.src, probe.dst, 8).unwrap();

            let mut oracle = 0;
            let mut best_cores = -1i64;
            for (idx, path) in candidates.iter().enumerate() {
                let fits = path
                    .links
                    .iter()
                    .all(|l| ledger.residual_bandwidth(*l) >= probe.bandwidth);
                let cores: i64 = path
                    .compute_nodes()
                    .iter()
                    .map(|n| ledger.residual_cores(*n) as i64)
                    .sum();
                if fits && cores > best_cores {
                    best_cores = cores;
                    oracle = idx + 1;
                }
            }
            assert_eq!(heuristic_path(&candidates, &ledger, &probe), oracle);
        }
    }

    #[test]
    fn first_fit_walk_matches_hand_example() {
        let graph = single_path_graph(&[0.001; 4], 4);
        let mut ledger = ResourceLedger::new(&graph);
        let path = path_through(&graph);

        // Occupy three cores on the first compute node so residuals read
        // [1, 4, 4], then place two 2-core VNFs.
        let occupant = SfcRequest {
            departure: 50,
            ..request_with_chain(&[(3, 1e6)], &graph)
        };
        let deployment = Deployment {
            path: path.clone(),
            pattern: Pattern { counts: vec![1, 0, 0] },
            placement: vec![path.compute_nodes()[0]],
            allocations: vec![VnfAllocation::base_only(3)],
        };
        ledger.reserve(&occupant, &deployment).unwrap();

        let allocs = [VnfAllocation::base_only(2), VnfAllocation::base_only(2)];
        let pattern = heuristic_pattern(&path, &allocs, &ledger).unwrap();
        assert_eq!(pattern.counts, vec![0, 2, 0]);
    }

    #[test]
    fn first_fit_walk_stacks_on_a_roomy_first_node() {
        let graph = single_path_graph(&[0.001; 4], 16);
        let ledger = ResourceLedger::new(&graph);
        let path = path_through(&graph);
        let allocs = [
            VnfAllocation::base_only(2),
            VnfAllocation::base_only(2),
            VnfAllocation::base_only(2),
        ];
        let pattern = heuristic_pattern(&path, &allocs, &ledger).unwrap();
        assert_eq!(pattern.counts, vec![3, 0, 0]);
    }

    #[test]
    fn first_fit_walk_runs_off_small_nodes() {
        let graph = single_path_graph(&[0.001; 4], 1);
        let ledger = ResourceLedger::new(&graph);
        let path = path_through(&graph);
        let allocs = [VnfAllocation::base_only(2)];
        assert!(heuristic_pattern(&path, &allocs, &ledger).is_none());
    }

    #[test]
    fn saturated_bandwidth_turns_into_policy_reject() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut ledger = ResourceLedger::new(&graph);
        let mut bundle = bundle(BundleKind::HH, Mode::Eval, &graph, 1);
        let mut request = request_with_chain(&[(2, 1e6), (2, 1e6)], &graph);
        request.bandwidth = Bandwidth::from_gbps(10.5);

        let outcome = bundle.decide(&graph, &mut ledger, &request).unwrap();
        assert!(matches!(
            outcome.decision,
            Decision::Reject(RejectReason::PolicyReject)
        ));
        assert_eq!(outcome.reward, 0.0);
        assert!(outcome.transitions.is_empty());
        assert!(ledger.is_pristine());
    }

    #[test]
    fn unreachable_reliability_is_a_config_reject() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut ledger = ResourceLedger::new(&graph);
        let mut bundle = bundle(BundleKind::HH, Mode::Eval, &graph, 1);
        let mut request = request_with_chain(&[(2, 1e6), (2, 1e6)], &graph);
        request.reliability_bound = 0.999999;

        let outcome = bundle.decide(&graph, &mut ledger, &request).unwrap();
        assert!(matches!(
            outcome.decision,
            Decision::Reject(RejectReason::ConfigInfeasible)
        ));
    }

    #[test]
    fn exhausted_cores_are_a_pattern_reject() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 2);
        let mut ledger = ResourceLedger::new(&graph);
        let mut bundle = bundle(BundleKind::HH, Mode::Eval, &graph, 1);
        let request = request_with_chain(&[(3, 1e6), (3, 1e6)], &graph);

        let outcome = bundle.decide(&graph, &mut ledger, &request).unwrap();
        assert!(matches!(
            outcome.decision,
            Decision::Reject(RejectReason::PatternInfeasible)
        ));
        assert!(ledger.is_pristine());
    }

    #[test]
    fn learning_bundle_emits_the_documented_transition_counts() {
        let graph = default_topology(7);
        let mut ledger = ResourceLedger::new(&graph);
        let mut rl = bundle(BundleKind::RlRl, Mode::Train, &graph, 3);
        rl.set_episode(0);
        let sources = graph.sources();
        let destinations = graph.destinations();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen_accept = false;
        let mut seen_reject = false;

        for seq in 0..60 {
            let mut request = request_with_chain(&[(2, 1e6), (2, 1e6)], &graph);
            request.id = SfcId { source: 0, seq };
            request.src = sources[rng.random_range(0..sources.len())];
            request.dst = destinations[rng.random_range(0..destinations.len())];
            request.departure = 100;
            let outcome = rl.decide(&graph, &mut ledger, &request).unwrap();

            match &outcome.decision {
                Decision::Accept(deployment) => {
                    seen_accept = true;
                    assert_eq!(outcome.transitions.len(), 2);
                    assert_eq!(outcome.transitions[0].agent, AgentId::Path);
                    let m = deployment.path.compute_len();
                    assert_eq!(
                        outcome.transitions[1].agent,
                        AgentId::Pattern { m, n: 2 }
                    );
                    let scaled = outcome.reward / BundleConfig::default().reward_scale;
                    assert!(outcome.transitions.iter().all(|t| t.reward == scaled));
                }
                Decision::Reject(RejectReason::PolicyReject) => {
                    seen_reject = true;
                    assert_eq!(outcome.transitions.len(), 1);
                    assert_eq!(outcome.transitions[0].agent, AgentId::Path);
                    assert_eq!(outcome.transitions[0].action, 0);
                    assert_eq!(outcome.transitions[0].reward, 0.0);
                }
                Decision::Reject(RejectReason::ConfigInfeasible) => {
                    assert_eq!(outcome.transitions.len(), 1);
                }
                Decision::Reject(RejectReason::PatternInfeasible) => {
                    assert_eq!(outcome.transitions.len(), 2);
                    assert!(outcome.transitions.iter().all(|t| t.reward == 0.0));
                }
                Decision::Reject(RejectReason::NoCandidatePath) => {
                    assert!(outcome.transitions.is_empty());
                }
            }
        }
        rl.end_episode();
        assert!(seen_accept, "exploration never accepted a request");
        assert!(seen_reject, "exploration never hit the reject action");
    }

    #[test]
    fn identically_seeded_bundles_decide_identically() {
        let graph = default_topology(2);
        let mut a = bundle(BundleKind::RlRl, Mode::Train, &graph, 11);
        let mut b = bundle(BundleKind::RlRl, Mode::Train, &graph, 11);
        let mut ledger_a = ResourceLedger::new(&graph);
        let mut ledger_b = ResourceLedger::new(&graph);
        a.set_episode(0);
        b.set_episode(0);

        for seq in 0..30 {
            let mut request = request_with_chain(&[(2, 1e6), (1, 1e6), (2, 1e6)], &graph);
            request.id = SfcId { source: 0, seq };
            request.departure = 100;
            let oa = a.decide(&graph, &mut ledger_a, &request).unwrap();
            let ob = b.decide(&graph, &mut ledger_b, &request).unwrap();
            assert_eq!(oa.reward, ob.reward);
            assert_eq!(oa.transitions, ob.transitions);
        }
    }

    #[test]
    fn checkpoints_round_trip_through_a_fresh_bundle() {
        let dir = std::env::temp_dir().join(format!(
            "sfcsim-bundle-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut trained = bundle(BundleKind::RlRl, Mode::Train, &graph, 21);
        trained.set_episode(0);
        let mut ledger = ResourceLedger::new(&graph);
        for seq in 0..20 {
            let mut request = request_with_chain(&[(1, 1e6), (1, 1e6)], &graph);
            request.id = SfcId { source: 0, seq };
            request.departure = 100;
            trained.decide(&graph, &mut ledger, &request).unwrap();
        }
        trained.end_episode();
        trained.save_checkpoints(&dir).unwrap();
        assert!(dir.join("path.ckpt").exists());
        assert!(dir.join("pattern_m3_n2.ckpt").exists());

        let mut restored = bundle(BundleKind::RlRl, Mode::Eval, &graph, 99);
        restored.load_checkpoints(&dir).unwrap();

        let mut eval_a = ResourceLedger::new(&graph);
        let mut eval_b = ResourceLedger::new(&graph);
        let mut reference = bundle(BundleKind::RlRl, Mode::Eval, &graph, 21);
        reference.load_checkpoints(&dir).unwrap();
        for seq in 0..10 {
            let mut request = request_with_chain(&[(1, 1e6), (1, 1e6)], &graph);
            request.id = SfcId { source: 1, seq };
            request.departure = 100;
            let oa = restored.decide(&graph, &mut eval_a, &request).unwrap();
            let ob = reference.decide(&graph, &mut eval_b, &request).unwrap();
            assert_eq!(oa.accepted(), ob.accepted());
            assert_eq!(oa.reward, ob.reward);
        }
    }

    #[test]
    fn missing_checkpoints_are_reported_per_agent() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut fresh = bundle(BundleKind::RlRl, Mode::Eval, &graph, 1);
        let missing = std::env::temp_dir().join("sfcsim-no-such-dir");
        let err = fresh.load_checkpoints(&missing).unwrap_err();
        assert!(matches!(err, PolicyError::MissingCheckpoint { .. }));
        assert!(err.to_string().contains("path"));
    }

    #[test]
    fn heuristic_bundles_need_no_checkpoints() {
        let graph = single_path_graph(&[0.001, 0.001, 0.001], 16);
        let mut hh = bundle(BundleKind::HH, Mode::Eval, &graph, 1);
        let missing = std::env::temp_dir().join("sfcsim-no-such-dir");
        hh.load_checkpoints(&missing).unwrap();
    }

    #[test]
    fn fig_walkthrough_pattern_expands_to_hosts() {
        let graph = single_path_graph(&[0.001; 5], 16);
        let path = path_through(&graph);
        assert_eq!(path.compute_len(), 4);
        let request = SfcRequest {
            vnfs: vec![
                VnfSpec { base_cores: 1, workload_cycles: 1e6 },
                VnfSpec { base_cores: 1, workload_cycles: 1e6 },
                VnfSpec { base_cores: 1, workload_cycles: 1e6 },
                VnfSpec { base_cores: 1, workload_cycles: 1e6 },
            ],
            replica_flags: vec![false; 4],
            boost_flags: vec![false; 4],
            ..request_with_chain(&[(1, 1e6)], &graph)
        };
        let pattern = Pattern { counts: vec![1, 0, 2, 1] };
        let placement = pattern_to_placement(&pattern, &path, &request).unwrap();
        let nodes = path.compute_nodes();
        assert_eq!(placement, vec![nodes[0], nodes[2], nodes[2], nodes[3]]);
    }
}
