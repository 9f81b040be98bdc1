//! Independent oracles cross-checking the production code paths: direct
//! recursion for pattern counts, naive constraint re-evaluation, an event-log
//! capacity audit, exhaustive single-request placement, and tabular value
//! iteration. `run_suite` bundles them into the named checks behind the CLI's
//! `verify` subcommand.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{EncodingConfig, ObservationLayout};
use crate::feasibility::{
    chain_availability, chain_delay_s, check_feasible, compute_reward, ConstraintConfig,
    Deployment, FeasibilityReport, VnfAllocation,
};
use crate::learn::{gradient_check, DqnAgent, DqnConfig};
use crate::network::{
    candidate_paths, default_topology, CandidatePath, LedgerEvent, NetworkError, NetworkGraph,
    ResourceLedger,
};
use crate::patterns::{enumerate_patterns, pattern_to_placement, Pattern};
use crate::policy::{AgentBundle, BundleConfig, BundleKind, Mode};
use crate::seeds::derive_seed;
use crate::types::{Bandwidth, LinkId, NodeId, SfcId, TimeSlot};
use crate::workload::{SfcRequest, VnfSpec};

/// Errors from oracle computations themselves (not from mismatches they
/// detect, which are reported as `Err(String)` by the batteries).
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("pattern count oracle covers 1..={max}, got n={n} m={m}", max = ORACLE_PATTERN_MAX)]
    Domain { n: usize, m: usize },
    #[error("value iteration did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("invalid oracle input: {0}")]
    Config(String),
}

/// Largest chain length and node count the counting oracle accepts.
pub const ORACLE_PATTERN_MAX: usize = 8;

/// Counts the ways to split a chain of `n` VNFs over `m` ordered nodes by
/// recursing on the first node's share. Exponential but exact, and shares
/// nothing with the production counter.
pub fn oracle_pattern_count(n: usize, m: usize) -> Result<u64, VerifyError> {
    if !(1..=ORACLE_PATTERN_MAX).contains(&n) || !(1..=ORACLE_PATTERN_MAX).contains(&m) {
        return Err(VerifyError::Domain { n, m });
    }
    Ok(count_splits(n, m))
}

fn count_splits(n: usize, m: usize) -> u64 {
    if m == 1 {
        return 1;
    }
    (0..=n).map(|first| count_splits(n - first, m - 1)).sum()
}

/// Binomial coefficient over u128 intermediates; exact for small arguments.
pub fn binomial(a: u64, b: u64) -> u64 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Re-evaluates all four constraints with independent arithmetic: per-link
/// demand accumulated hop by hop in integer millibits, per-node demand read
/// off the raw placement list, availability by repeated multiplication, and
/// delay resummed from the graph's own link entries.
pub fn naive_check_feasible(
    graph: &NetworkGraph,
    ledger: &ResourceLedger,
    request: &SfcRequest,
    deployment: &Deployment,
    cfg: &ConstraintConfig,
) -> FeasibilityReport {
    let mut link_demand: BTreeMap<LinkId, u64> = BTreeMap::new();
    for link in &deployment.path.links {
        *link_demand.entry(*link).or_insert(0) += request.bandwidth.as_milli();
    }
    let bandwidth_ok = link_demand
        .iter()
        .all(|(link, demand)| *demand <= ledger.residual_bandwidth(*link).as_milli());

    let mut node_demand: BTreeMap<NodeId, u64> = BTreeMap::new();
    for (node, alloc) in deployment.placement.iter().zip(&deployment.allocations) {
        *node_demand.entry(*node).or_insert(0) +=
            (alloc.base + alloc.boost + alloc.replicas) as u64;
    }
    let compute_ok = node_demand
        .iter()
        .all(|(node, demand)| *demand <= ledger.residual_cores(*node) as u64);

    let failure = 1.0 - cfg.vnf_availability;
    let mut availability = 1.0;
    for alloc in &deployment.allocations {
        let mut all_down = 1.0;
        for _ in 0..=alloc.replicas {
            all_down *= failure;
        }
        availability *= 1.0 - all_down;
    }
    let reliability_ok = availability >= request.reliability_bound;

    let mut delay_s = 0.0;
    for link in &deployment.path.links {
        delay_s += graph.link(*link).delay_s;
    }
    for (vnf, alloc) in request.vnfs.iter().zip(&deployment.allocations) {
        delay_s +=
            vnf.workload_cycles / ((alloc.base + alloc.boost) as f64 * cfg.cycles_per_second);
    }
    let delay_ok = delay_s <= request.delay_bound_s;

    FeasibilityReport {
        bandwidth_ok,
        compute_ok,
        reliability_ok,
        delay_ok,
        availability,
        delay_s,
    }
}

/// Replays a ledger event log against installed capacity.
///
/// Usage is piecewise constant between events, so checking after every
/// `Reserve` covers every instant. The log must be time ordered, reserve
/// and release ids must pair up with releases at their expiration slot, and
/// the final usage must be zero everywhere.
pub fn audit_reservation_log(graph: &NetworkGraph, events: &[LedgerEvent]) -> Result<(), String> {
    let mut core_usage = vec![0u64; graph.node_count()];
    let mut bandwidth_usage = vec![0u64; graph.link_count()];
    let mut active: BTreeMap<SfcId, (TimeSlot, &crate::network::Reservation)> = BTreeMap::new();
    let mut last_time: TimeSlot = 0;

    for (i, event) in events.iter().enumerate() {
        let time = match event {
            LedgerEvent::Reserve { time, .. } => *time,
            LedgerEvent::Release { time, .. } => *time,
        };
        if time < last_time {
            return Err(format!(
                "event {i} at slot {time} after an event at slot {last_time}"
            ));
        }
        last_time = time;

        match event {
            LedgerEvent::Reserve { time, reservation } => {
                if active.contains_key(&reservation.sfc) {
                    return Err(format!("event {i}: {} reserved twice", reservation.sfc));
                }
                if reservation.expires <= *time {
                    return Err(format!(
                        "event {i}: {} expires at slot {}, not after slot {time}",
                        reservation.sfc, reservation.expires
                    ));
                }
                for (node, cores) in &reservation.cores {
                    if node.0 >= graph.node_count() {
                        return Err(format!("event {i}: node {} is not in the graph", node.0));
                    }
                    core_usage[node.0] += *cores as u64;
                    let installed = graph.node(*node).cores as u64;
                    if core_usage[node.0] > installed {
                        return Err(format!(
                            "event {i}: node {} ({}) holds {} of {installed} cores",
                            node.0,
                            graph.name(*node),
                            core_usage[node.0]
                        ));
                    }
                }
                for (link, held) in &reservation.bandwidth {
                    if link.0 >= graph.link_count() {
                        return Err(format!("event {i}: link {} is not in the graph", link.0));
                    }
                    bandwidth_usage[link.0] += held.as_milli();
                    let capacity = graph.link(*link).capacity.as_milli();
                    if bandwidth_usage[link.0] > capacity {
                        return Err(format!(
                            "event {i}: link {} carries {} of {capacity} millibits",
                            link.0, bandwidth_usage[link.0]
                        ));
                    }
                }
                active.insert(reservation.sfc, (*time, reservation));
            }
            LedgerEvent::Release { time, sfc } => {
                let Some((_, reservation)) = active.remove(sfc) else {
                    return Err(format!("event {i}: release of inactive {sfc}"));
                };
                if *time != reservation.expires {
                    return Err(format!(
                        "event {i}: {sfc} released at slot {time}, its expiration is {}",
                        reservation.expires
                    ));
                }
                for (node, cores) in &reservation.cores {
                    core_usage[node.0] =
                        core_usage[node.0].checked_sub(*cores as u64).ok_or_else(|| {
                            format!("event {i}: node {} usage went negative", node.0)
                        })?;
                }
                for (link, held) in &reservation.bandwidth {
                    bandwidth_usage[link.0] = bandwidth_usage[link.0]
                        .checked_sub(held.as_milli())
                        .ok_or_else(|| {
                            format!("event {i}: link {} usage went negative", link.0)
                        })?;
                }
            }
        }
    }

    if let Some((sfc, _)) = active.iter().next() {
        return Err(format!("{sfc} still active at the end of the log"));
    }
    if let Some(node) = core_usage.iter().position(|u| *u != 0) {
        return Err(format!("node {node} usage nonzero after all releases"));
    }
    if let Some(link) = bandwidth_usage.iter().position(|u| *u != 0) {
        return Err(format!("link {link} usage nonzero after all releases"));
    }
    Ok(())
}

/// The profit-maximal deployment the exhaustive oracle found.
#[derive(Clone, Debug)]
pub struct OracleBest {
    pub path_index: usize,
    pub deployment: Deployment,
    pub reward: f64,
}

/// Exhaustively finds the most profitable feasible deployment for one
/// request against the current ledger, or `None` if nothing is feasible
/// within the core budget.
///
/// Profit strictly falls as extra cores are added, so each path is searched
/// in ascending extra-core order and the first feasible total is that
/// path's optimum. Availability depends only on replica counts and delay
/// only on boost counts, so greedy minima for each bound the search from
/// below; both greedy minima are exact because the marginal gains per slot
/// are decreasing.
pub fn oracle_best_placement(
    graph: &NetworkGraph,
    ledger: &ResourceLedger,
    request: &SfcRequest,
    cfg: &ConstraintConfig,
    k_paths: usize,
) -> Result<Option<OracleBest>, VerifyError> {
    let candidates = match candidate_paths(graph, request.src, request.dst, k_paths) {
        Ok(c) => c,
        Err(NetworkError::NoPath { .. }) => return Ok(None),
        Err(e) => return Err(VerifyError::Config(e.to_string())),
    };
    let budget = cfg.budget_factor * request.total_base_cores();
    let replica_slots: Vec<usize> = flagged_slots(&request.replica_flags);
    let boost_slots: Vec<usize> = flagged_slots(&request.boost_flags);

    let Some(min_replicas) = minimal_replicas(request, &replica_slots, cfg, budget) else {
        return Ok(None);
    };

    let mut best: Option<OracleBest> = None;
    for (path_index, path) in candidates.iter().enumerate() {
        if !path
            .links
            .iter()
            .all(|l| ledger.residual_bandwidth(*l) >= request.bandwidth)
        {
            continue;
        }
        let table = enumerate_patterns(request.vnf_count(), path.compute_len())
            .map_err(|e| VerifyError::Config(e.to_string()))?;
        if !base_allocation_packs(request, path, &table, ledger) {
            continue;
        }
        let Some(min_boost) = minimal_boost(request, path, &boost_slots, cfg, budget) else {
            continue;
        };
        if min_replicas + min_boost > budget {
            continue;
        }

        let found = best_on_path(
            request,
            path,
            &table,
            ledger,
            cfg,
            &replica_slots,
            &boost_slots,
            min_replicas + min_boost,
            budget,
        );
        if let Some(deployment) = found {
            let reward = compute_reward(request, &deployment.allocations);
            let better = match &best {
                Some(current) => reward > current.reward,
                None => true,
            };
            if better {
                best = Some(OracleBest {
                    path_index,
                    deployment,
                    reward,
                });
            }
        }
    }
    Ok(best)
}

fn flagged_slots(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(k, set)| set.then_some(k))
        .collect()
}

fn base_allocations(request: &SfcRequest) -> Vec<VnfAllocation> {
    request
        .vnfs
        .iter()
        .map(|v| VnfAllocation::base_only(v.base_cores))
        .collect()
}

/// Extra cores only raise per-node demand, so a path where even the bare
/// base grants fit under no pattern is infeasible for every grant.
fn base_allocation_packs(
    request: &SfcRequest,
    path: &CandidatePath,
    table: &[Pattern],
    ledger: &ResourceLedger,
) -> bool {
    let base = base_allocations(request);
    table
        .iter()
        .any(|pattern| pattern_fits(pattern, path, request, &base, ledger).is_some())
}

/// Expands the pattern and checks the aggregated per-node demand against
/// the ledger, returning the placement on success.
fn pattern_fits(
    pattern: &Pattern,
    path: &CandidatePath,
    request: &SfcRequest,
    allocs: &[VnfAllocation],
    ledger: &ResourceLedger,
) -> Option<Vec<NodeId>> {
    let placement = pattern_to_placement(pattern, path, request).ok()?;
    let mut node_demand: BTreeMap<NodeId, u32> = BTreeMap::new();
    for (node, alloc) in placement.iter().zip(allocs) {
        *node_demand.entry(*node).or_insert(0) += alloc.total();
    }
    let fits = node_demand
        .iter()
        .all(|(node, demand)| *demand <= ledger.residual_cores(*node));
    fits.then_some(placement)
}

/// Fewest total replicas meeting the reliability bound, spreading greedily
/// (one more replica gains most on the VNF with the fewest), or `None` if
/// the bound is unreachable within the budget.
fn minimal_replicas(
    request: &SfcRequest,
    replica_slots: &[usize],
    cfg: &ConstraintConfig,
    budget: u32,
) -> Option<u32> {
    let mut allocs = base_allocations(request);
    let mut added = 0;
    loop {
        if chain_availability(&allocs, cfg.vnf_availability) >= request.reliability_bound {
            return Some(added);
        }
        if added == budget {
            return None;
        }
        let slot = replica_slots
            .iter()
            .copied()
            .min_by_key(|k| allocs[*k].replicas)?;
        allocs[slot].replicas += 1;
        added += 1;
    }
}

/// Fewest total boost cores meeting the delay bound, always boosting the
/// VNF with the largest marginal delay reduction, or `None` if the bound is
/// unreachable within the budget.
fn minimal_boost(
    request: &SfcRequest,
    path: &CandidatePath,
    boost_slots: &[usize],
    cfg: &ConstraintConfig,
    budget: u32,
) -> Option<u32> {
    let mut allocs = base_allocations(request);
    let mut added = 0;
    loop {
        if chain_delay_s(path, request, &allocs, cfg.cycles_per_second) <= request.delay_bound_s {
            return Some(added);
        }
        if added == budget {
            return None;
        }
        let reduction = |k: usize| {
            let cores = allocs[k].processing() as f64;
            request.vnfs[k].workload_cycles / (cores * (cores + 1.0))
        };
        let slot = boost_slots.iter().copied().max_by(|a, b| {
            reduction(*a)
                .partial_cmp(&reduction(*b))
                .expect("delay reductions are finite")
        })?;
        allocs[slot].boost += 1;
        added += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn best_on_path(
    request: &SfcRequest,
    path: &CandidatePath,
    table: &[Pattern],
    ledger: &ResourceLedger,
    cfg: &ConstraintConfig,
    replica_slots: &[usize],
    boost_slots: &[usize],
    min_extra: u32,
    budget: u32,
) -> Option<Deployment> {
    let base_total = request.total_base_cores() as u64;
    let path_cores: u64 = path
        .compute_nodes()
        .iter()
        .map(|n| ledger.residual_cores(*n) as u64)
        .sum();
    let slots = replica_slots.len() + boost_slots.len();

    for extra in min_extra..=budget {
        if base_total + extra as u64 > path_cores {
            return None;
        }
        let mut found: Option<Deployment> = None;
        for_each_composition(extra, slots, &mut |split| {
            let mut allocs = base_allocations(request);
            for (i, slot) in replica_slots.iter().enumerate() {
                allocs[*slot].replicas = split[i];
            }
            for (j, slot) in boost_slots.iter().enumerate() {
                allocs[*slot].boost = split[replica_slots.len() + j];
            }
            if chain_availability(&allocs, cfg.vnf_availability) < request.reliability_bound {
                return true;
            }
            if chain_delay_s(path, request, &allocs, cfg.cycles_per_second)
                > request.delay_bound_s
            {
                return true;
            }
            for pattern in table {
                if let Some(placement) = pattern_fits(pattern, path, request, &allocs, ledger) {
                    found = Some(Deployment {
                        path: path.clone(),
                        pattern: pattern.clone(),
                        placement,
                        allocations: allocs,
                    });
                    return false;
                }
            }
            true
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Visits every way to split `total` over `slots` ordered cells, first cell
/// varying slowest. The callback returns `false` to stop early; the return
/// value is `false` if it ever did.
fn for_each_composition(total: u32, slots: usize, f: &mut impl FnMut(&[u32]) -> bool) -> bool {
    fn walk(
        buf: &mut Vec<u32>,
        remaining: u32,
        slots_left: usize,
        f: &mut impl FnMut(&[u32]) -> bool,
    ) -> bool {
        if slots_left == 0 {
            if remaining == 0 {
                return f(buf);
            }
            return true;
        }
        if slots_left == 1 {
            buf.push(remaining);
            let keep_going = f(buf);
            buf.pop();
            return keep_going;
        }
        for take in 0..=remaining {
            buf.push(take);
            let keep_going = walk(buf, remaining - take, slots_left - 1, f);
            buf.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
    let mut buf = Vec::with_capacity(slots);
    walk(&mut buf, total, slots, f)
}

/// A small deterministic MDP: `transitions[s][a]` holds the reward and the
/// successor of taking `a` in `s`; `None` ends the episode.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    pub transitions: Vec<Vec<(f64, Option<usize>)>>,
}

/// Sweep cap for [`oracle_value_iteration`].
pub const VALUE_ITERATION_MAX_SWEEPS: usize = 100_000;

/// Solves the MDP's optimal action values by synchronous value iteration,
/// sweeping until no entry moves more than `tolerance`.
pub fn oracle_value_iteration(
    mdp: &TabularMdp,
    discount: f64,
    tolerance: f64,
) -> Result<Vec<Vec<f64>>, VerifyError> {
    if !(0.0..1.0).contains(&discount) {
        return Err(VerifyError::Config(format!(
            "value iteration needs a discount in [0, 1), got {discount}"
        )));
    }
    for (s, actions) in mdp.transitions.iter().enumerate() {
        for (a, (_, next)) in actions.iter().enumerate() {
            if let Some(next) = next {
                if *next >= mdp.transitions.len() {
                    return Err(VerifyError::Config(format!(
                        "state {s} action {a} jumps to missing state {next}"
                    )));
                }
            }
        }
    }

    let mut q: Vec<Vec<f64>> = mdp
        .transitions
        .iter()
        .map(|actions| vec![0.0; actions.len()])
        .collect();
    for _ in 0..VALUE_ITERATION_MAX_SWEEPS {
        let previous = q.clone();
        let mut delta: f64 = 0.0;
        for (s, actions) in mdp.transitions.iter().enumerate() {
            for (a, (reward, next)) in actions.iter().enumerate() {
                let future = next.map_or(0.0, |n| state_value(&previous, n));
                let updated = reward + discount * future;
                delta = delta.max((updated - q[s][a]).abs());
                q[s][a] = updated;
            }
        }
        if delta <= tolerance {
            return Ok(q);
        }
    }
    Err(VerifyError::NonConvergence {
        sweeps: VALUE_ITERATION_MAX_SWEEPS,
    })
}

fn state_value(q: &[Vec<f64>], s: usize) -> f64 {
    if q[s].is_empty() {
        0.0
    } else {
        q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Two-state chain used to check DQN learning end to end. State 0: action 0
/// moves to state 1 for nothing, action 1 ends with 0.3. State 1: action 0
/// ends with 1.0, action 1 ends with 0.3.
pub fn toy_chain_mdp() -> TabularMdp {
    TabularMdp {
        transitions: vec![
            vec![(0.0, Some(1)), (0.3, None)],
            vec![(1.0, None), (0.3, None)],
        ],
    }
}

/// One-hot encodings of the toy chain's states.
pub const TOY_STATES: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];
/// Discount used for the toy chain check.
pub const TOY_DISCOUNT: f64 = 0.9;

/// Trains a fresh agent on the toy chain for at least `min_transitions`
/// stored steps and compares its greedy Q values against value iteration.
/// Returns the worst absolute error, or a message when it exceeds
/// `tolerance`.
pub fn dqn_toy_mdp_check(min_transitions: usize, tolerance: f64) -> Result<f64, String> {
    let mdp = toy_chain_mdp();
    let q_star =
        oracle_value_iteration(&mdp, TOY_DISCOUNT, 1e-10).map_err(|e| e.to_string())?;
    let cfg = DqnConfig {
        learning_rate: 0.01,
        discount: TOY_DISCOUNT,
        batch_size: 16,
        replay_capacity: 20_000,
        warmup: 64,
        update_period: 1,
        target_sync_period: 25,
        epsilon_start: 1.0,
        epsilon_end: 0.2,
        epsilon_decay_episodes: 200,
        hidden_width: 32,
        hidden_layers: 2,
    };
    let mut agent = DqnAgent::new("toy", 2, 2, 0, "toy:2", cfg, 7).map_err(|e| e.to_string())?;

    let mut stored = 0;
    let mut episode = 0;
    while stored < min_transitions {
        agent.set_episode(episode);
        episode += 1;
        let mut state = 0;
        loop {
            let action = agent
                .act(&TOY_STATES[state], 2, true)
                .map_err(|e| e.to_string())?;
            let (reward, next) = mdp.transitions[state][action];
            agent.finish(reward);
            agent.learn_tick();
            stored += 1;
            match next {
                Some(n) => state = n,
                None => break,
            }
        }
        agent.end_episode();
    }

    let mut worst = 0.0f64;
    for (s, encoded) in TOY_STATES.iter().enumerate() {
        let q = agent.q_values(encoded).map_err(|e| e.to_string())?;
        for (a, target) in q_star[s].iter().enumerate() {
            worst = worst.max((q[a] - target).abs());
        }
    }
    if worst > tolerance {
        return Err(format!(
            "toy chain: learned Q off by {worst:.4} after {stored} steps, tolerance {tolerance}"
        ));
    }
    Ok(worst)
}

/// Which menus [`random_probe_request`] draws from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ProbeMenu {
    /// Bounds and bandwidths chosen so every constraint family fails
    /// sometimes.
    Adversarial,
    /// Bounds matching the default workload, so placements usually exist.
    Placeable,
}

fn random_probe_request(
    rng: &mut ChaCha8Rng,
    graph: &NetworkGraph,
    seq: u32,
    menu: ProbeMenu,
) -> SfcRequest {
    let (bandwidths, reliabilities, delays): (&[f64], &[f64], &[f64]) = match menu {
        ProbeMenu::Adversarial => (
            &[0.2, 1.0, 5.0, 12.0, 25.0],
            &[0.9, 0.95, 0.97, 0.995],
            &[0.005, 0.01, 0.05, 0.1, 0.15],
        ),
        ProbeMenu::Placeable => (&[0.2, 0.5, 1.0], &[0.95, 0.97], &[0.05, 0.1, 0.15]),
    };
    let sources = graph.sources();
    let destinations = graph.destinations();
    let n = rng.random_range(2..=4);
    SfcRequest {
        id: SfcId { source: 7, seq },
        src: sources[rng.random_range(0..sources.len())],
        dst: destinations[rng.random_range(0..destinations.len())],
        bandwidth: Bandwidth::from_gbps(bandwidths[rng.random_range(0..bandwidths.len())]),
        arrival: 0,
        departure: rng.random_range(1..100),
        vnfs: (0..n)
            .map(|_| VnfSpec {
                base_cores: rng.random_range(1..=4),
                workload_cycles: rng.random_range(1.0e6..1.0e7),
            })
            .collect(),
        replica_flags: (0..n).map(|_| rng.random_bool(0.5)).collect(),
        boost_flags: (0..n).map(|_| rng.random_bool(0.5)).collect(),
        reliability_bound: reliabilities[rng.random_range(0..reliabilities.len())],
        delay_bound_s: delays[rng.random_range(0..delays.len())],
    }
}

/// Fills a fresh ledger with a random number of easily placeable requests
/// decided by the greedy bundle.
fn occupy_randomly(
    graph: &NetworkGraph,
    ledger: &mut ResourceLedger,
    bundle: &mut AgentBundle,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let fillers = rng.random_range(0..16);
    for seq in 0..fillers {
        let sources = graph.sources();
        let destinations = graph.destinations();
        let n = rng.random_range(2..=4);
        let filler = SfcRequest {
            id: SfcId { source: 9, seq },
            src: sources[rng.random_range(0..sources.len())],
            dst: destinations[rng.random_range(0..destinations.len())],
            bandwidth: Bandwidth::from_gbps([0.2, 1.0, 3.0][rng.random_range(0..3)]),
            arrival: 0,
            departure: 50,
            vnfs: (0..n)
                .map(|_| VnfSpec {
                    base_cores: rng.random_range(1..=3),
                    workload_cycles: rng.random_range(1.0e6..5.0e6),
                })
                .collect(),
            replica_flags: vec![false; n],
            boost_flags: vec![false; n],
            reliability_bound: 0.5,
            delay_bound_s: 1.0,
        };
        bundle
            .decide(graph, ledger, &filler)
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn greedy_bundle(graph: &NetworkGraph, seed: u64) -> Result<AgentBundle, String> {
    AgentBundle::new(
        BundleKind::HH,
        Mode::Eval,
        graph,
        BundleConfig::default(),
        seed,
    )
    .map_err(|e| e.to_string())
}

/// Compares `check_feasible` with its naive twin on randomized occupancy,
/// request, and deployment triples. Verdicts must match exactly and the
/// availability and delay figures to 1e-9. Also rejects degenerate
/// batteries that never exercise one side.
pub fn feasibility_battery(instances: usize, master_seed: u64) -> Result<String, String> {
    let graph = default_topology(derive_seed(master_seed, 1));
    let cfg = ConstraintConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 2));
    let mut bundle = greedy_bundle(&graph, 0)?;
    let mut feasible_seen = 0usize;
    let mut infeasible_seen = 0usize;

    for instance in 0..instances {
        let mut ledger = ResourceLedger::new(&graph);
        occupy_randomly(&graph, &mut ledger, &mut bundle, &mut rng)?;

        let request = random_probe_request(&mut rng, &graph, instance as u32, ProbeMenu::Adversarial);
        let candidates = match candidate_paths(&graph, request.src, request.dst, 8) {
            Ok(c) => c,
            Err(NetworkError::NoPath { .. }) => continue,
            Err(e) => return Err(format!("instance {instance}: {e}")),
        };
        let path = candidates[rng.random_range(0..candidates.len())].clone();
        let allocations: Vec<VnfAllocation> = request
            .vnfs
            .iter()
            .enumerate()
            .map(|(k, vnf)| VnfAllocation {
                base: vnf.base_cores,
                boost: if request.boost_flags[k] {
                    rng.random_range(0..=2)
                } else {
                    0
                },
                replicas: if request.replica_flags[k] {
                    rng.random_range(0..=2)
                } else {
                    0
                },
            })
            .collect();
        let table = enumerate_patterns(request.vnf_count(), path.compute_len())
            .map_err(|e| e.to_string())?;
        let pattern = table[rng.random_range(0..table.len())].clone();
        let placement =
            pattern_to_placement(&pattern, &path, &request).map_err(|e| e.to_string())?;
        let deployment = Deployment {
            path,
            pattern,
            placement,
            allocations,
        };

        let fast = check_feasible(&ledger, &request, &deployment, &cfg);
        let naive = naive_check_feasible(&graph, &ledger, &request, &deployment, &cfg);
        let fast_bits = (
            fast.bandwidth_ok,
            fast.compute_ok,
            fast.reliability_ok,
            fast.delay_ok,
        );
        let naive_bits = (
            naive.bandwidth_ok,
            naive.compute_ok,
            naive.reliability_ok,
            naive.delay_ok,
        );
        if fast_bits != naive_bits {
            return Err(format!(
                "instance {instance}: verdicts diverge: {fast:?} vs naive {naive:?}"
            ));
        }
        if (fast.availability - naive.availability).abs() > 1e-9 {
            return Err(format!(
                "instance {instance}: availability {} vs naive {}",
                fast.availability, naive.availability
            ));
        }
        if (fast.delay_s - naive.delay_s).abs() > 1e-9 {
            return Err(format!(
                "instance {instance}: delay {} vs naive {}",
                fast.delay_s, naive.delay_s
            ));
        }
        if fast.feasible() {
            feasible_seen += 1;
        } else {
            infeasible_seen += 1;
        }
    }

    if feasible_seen == 0 || infeasible_seen == 0 {
        return Err(format!(
            "degenerate battery: {feasible_seen} feasible vs {infeasible_seen} infeasible"
        ));
    }
    Ok(format!(
        "{instances} instances, {feasible_seen} feasible / {infeasible_seen} not"
    ))
}

/// Checks on randomized instances that the greedy bundle never out-earns
/// the exhaustive oracle and that the oracle's own deployments verify.
pub fn oracle_reward_bound_battery(instances: usize, master_seed: u64) -> Result<String, String> {
    let graph = default_topology(derive_seed(master_seed, 3));
    let cfg = ConstraintConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 4));
    let mut bundle = greedy_bundle(&graph, 0)?;
    let mut accepts = 0usize;

    for instance in 0..instances {
        let mut ledger = ResourceLedger::new(&graph);
        occupy_randomly(&graph, &mut ledger, &mut bundle, &mut rng)?;
        let request = random_probe_request(&mut rng, &graph, instance as u32, ProbeMenu::Placeable);

        let oracle = oracle_best_placement(&graph, &ledger, &request, &cfg, 8)
            .map_err(|e| e.to_string())?;
        if let Some(best) = &oracle {
            best.deployment
                .validate(&request)
                .map_err(|e| format!("instance {instance}: oracle deployment malformed: {e}"))?;
            if !check_feasible(&ledger, &request, &best.deployment, &cfg).feasible() {
                return Err(format!(
                    "instance {instance}: oracle returned an infeasible deployment"
                ));
            }
        }

        let mut scratch = ledger.clone();
        let outcome = bundle
            .decide(&graph, &mut scratch, &request)
            .map_err(|e| e.to_string())?;
        if outcome.accepted() {
            accepts += 1;
            let Some(best) = &oracle else {
                return Err(format!(
                    "instance {instance}: greedy accepted but the oracle found nothing"
                ));
            };
            if outcome.reward > best.reward + 1e-9 {
                return Err(format!(
                    "instance {instance}: greedy profit {} beats the oracle's {}",
                    outcome.reward, best.reward
                ));
            }
        }
    }

    if accepts == 0 {
        return Err("degenerate battery: greedy never accepted".into());
    }
    Ok(format!("{instances} instances, {accepts} greedy accepts"))
}

/// Depth of the verification suite.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl FromStr for VerifyLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<VerifyLevel, String> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            other => Err(format!("unknown verify level {other:?}; expected fast or full")),
        }
    }
}

/// Outcome of one named verification check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the named verification checks. `Fast` keeps the batteries small;
/// `Full` scales them up and adds the placement-oracle bound.
pub fn run_suite(level: VerifyLevel) -> Vec<CheckResult> {
    let full = level == VerifyLevel::Full;
    let mut results = Vec::new();
    let mut record = |name: &'static str, outcome: Result<String, String>| {
        results.push(match outcome {
            Ok(detail) => CheckResult {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckResult {
                name,
                passed: false,
                detail,
            },
        });
    };

    record("pattern counting", check_pattern_counting());
    record(
        "constraint arithmetic",
        feasibility_battery(if full { 1_000 } else { 200 }, 11),
    );
    record("ledger conservation", check_ledger_conservation());
    record("gradient finite differences", check_gradients());
    record(
        "toy MDP learning",
        dqn_toy_mdp_check(5_000, 0.05).map(|worst| format!("worst |dQ| {worst:.4}")),
    );
    if full {
        record(
            "greedy never beats the oracle",
            oracle_reward_bound_battery(300, 13),
        );
    }
    results
}

fn check_pattern_counting() -> Result<String, String> {
    let known = [((3usize, 2usize), 4u64), ((2, 3), 6), ((3, 3), 10), ((4, 4), 35)];
    for ((n, m), expected) in known {
        let got = crate::patterns::pattern_count(n, m).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("pattern_count({n}, {m}) = {got}, expected {expected}"));
        }
    }
    for n in 1..=ORACLE_PATTERN_MAX {
        for m in 1..=ORACLE_PATTERN_MAX {
            let fast = crate::patterns::pattern_count(n, m).map_err(|e| e.to_string())?;
            let slow = oracle_pattern_count(n, m).map_err(|e| e.to_string())?;
            let closed = binomial((n + m - 1) as u64, (m - 1) as u64);
            if fast != slow || fast != closed {
                return Err(format!(
                    "({n}, {m}): count {fast}, oracle {slow}, binomial {closed}"
                ));
            }
            let listed = enumerate_patterns(n, m).map_err(|e| e.to_string())?;
            if listed.len() as u64 != fast {
                return Err(format!(
                    "({n}, {m}): enumerated {} patterns, count says {fast}",
                    listed.len()
                ));
            }
        }
    }
    Ok(format!(
        "counts, oracle, closed form, and enumeration agree up to ({max}, {max})",
        max = ORACLE_PATTERN_MAX
    ))
}

fn check_ledger_conservation() -> Result<String, String> {
    let cfg = crate::sim::SimConfig::default();
    let graph = default_topology(cfg.params.master_seed);
    let mut bundle = greedy_bundle(&graph, 0)?;
    let trace = crate::sim::run_episode_traced(&graph, &mut bundle, &cfg, 21)
        .map_err(|e| e.to_string())?;
    audit_reservation_log(&graph, &trace.events)?;
    if trace.metrics.accepted == 0 {
        return Err("episode accepted nothing; audit is vacuous".into());
    }
    Ok(format!(
        "{} accepts over {} offers, event log conserves capacity",
        trace.metrics.accepted, trace.metrics.offered
    ))
}

fn check_gradients() -> Result<String, String> {
    let layout = ObservationLayout::for_graph(
        &default_topology(0),
        EncodingConfig::default().v_max,
    );
    let deep = |input: usize, actions: usize| {
        let mut dims = vec![input];
        dims.extend([256, 256, 256, 256]);
        dims.push(actions);
        dims
    };
    let shapes: Vec<(Vec<usize>, usize)> = vec![
        (vec![6, 16, 8, 3], 1),
        (vec![2, 32, 32, 2], 1),
        (deep(layout.total(), 9), 4093),
        (deep(layout.pattern_total(), 35), 4093),
    ];
    let mut worst = 0.0f64;
    for (dims, stride) in shapes {
        let err = gradient_check(&dims, 5, stride);
        if err > 1e-4 {
            return Err(format!(
                "shape {dims:?}: finite-difference relative error {err:.2e}"
            ));
        }
        worst = worst.max(err);
    }
    Ok(format!("worst relative error {worst:.2e}"))
}
