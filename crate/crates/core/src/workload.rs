//! Stochastic generation of service chain request streams.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::NetworkGraph;
use crate::types::{Bandwidth, NodeId, SfcId, TimeSlot};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload config: {0}")]
    Config(String),
    #[error("graph has no {0} access points")]
    NoAccessPoints(&'static str),
}

/// One network function of a chain: its base core demand and the cycles it
/// must process per unit of traffic.
#[derive(Clone, PartialEq, Debug)]
pub struct VnfSpec {
    pub base_cores: u32,
    pub workload_cycles: f64,
}

/// A service chain request, fixed at arrival.
#[derive(Clone, PartialEq, Debug)]
pub struct SfcRequest {
    pub id: SfcId,
    pub src: NodeId,
    pub dst: NodeId,
    pub bandwidth: Bandwidth,
    pub arrival: TimeSlot,
    pub departure: TimeSlot,
    pub vnfs: Vec<VnfSpec>,
    /// Per VNF: whether standby replicas may be added for reliability.
    pub replica_flags: Vec<bool>,
    /// Per VNF: whether processing cores may be added to cut delay.
    pub boost_flags: Vec<bool>,
    /// Minimum acceptable chain availability, in (0, 1].
    pub reliability_bound: f64,
    /// Maximum acceptable end-to-end delay, in seconds.
    pub delay_bound_s: f64,
}

impl SfcRequest {
    pub fn duration(&self) -> u64 {
        self.departure - self.arrival
    }

    pub fn vnf_count(&self) -> usize {
        self.vnfs.len()
    }

    pub fn total_base_cores(&self) -> u32 {
        self.vnfs.iter().map(|v| v.base_cores).sum()
    }
}

/// Parameters of the request stream.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub seed: u64,
    /// Expected arrivals per slot, aggregated over all source APs.
    pub arrival_rate: f64,
    /// Rate of the exponential holding time; mean duration is its inverse.
    pub departure_rate: f64,
    pub horizon: TimeSlot,
    pub bandwidth_menu_gbps: Vec<f64>,
    pub vnf_count_min: usize,
    pub vnf_count_max: usize,
    pub base_cores_min: u32,
    pub base_cores_max: u32,
    pub cycles_min: f64,
    pub cycles_max: f64,
    pub replica_flag_probability: f64,
    pub boost_flag_probability: f64,
    pub reliability_menu: Vec<f64>,
    pub delay_bound_menu_ms: Vec<f64>,
}

impl Default for WorkloadConfig {
    fn default() -> WorkloadConfig {
        WorkloadConfig {
            seed: 0,
            arrival_rate: 1.0 / 3.0,
            departure_rate: 0.005,
            horizon: 200,
            bandwidth_menu_gbps: vec![0.2, 0.5, 1.0],
            vnf_count_min: 2,
            vnf_count_max: 4,
            base_cores_min: 1,
            base_cores_max: 4,
            cycles_min: 1.0e6,
            cycles_max: 1.0e7,
            replica_flag_probability: 0.5,
            boost_flag_probability: 0.5,
            reliability_menu: vec![0.95, 0.97],
            delay_bound_menu_ms: vec![50.0, 100.0, 150.0],
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |msg: String| Err(WorkloadError::Config(msg));
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return bad(format!("arrival_rate must be positive, got {}", self.arrival_rate));
        }
        if !(self.departure_rate.is_finite() && self.departure_rate > 0.0) {
            return bad(format!(
                "departure_rate must be positive, got {}",
                self.departure_rate
            ));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1 slot".into());
        }
        if self.bandwidth_menu_gbps.is_empty()
            || self.bandwidth_menu_gbps.iter().any(|b| !b.is_finite() || *b <= 0.0)
        {
            return bad("bandwidth menu must be nonempty and positive".into());
        }
        if self.vnf_count_min < 1 || self.vnf_count_min > self.vnf_count_max {
            return bad(format!(
                "vnf count range [{}, {}] is invalid",
                self.vnf_count_min, self.vnf_count_max
            ));
        }
        if self.base_cores_min < 1 || self.base_cores_min > self.base_cores_max {
            return bad(format!(
                "base core range [{}, {}] is invalid",
                self.base_cores_min, self.base_cores_max
            ));
        }
        if !(self.cycles_min.is_finite() && self.cycles_min > 0.0)
            || self.cycles_max < self.cycles_min
        {
            return bad(format!(
                "cycle range [{}, {}] is invalid",
                self.cycles_min, self.cycles_max
            ));
        }
        for p in [self.replica_flag_probability, self.boost_flag_probability] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("flag probability {p} is outside [0, 1]"));
            }
        }
        if self.reliability_menu.is_empty()
            || self
                .reliability_menu
                .iter()
                .any(|t| !t.is_finite() || *t <= 0.0 || *t > 1.0)
        {
            return bad("reliability menu must be nonempty with values in (0, 1]".into());
        }
        if self.delay_bound_menu_ms.is_empty()
            || self
                .delay_bound_menu_ms
                .iter()
                .any(|d| !d.is_finite() || *d <= 0.0)
        {
            return bad("delay bound menu must be nonempty and positive".into());
        }
        Ok(())
    }
}

/// Generates the time-ordered request stream for one episode.
///
/// Arrival counts per slot are Poisson; holding times are exponential,
/// rounded up to at least one slot. Per request the draw order is fixed
/// (endpoints, bandwidth, chain, flags, bounds, duration) and is part of the
/// determinism contract: a given (config, graph) always yields the same
/// stream.
pub fn generate_stream(
    cfg: &WorkloadConfig,
    graph: &NetworkGraph,
) -> Result<Vec<SfcRequest>, WorkloadError> {
    cfg.validate()?;
    let sources = graph.sources();
    let destinations = graph.destinations();
    if sources.is_empty() {
        return Err(WorkloadError::NoAccessPoints("source"));
    }
    if destinations.is_empty() {
        return Err(WorkloadError::NoAccessPoints("destination"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrivals = Poisson::new(cfg.arrival_rate)
        .map_err(|e| WorkloadError::Config(format!("arrival_rate: {e}")))?;
    let holding = Exp::new(cfg.departure_rate)
        .map_err(|e| WorkloadError::Config(format!("departure_rate: {e}")))?;

    let mut stream = Vec::new();
    let mut next_seq = vec![0u32; sources.len()];
    for slot in 0..cfg.horizon {
        let count = arrivals.sample(&mut rng) as usize;
        for _ in 0..count {
            let si = rng.random_range(0..sources.len());
            let di = rng.random_range(0..destinations.len());
            let bandwidth = Bandwidth::from_gbps(pick(&mut rng, &cfg.bandwidth_menu_gbps));
            let vnf_count = rng.random_range(cfg.vnf_count_min..=cfg.vnf_count_max);
            let vnfs = (0..vnf_count)
                .map(|_| VnfSpec {
                    base_cores: rng.random_range(cfg.base_cores_min..=cfg.base_cores_max),
                    workload_cycles: rng.random_range(cfg.cycles_min..=cfg.cycles_max),
                })
                .collect();
            let replica_flags = (0..vnf_count)
                .map(|_| rng.random_bool(cfg.replica_flag_probability))
                .collect();
            let boost_flags = (0..vnf_count)
                .map(|_| rng.random_bool(cfg.boost_flag_probability))
                .collect();
            let reliability_bound = pick(&mut rng, &cfg.reliability_menu);
            let delay_bound_s = pick(&mut rng, &cfg.delay_bound_menu_ms) / 1000.0;
            let duration = holding.sample(&mut rng).ceil().max(1.0) as u64;

            stream.push(SfcRequest {
                id: SfcId {
                    source: si as u32,
                    seq: next_seq[si],
                },
                src: sources[si],
                dst: destinations[di],
                bandwidth,
                arrival: slot,
                departure: slot + duration,
                vnfs,
                replica_flags,
                boost_flags,
                reliability_bound,
                delay_bound_s,
            });
            next_seq[si] += 1;
        }
    }
    Ok(stream)
}

fn pick(rng: &mut ChaCha8Rng, menu: &[f64]) -> f64 {
    menu[rng.random_range(0..menu.len())]
}
