//! Builds the fixed-width observation vectors the agents consume.
//!
//! An observation is 2|N| + |E| + 3 + 3·V_max wide: residual node and link
//! capacity, the request's endpoints as a one-hot over nodes, three
//! normalized scalars (bandwidth, duration, delay bound), and three padded
//! per-VNF segments (cores, replica flags, boost flags). Pattern agents see
//! the same vector extended with a path membership one-hot over nodes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::VnfAllocation;
use crate::network::{CandidatePath, NetworkGraph, NodeKind, ResourceLedger};
use crate::workload::SfcRequest;

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("request has {got} VNFs but the layout allows {max}")]
    TooManyVnfs { got: usize, max: usize },
    #[error("allocation list has {got} entries for a {expected}-VNF request")]
    AllocationMismatch { got: usize, expected: usize },
}

/// Normalization constants for the scalar and per-VNF segments.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// Widest chain the observation can carry; shorter chains are padded.
    pub v_max: usize,
    pub bandwidth_min_gbps: f64,
    pub bandwidth_max_gbps: f64,
    /// Durations are divided by this and clamped to 1.
    pub duration_scale: f64,
    pub delay_bound_min_ms: f64,
    pub delay_bound_max_ms: f64,
    /// Per-VNF core counts are divided by this and clamped to 1.
    pub cores_scale: f64,
}

impl Default for EncodingConfig {
    fn default() -> EncodingConfig {
        EncodingConfig {
            v_max: 4,
            bandwidth_min_gbps: 0.2,
            bandwidth_max_gbps: 1.0,
            duration_scale: 1000.0,
            delay_bound_min_ms: 50.0,
            delay_bound_max_ms: 150.0,
            cores_scale: 32.0,
        }
    }
}

/// The fixed segment geometry of observations for one graph.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ObservationLayout {
    pub n_nodes: usize,
    pub n_links: usize,
    pub v_max: usize,
}

impl ObservationLayout {
    pub fn for_graph(graph: &NetworkGraph, v_max: usize) -> ObservationLayout {
        ObservationLayout {
            n_nodes: graph.node_count(),
            n_links: graph.link_count(),
            v_max,
        }
    }

    /// Width of the base observation.
    pub fn total(&self) -> usize {
        2 * self.n_nodes + self.n_links + 3 + 3 * self.v_max
    }

    /// Width of the pattern observation (base plus path one-hot).
    pub fn pattern_total(&self) -> usize {
        self.total() + self.n_nodes
    }

    /// Canonical description of the segment order and sizes. Stored in
    /// checkpoints (hashed) so stale weights never silently read a
    /// reshaped observation.
    pub fn descriptor(&self) -> String {
        format!(
            "nodes={};links={};vmax={};segments=residual_nodes,residual_links,endpoints,scalars,vnf_cores,replica_flags,boost_flags",
            self.n_nodes, self.n_links, self.v_max
        )
    }

    /// FNV-1a hash of the descriptor; stable across builds and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.descriptor().into_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    }
}

/// One agent input vector; every entry lies in [0, 1].
#[derive(Clone, PartialEq, Debug)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: ObservationLayout,
}

/// Encodes the current ledger state and a pending request.
///
/// Access points occupy node slots fixed at zero. When `allocations` is
/// given (after core configuration), the per-VNF cores segment carries the
/// granted totals instead of the base demand.
pub fn encode_state(
    graph: &NetworkGraph,
    ledger: &ResourceLedger,
    request: &SfcRequest,
    allocations: Option<&[VnfAllocation]>,
    cfg: &EncodingConfig,
) -> Result<Observation, EncodingError> {
    let n = request.vnf_count();
    if n > cfg.v_max {
        return Err(EncodingError::TooManyVnfs {
            got: n,
            max: cfg.v_max,
        });
    }
    if let Some(allocs) = allocations {
        if allocs.len() != n {
            return Err(EncodingError::AllocationMismatch {
                got: allocs.len(),
                expected: n,
            });
        }
    }

    let layout = ObservationLayout::for_graph(graph, cfg.v_max);
    let mut values = Vec::with_capacity(layout.total());

    for (id, node) in graph.nodes() {
        if node.kind == NodeKind::Compute {
            values.push(ledger.residual_cores(id) as f64 / node.cores as f64);
        } else {
            values.push(0.0);
        }
    }
    for (id, link) in graph.links() {
        values.push(ledger.residual_bandwidth(id).as_milli() as f64 / link.capacity.as_milli() as f64);
    }
    for (id, _) in graph.nodes() {
        values.push(if id == request.src || id == request.dst {
            1.0
        } else {
            0.0
        });
    }

    values.push(min_max(
        request.bandwidth.as_gbps(),
        cfg.bandwidth_min_gbps,
        cfg.bandwidth_max_gbps,
    ));
    values.push((request.duration() as f64 / cfg.duration_scale).clamp(0.0, 1.0));
    values.push(min_max(
        request.delay_bound_s * 1000.0,
        cfg.delay_bound_min_ms,
        cfg.delay_bound_max_ms,
    ));

    for k in 0..cfg.v_max {
        if k < n {
            let cores = match allocations {
                Some(allocs) => allocs[k].total(),
                None => request.vnfs[k].base_cores,
            };
            values.push((cores as f64 / cfg.cores_scale).clamp(0.0, 1.0));
        } else {
            values.push(0.0);
        }
    }
    push_flags(&mut values, &request.replica_flags, cfg.v_max);
    push_flags(&mut values, &request.boost_flags, cfg.v_max);

    debug_assert_eq!(values.len(), layout.total());
    Ok(Observation { values, layout })
}

fn push_flags(values: &mut Vec<f64>, flags: &[bool], v_max: usize) {
    for k in 0..v_max {
        values.push(if flags.get(k).copied().unwrap_or(false) {
            1.0
        } else {
            0.0
        });
    }
}

fn min_max(value: f64, min: f64, max: f64) -> f64 {
    if max <= min {
        return 1.0;
    }
    ((value - min) / (max - min)).clamp(0.0, 1.0)
}

/// Membership one-hot over all nodes for a chosen path.
pub fn encode_path(graph: &NetworkGraph, path: &CandidatePath) -> Vec<f64> {
    let mut values = vec![0.0; graph.node_count()];
    for node in &path.nodes {
        values[node.0] = 1.0;
    }
    values
}

/// The pattern-agent input: base observation extended with the path one-hot.
pub fn pattern_observation(observation: &Observation, path_one_hot: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(observation.values.len() + path_one_hot.len());
    values.extend_from_slice(&observation.values);
    values.extend_from_slice(path_one_hot);
    values
}
