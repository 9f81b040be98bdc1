//! Fixture builders shared by unit tests.

use crate::network::{candidate_paths, CandidatePath, NetworkGraph, Node, NodeKind};
use crate::types::{Bandwidth, SfcId};
use crate::workload::{SfcRequest, VnfSpec};

/// A straight-line topology S1 - C1 - ... - D1 with one link per entry of
/// `link_delays_s` (so `len - 1` compute nodes) and 10 GB/s links.
/// Nonpositive delays are clamped to a negligible epsilon to satisfy
/// validation.
pub(crate) fn single_path_graph(link_delays_s: &[f64], cores: u32) -> NetworkGraph {
    assert!(link_delays_s.len() >= 3, "need at least two compute nodes");
    let compute_count = link_delays_s.len() - 1;
    let mut nodes = vec![Node {
        name: "S1".into(),
        kind: NodeKind::Source,
        cores: 0,
    }];
    for i in 1..=compute_count {
        nodes.push(Node {
            name: format!("C{i}"),
            kind: NodeKind::Compute,
            cores,
        });
    }
    nodes.push(Node {
        name: "D1".into(),
        kind: NodeKind::Destination,
        cores: 0,
    });

    let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
    let links = link_delays_s
        .iter()
        .enumerate()
        .map(|(i, delay)| {
            (
                names[i].clone(),
                names[i + 1].clone(),
                Bandwidth::from_gbps(10.0),
                delay.max(1e-12),
            )
        })
        .collect();
    NetworkGraph::new(nodes, links).unwrap()
}

/// The unique candidate path of a [`single_path_graph`].
pub(crate) fn path_through(g: &NetworkGraph) -> CandidatePath {
    let src = g.sources()[0];
    let dst = g.destinations()[0];
    candidate_paths(g, src, dst, 1).unwrap().remove(0)
}

/// A request for the given (base_cores, workload_cycles) chain with generous
/// bounds and all flags off; tests tighten fields as needed.
pub(crate) fn request_with_chain(chain: &[(u32, f64)], g: &NetworkGraph) -> SfcRequest {
    SfcRequest {
        id: SfcId { source: 0, seq: 0 },
        src: g.sources()[0],
        dst: g.destinations()[0],
        bandwidth: Bandwidth::from_gbps(0.5),
        arrival: 0,
        departure: 10,
        vnfs: chain
            .iter()
            .map(|(base_cores, workload_cycles)| VnfSpec {
                base_cores: *base_cores,
                workload_cycles: *workload_cycles,
            })
            .collect(),
        replica_flags: vec![false; chain.len()],
        boost_flags: vec![false; chain.len()],
        reliability_bound: 0.01,
        delay_bound_s: 1.0e9,
    }
}
