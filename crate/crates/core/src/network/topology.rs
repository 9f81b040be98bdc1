use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::network::graph::{NetworkGraph, Node, NodeKind};
use crate::network::NetworkError;
use crate::types::Bandwidth;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    #[serde(default)]
    node: Vec<NodeEntry>,
    #[serde(default)]
    link: Vec<LinkEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    kind: String,
    cores: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    a: String,
    b: String,
    capacity_gbps: f64,
    delay_ms: f64,
}

/// Parses and validates a TOML topology description.
///
/// Nodes are `[[node]]` tables with `id`, `kind` (`source`, `destination`,
/// `compute`) and, for compute nodes only, `cores`. Links are `[[link]]`
/// tables with endpoints `a`/`b`, `capacity_gbps`, and `delay_ms`.
pub fn load_topology(text: &str) -> Result<NetworkGraph, NetworkError> {
    let file: TopologyFile =
        toml::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;

    let mut nodes = Vec::with_capacity(file.node.len());
    for entry in &file.node {
        let kind = match entry.kind.as_str() {
            "source" => NodeKind::Source,
            "destination" => NodeKind::Destination,
            "compute" => NodeKind::Compute,
            other => {
                return Err(NetworkError::Validation(format!(
                    "node \"{}\": unknown kind \"{other}\"",
                    entry.id
                )));
            }
        };
        let cores = match (kind, entry.cores) {
            (NodeKind::Compute, Some(c)) => c,
            (NodeKind::Compute, None) => {
                return Err(NetworkError::Validation(format!(
                    "compute node \"{}\" is missing cores",
                    entry.id
                )));
            }
            (_, Some(_)) => {
                return Err(NetworkError::Validation(format!(
                    "node \"{}\": cores not allowed for kind \"{}\"",
                    entry.id, entry.kind
                )));
            }
            (_, None) => 0,
        };
        nodes.push(Node {
            name: entry.id.clone(),
            kind,
            cores,
        });
    }

    let mut links = Vec::with_capacity(file.link.len());
    for entry in &file.link {
        if !entry.capacity_gbps.is_finite() || entry.capacity_gbps <= 0.0 {
            return Err(NetworkError::Validation(format!(
                "link {}-{} has nonpositive capacity",
                entry.a, entry.b
            )));
        }
        links.push((
            entry.a.clone(),
            entry.b.clone(),
            Bandwidth::from_gbps(entry.capacity_gbps),
            entry.delay_ms / 1000.0,
        ));
    }

    NetworkGraph::new(nodes, links)
}

const DEFAULT_EDGES: [(&str, &str); 25] = [
    ("S1", "C1"),
    ("S1", "C2"),
    ("S2", "C2"),
    ("S2", "C3"),
    ("C1", "C4"),
    ("C1", "C5"),
    ("C2", "C5"),
    ("C2", "C6"),
    ("C3", "C6"),
    ("C3", "C7"),
    ("C4", "C5"),
    ("C6", "C7"),
    ("C4", "C8"),
    ("C5", "C8"),
    ("C5", "C9"),
    ("C6", "C9"),
    ("C6", "C10"),
    ("C7", "C10"),
    ("C1", "C8"),
    ("C2", "C9"),
    ("C3", "C10"),
    ("C8", "D1"),
    ("C9", "D1"),
    ("C9", "D2"),
    ("C10", "D2"),
];

/// Renders the built-in topology as TOML: two source APs, two destination
/// APs, and ten 32-core compute nodes in three tiers with cross-tier
/// shortcuts, so source-to-destination paths traverse 2 to 4 compute nodes.
///
/// Link capacities are drawn from {10, 15, 20} GB/s and delays uniformly
/// from [1, 5] ms, fixed by `seed`.
pub fn default_topology_text(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for name in ["S1", "S2"] {
        let _ = writeln!(out, "[[node]]\nid = \"{name}\"\nkind = \"source\"\n");
    }
    for name in ["D1", "D2"] {
        let _ = writeln!(out, "[[node]]\nid = \"{name}\"\nkind = \"destination\"\n");
    }
    for i in 1..=10 {
        let _ = writeln!(out, "[[node]]\nid = \"C{i}\"\nkind = \"compute\"\ncores = 32\n");
    }
    const CAPACITIES: [f64; 3] = [10.0, 15.0, 20.0];
    for (a, b) in DEFAULT_EDGES {
        let capacity = CAPACITIES[rng.random_range(0..CAPACITIES.len())];
        let delay_ms = (rng.random_range(1.0..=5.0f64) * 1000.0).round() / 1000.0;
        let _ = writeln!(
            out,
            "[[link]]\na = \"{a}\"\nb = \"{b}\"\ncapacity_gbps = {capacity:.1}\ndelay_ms = {delay_ms:.3}\n"
        );
    }
    out
}

/// The built-in topology, seeded as in [`default_topology_text`].
pub fn default_topology(seed: u64) -> NetworkGraph {
    load_topology(&default_topology_text(seed)).expect("generated topology is valid")
}
