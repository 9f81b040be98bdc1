use std::collections::{HashMap, HashSet, VecDeque};

use crate::network::NetworkError;
use crate::types::{Bandwidth, LinkId, NodeId};

/// Role of a node in the network.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Source,
    Destination,
    Compute,
}

impl NodeKind {
    pub fn is_access_point(self) -> bool {
        matches!(self, NodeKind::Source | NodeKind::Destination)
    }
}

/// A node: access point or compute node. Access points have zero cores.
#[derive(Clone, Debug)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub cores: u32,
}

/// An undirected link with a bandwidth capacity and a transmission delay.
#[derive(Clone, Debug)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub capacity: Bandwidth,
    pub delay_s: f64,
}

impl Link {
    /// The endpoint opposite to `n`, if `n` is an endpoint at all.
    pub fn opposite(&self, n: NodeId) -> Option<NodeId> {
        if n == self.a {
            Some(self.b)
        } else if n == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Validated, immutable network topology.
#[derive(Clone, Debug)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
    by_name: HashMap<String, NodeId>,
}

impl NetworkGraph {
    /// Builds and validates a graph. Links reference nodes by name.
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<(String, String, Bandwidth, f64)>,
    ) -> Result<NetworkGraph, NetworkError> {
        let mut by_name = HashMap::new();
        for (idx, node) in nodes.iter().enumerate() {
            if node.name.is_empty() {
                return Err(NetworkError::Validation("empty node id".into()));
            }
            if by_name.insert(node.name.clone(), NodeId(idx)).is_some() {
                return Err(NetworkError::Validation(format!(
                    "duplicate node id \"{}\"",
                    node.name
                )));
            }
            match node.kind {
                NodeKind::Compute if node.cores == 0 => {
                    return Err(NetworkError::Validation(format!(
                        "compute node \"{}\" must have at least 1 core",
                        node.name
                    )));
                }
                NodeKind::Source | NodeKind::Destination if node.cores != 0 => {
                    return Err(NetworkError::Validation(format!(
                        "access point \"{}\" must not declare cores",
                        node.name
                    )));
                }
                _ => {}
            }
        }

        let mut resolved = Vec::with_capacity(links.len());
        let mut seen_pairs = HashSet::new();
        for (a_name, b_name, capacity, delay_s) in &links {
            let a = *by_name.get(a_name).ok_or_else(|| {
                NetworkError::Validation(format!("link endpoint \"{a_name}\" is not a node"))
            })?;
            let b = *by_name.get(b_name).ok_or_else(|| {
                NetworkError::Validation(format!("link endpoint \"{b_name}\" is not a node"))
            })?;
            if a == b {
                return Err(NetworkError::Validation(format!(
                    "self-loop on \"{a_name}\""
                )));
            }
            if !seen_pairs.insert((a.min(b), a.max(b))) {
                return Err(NetworkError::Validation(format!(
                    "duplicate link {a_name}-{b_name}"
                )));
            }
            if capacity.is_zero() {
                return Err(NetworkError::Validation(format!(
                    "link {a_name}-{b_name} has nonpositive capacity"
                )));
            }
            if !delay_s.is_finite() || *delay_s <= 0.0 {
                return Err(NetworkError::Validation(format!(
                    "link {a_name}-{b_name} has nonpositive delay"
                )));
            }
            resolved.push(Link {
                a,
                b,
                capacity: *capacity,
                delay_s: *delay_s,
            });
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (idx, link) in resolved.iter().enumerate() {
            adjacency[link.a.0].push((link.b, LinkId(idx)));
            adjacency[link.b.0].push((link.a, LinkId(idx)));
        }
        for list in &mut adjacency {
            list.sort_by(|(x, _), (y, _)| nodes[x.0].name.cmp(&nodes[y.0].name));
        }

        let graph = NetworkGraph {
            nodes,
            links: resolved,
            adjacency,
            by_name,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        if self.nodes.is_empty() {
            return Err(NetworkError::Validation("graph has no nodes".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for &(next, _) in &self.adjacency[n.0] {
                if !seen[next.0] {
                    seen[next.0] = true;
                    queue.push_back(next);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(idx) => Err(NetworkError::Validation(format!(
                "graph is not connected: \"{}\" unreachable from \"{}\"",
                self.nodes[idx].name, self.nodes[0].name
            ))),
            None => Ok(()),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, &Link)> {
        self.links.iter().enumerate().map(|(i, l)| (LinkId(i), l))
    }

    /// Neighbors of `n`, ordered by neighbor name.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[n.0]
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        self.adjacency[a.0]
            .iter()
            .find(|(next, _)| *next == b)
            .map(|(_, l)| *l)
    }

    pub fn sources(&self) -> Vec<NodeId> {
        self.of_kind(NodeKind::Source)
    }

    pub fn destinations(&self) -> Vec<NodeId> {
        self.of_kind(NodeKind::Destination)
    }

    pub fn compute_nodes(&self) -> Vec<NodeId> {
        self.of_kind(NodeKind::Compute)
    }

    fn of_kind(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes()
            .filter(|(_, n)| n.kind == kind)
            .map(|(id, _)| id)
            .collect()
    }
}
