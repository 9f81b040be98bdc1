use crate::network::graph::{NetworkGraph, NodeKind};
use crate::network::NetworkError;
use crate::types::{LinkId, NodeId};

/// Smallest number of compute nodes a candidate path may traverse.
pub const MIN_PATH_COMPUTE_NODES: usize = 2;
/// Largest number of compute nodes a candidate path may traverse. Together
/// with the chain-length range this bounds the pattern-agent family.
pub const MAX_PATH_COMPUTE_NODES: usize = 4;

/// A simple path from a source AP through compute nodes to a destination AP.
#[derive(Clone, PartialEq, Debug)]
pub struct CandidatePath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    /// Sum of link delays, in seconds.
    pub transmission_delay_s: f64,
}

impl CandidatePath {
    /// The compute nodes of the path, in path order.
    pub fn compute_nodes(&self) -> &[NodeId] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn compute_len(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }
}

/// Enumerates up to `k` candidate paths from `src` to `dst`, ordered by hop
/// count with ties broken by the lexicographic node-name sequence.
///
/// Interior nodes are compute nodes only, between [`MIN_PATH_COMPUTE_NODES`]
/// and [`MAX_PATH_COMPUTE_NODES`] of them, so every returned path supports
/// the full deployment-pattern range.
pub fn candidate_paths(
    g: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Result<Vec<CandidatePath>, NetworkError> {
    if g.node(src).kind != NodeKind::Source {
        return Err(NetworkError::Query(format!(
            "\"{}\" is not a source AP",
            g.name(src)
        )));
    }
    if g.node(dst).kind != NodeKind::Destination {
        return Err(NetworkError::Query(format!(
            "\"{}\" is not a destination AP",
            g.name(dst)
        )));
    }
    if k == 0 {
        return Err(NetworkError::Query("k must be at least 1".into()));
    }

    let mut found = Vec::new();
    let mut visited = vec![false; g.node_count()];
    visited[src.0] = true;
    let mut node_stack = vec![src];
    let mut link_stack = Vec::new();
    walk(g, dst, &mut visited, &mut node_stack, &mut link_stack, &mut found);

    if found.is_empty() {
        return Err(NetworkError::NoPath {
            src: g.name(src).to_string(),
            dst: g.name(dst).to_string(),
        });
    }

    found.sort_by(|x, y| {
        x.nodes.len().cmp(&y.nodes.len()).then_with(|| {
            let xn = x.nodes.iter().map(|n| g.name(*n));
            let yn = y.nodes.iter().map(|n| g.name(*n));
            xn.cmp(yn)
        })
    });
    found.truncate(k);
    Ok(found)
}

fn walk(
    g: &NetworkGraph,
    dst: NodeId,
    visited: &mut Vec<bool>,
    node_stack: &mut Vec<NodeId>,
    link_stack: &mut Vec<LinkId>,
    found: &mut Vec<CandidatePath>,
) {
    let here = *node_stack.last().unwrap();
    let interior = node_stack.len() - 1;
    for &(next, link) in g.neighbors(here) {
        if next == dst {
            if (MIN_PATH_COMPUTE_NODES..=MAX_PATH_COMPUTE_NODES).contains(&interior) {
                let mut nodes = node_stack.clone();
                nodes.push(dst);
                let mut links = link_stack.clone();
                links.push(link);
                let transmission_delay_s = links.iter().map(|l| g.link(*l).delay_s).sum();
                found.push(CandidatePath {
                    nodes,
                    links,
                    transmission_delay_s,
                });
            }
            continue;
        }
        if visited[next.0]
            || g.node(next).kind != NodeKind::Compute
            || interior == MAX_PATH_COMPUTE_NODES
        {
            continue;
        }
        visited[next.0] = true;
        node_stack.push(next);
        link_stack.push(link);
        walk(g, dst, visited, node_stack, link_stack, found);
        link_stack.pop();
        node_stack.pop();
        visited[next.0] = false;
    }
}
