//! Edge-network model: topology, candidate paths, and the resource ledger.

mod graph;
mod ledger;
mod paths;
mod topology;

pub use graph::{Link, NetworkGraph, Node, NodeKind};
pub use ledger::{LedgerEvent, Reservation, ResourceLedger};
pub use paths::{
    candidate_paths, CandidatePath, MAX_PATH_COMPUTE_NODES, MIN_PATH_COMPUTE_NODES,
};
pub use topology::{default_topology, default_topology_text, load_topology};

use thiserror::Error;

use crate::types::SfcId;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("topology parse error: {0}")]
    Parse(String),
    #[error("topology validation failed: {0}")]
    Validation(String),
    #[error("no candidate path from {src} to {dst}")]
    NoPath { src: String, dst: String },
    #[error("bad path query: {0}")]
    Query(String),
    #[error("capacity violated: {0}")]
    Capacity(String),
    #[error("no active reservation for {0}")]
    UnknownReservation(SfcId),
    #[error("{0} already holds a reservation")]
    DuplicateReservation(SfcId),
    #[error("ledger misuse: {0}")]
    Misuse(String),
}
