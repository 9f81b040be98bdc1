//! Discrete-event simulator and learning agents for placing service function
//! chains on an edge network.
//!
//! The crate models an edge topology of access points and compute nodes,
//! generates stochastic request streams, and decides per request whether to
//! admit it, which candidate path it takes, how many extra replica and boost
//! cores each network function receives, and how the chain is distributed
//! over the path's compute nodes. Decisions come from trained DQN agents or
//! from greedy heuristics, in any combination; accepted requests hold cores
//! and bandwidth in an exact integer ledger until departure. Everything is
//! deterministic under a master seed.

pub mod encoding;
pub mod feasibility;
pub mod learn;
pub mod network;
pub mod patterns;
pub mod policy;
pub mod seeds;
pub mod sim;
pub mod types;
pub mod verify;
pub mod workload;

#[cfg(test)]
pub(crate) mod testutil;

pub use encoding::{EncodingConfig, Observation, ObservationLayout};
pub use feasibility::{ConstraintConfig, Deployment, FeasibilityReport, VnfAllocation};
pub use learn::{DqnAgent, DqnConfig, QNetwork};
pub use network::{CandidatePath, NetworkGraph, ResourceLedger};
pub use patterns::Pattern;
pub use policy::{AgentBundle, BundleConfig, BundleKind, Decision, Mode, PlacementOutcome, RejectReason};
pub use sim::{
    run_episode, run_evaluation, run_training, EpisodeMetrics, EvaluationSummary, SimConfig,
    SimParams, TrainingRun,
};
pub use types::{Bandwidth, LinkId, NodeId, SfcId, TimeSlot};
pub use verify::{run_suite, CheckResult, VerifyLevel};
pub use workload::{SfcRequest, VnfSpec, WorkloadConfig};
