//! Scenario files: one TOML document holding the topology reference and the
//! simulation, workload, DQN, and encoding sections. Every key has a
//! default, so an empty document is a valid scenario. Resolving a scenario
//! materializes the topology inline, and the resulting snapshot reproduces
//! the run with no external files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sfcsim_core::network::{default_topology_text, load_topology};
use sfcsim_core::{
    DqnConfig, EncodingConfig, NetworkGraph, SimConfig, SimParams, WorkloadConfig,
};

/// Errors loading or resolving a scenario file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("topology: {0}")]
    Topology(String),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Where the topology comes from: inline text wins, then a file next to the
/// scenario, then the built-in generator under `seed`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<String>,
    pub seed: u64,
}

/// One experiment's full configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologySection,
    pub sim: SimParams,
    pub workload: WorkloadConfig,
    pub dqn: DqnConfig,
    pub encoding: EncodingConfig,
}

/// A scenario with its topology loaded and every default filled in.
pub struct ResolvedScenario {
    pub graph: NetworkGraph,
    pub cfg: SimConfig,
    /// Self-contained copy: the topology is inlined, so serializing this
    /// reproduces the run without external files.
    pub snapshot: Scenario,
}

impl Scenario {
    /// Parses the scenario file at `path`.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ScenarioError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    /// Builds the graph and run configuration. A relative topology `path`
    /// is looked up under `base_dir` (the scenario file's directory).
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ResolvedScenario, ScenarioError> {
        let text = if let Some(inline) = &self.topology.inline {
            inline.clone()
        } else if let Some(rel) = &self.topology.path {
            let full = match base_dir {
                Some(dir) if rel.is_relative() => dir.join(rel),
                _ => rel.clone(),
            };
            fs::read_to_string(&full).map_err(|source| ScenarioError::Io {
                path: full.clone(),
                source,
            })?
        } else {
            default_topology_text(self.topology.seed)
        };
        let graph = load_topology(&text).map_err(|e| ScenarioError::Topology(e.to_string()))?;

        let mut snapshot = self.clone();
        snapshot.topology.inline = Some(text);
        snapshot.topology.path = None;

        let cfg = SimConfig {
            params: self.sim.clone(),
            workload: self.workload.clone(),
            dqn: self.dqn.clone(),
            encoding: self.encoding.clone(),
        };
        Ok(ResolvedScenario {
            graph,
            cfg,
            snapshot,
        })
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }
}
