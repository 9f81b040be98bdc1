//! Command-line front end for the placement simulator: scenario files,
//! subcommand plumbing, and CSV emission.

pub mod commands;
pub mod scenario;

pub use commands::{dispatch, Cli, Command, CommandError, EVAL_HEADER, SEED_ENV, SWEEP_HEADER};
pub use scenario::{ResolvedScenario, Scenario, ScenarioError};
