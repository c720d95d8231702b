//! Simulation and learning toolkit for CU/DU functional-split placement in a
//! hybrid LEO satellite / HAPS / gateway O-RAN.
//!
//! - [`model`]: split catalog, compute loads, power, latency, constraints.
//! - [`traffic`]: RU load traces, synthetic or loaded from CSV.
//! - [`env`]: the placement MDP (state encoding, 18 actions, reward).
//! - [`agent`]: residual Q-network and the replay/target-network training loop.
//! - [`oracle`]: exhaustive per-step minimizer and exact trajectory DP.
//! - [`report`]: run metrics and CSV/JSONL/SVG emission.
//! - [`experiment`]: config file handling and the CLI subcommands.

pub mod agent;
pub mod env;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod traffic;
