//! Placement, split catalog, power, latency and feasibility math.
//!
//! Units are fixed throughout: W, ms, Mbps and GOPS. Node energy-per-operation
//! is given in J per tera-operation and converted where it is used.

mod params;
mod placement;
mod power;
mod split;

use thiserror::Error;

pub use params::{default_links, LinkParams, ModelParams, NodeParams, NodeTable, SPEED_OF_LIGHT_M_PER_S};
pub use placement::{Configuration, NodeId, Placement};
pub use power::{
    check_constraints, normalize_power, power_normalizer, processing_power, propagation_latency, total_power,
    transmission_power, FeasibilityReport, PowerBreakdown,
};
pub use split::{
    computational_load, split_catalog, split_catalog_with_latency, traffic_demand, FunctionId, FunctionLoads,
    Side, SplitIndex, SplitOption, TrafficFormula, DEFAULT_LATENCY_REQ_MS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("split index {0} out of range 0..=6")]
    InvalidSplit(u8),
    #[error("invalid placement: CU at {cu} with DU at {du}")]
    InvalidPlacement { cu: NodeId, du: NodeId },
    #[error("no link parameters between {0} and {1}")]
    MissingLink(NodeId, NodeId),
    #[error("link from {0} to itself")]
    SelfLink(NodeId),
    #[error("RU traffic must be finite and non-negative, got {0}")]
    InvalidTraffic(f64),
    #[error("{name} must be valid, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("node {node}: {name} must be positive, got {value}")]
    InvalidNodeParameter { node: NodeId, name: &'static str, value: f64 },
    #[error("link {}-{}: {name} must be positive, got {value}", endpoints.0, endpoints.1)]
    InvalidLinkParameter { endpoints: (NodeId, NodeId), name: &'static str, value: f64 },
    #[error("latency requirement for split {split} must be positive, got {value}")]
    InvalidLatencyRequirement { split: usize, value: f64 },
}
