use serde::{Deserialize, Serialize};

use super::placement::NodeId;
use super::split::{split_catalog_with_latency, FunctionLoads, SplitIndex, SplitOption, DEFAULT_LATENCY_REQ_MS};
use super::ModelError;

/// Speed of light used for every feeder link, m/s.
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.998e8;

/// Processor characteristics of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeParams {
    pub idle_power_w: f64,
    /// Energy per operation in joules per tera-operation.
    pub epo_j_per_to: f64,
    pub comp_max_gops: f64,
}

impl NodeParams {
    fn validate(&self, node: NodeId) -> Result<(), ModelError> {
        for (name, v) in [
            ("idle_power_w", self.idle_power_w),
            ("epo_j_per_to", self.epo_j_per_to),
            ("comp_max_gops", self.comp_max_gops),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidNodeParameter { node, name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeTable {
    #[serde(rename = "GAT")]
    pub gat: NodeParams,
    #[serde(rename = "SAT")]
    pub sat: NodeParams,
    #[serde(rename = "HAP")]
    pub hap: NodeParams,
}

impl NodeTable {
    pub fn get(&self, node: NodeId) -> &NodeParams {
        match node {
            NodeId::Gat => &self.gat,
            NodeId::Sat => &self.sat,
            NodeId::Hap => &self.hap,
        }
    }

    pub fn get_mut(&mut self, node: NodeId) -> &mut NodeParams {
        match node {
            NodeId::Gat => &mut self.gat,
            NodeId::Sat => &mut self.sat,
            NodeId::Hap => &mut self.hap,
        }
    }

    pub fn max_comp_gops(&self) -> f64 {
        NodeId::ALL
            .iter()
            .map(|&n| self.get(n).comp_max_gops)
            .fold(0.0, f64::max)
    }
}

impl Default for NodeTable {
    fn default() -> Self {
        NodeTable {
            gat: NodeParams { idle_power_w: 36.0, epo_j_per_to: 0.0742, comp_max_gops: 485_000.0 },
            sat: NodeParams { idle_power_w: 10.0, epo_j_per_to: 0.625, comp_max_gops: 32_000.0 },
            hap: NodeParams { idle_power_w: 7.5, epo_j_per_to: 5.64, comp_max_gops: 1_330.0 },
        }
    }
}

/// Symmetric feeder link between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub endpoints: (NodeId, NodeId),
    pub distance_m: f64,
    pub capacity_mbps: f64,
    /// Transmit power at full link capacity.
    pub tx_power_w: f64,
}

impl LinkParams {
    pub fn connects(&self, a: NodeId, b: NodeId) -> bool {
        self.endpoints == (a, b) || self.endpoints == (b, a)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let (a, b) = self.endpoints;
        if a == b {
            return Err(ModelError::SelfLink(a));
        }
        for (name, v) in [
            ("distance_m", self.distance_m),
            ("capacity_mbps", self.capacity_mbps),
            ("tx_power_w", self.tx_power_w),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidLinkParameter { endpoints: self.endpoints, name, value: v });
            }
        }
        Ok(())
    }
}

pub fn default_links() -> Vec<LinkParams> {
    vec![
        LinkParams {
            endpoints: (NodeId::Sat, NodeId::Gat),
            distance_m: 600_000.0,
            capacity_mbps: 100.0,
            tx_power_w: 35.0,
        },
        LinkParams {
            endpoints: (NodeId::Hap, NodeId::Gat),
            distance_m: 20_000.0,
            capacity_mbps: 10_000.0,
            tx_power_w: 4.0,
        },
    ]
}

/// Everything the power, latency and feasibility math reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub nodes: NodeTable,
    pub links: Vec<LinkParams>,
    pub loads: FunctionLoads,
    pub latency_req_ms: [f64; 7],
    /// Charge monolithic NTN gNBs for backhauling `lambda_ru` over their
    /// feeder link, and check that link's capacity.
    pub backhaul_mode: bool,
    /// RU load at which the power normalization constant is evaluated.
    pub peak_lambda_mbps: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            nodes: NodeTable::default(),
            links: default_links(),
            loads: FunctionLoads::default(),
            latency_req_ms: DEFAULT_LATENCY_REQ_MS,
            backhaul_mode: false,
            peak_lambda_mbps: 200.0,
        }
    }
}

impl ModelParams {
    pub fn link(&self, a: NodeId, b: NodeId) -> Result<&LinkParams, ModelError> {
        self.links
            .iter()
            .find(|l| l.connects(a, b))
            .ok_or(ModelError::MissingLink(a, b))
    }

    pub fn link_mut(&mut self, a: NodeId, b: NodeId) -> Result<&mut LinkParams, ModelError> {
        self.links
            .iter_mut()
            .find(|l| l.connects(a, b))
            .ok_or(ModelError::MissingLink(a, b))
    }

    pub fn latency_req(&self, split: SplitIndex) -> f64 {
        self.latency_req_ms[split.index()]
    }

    pub fn catalog(&self) -> Vec<SplitOption> {
        split_catalog_with_latency(&self.latency_req_ms)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for n in NodeId::ALL {
            self.nodes.get(n).validate(n)?;
        }
        for l in &self.links {
            l.validate()?;
        }
        self.loads.validate()?;
        for (o, &v) in self.latency_req_ms.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidLatencyRequirement { split: o, value: v });
            }
        }
        if !(self.peak_lambda_mbps.is_finite() && self.peak_lambda_mbps >= 0.0) {
            return Err(ModelError::InvalidParameter { name: "peak_lambda_mbps", value: self.peak_lambda_mbps });
        }
        Ok(())
    }

    /// Copy with every power-valued constant multiplied by `k`.
    pub fn scale_power(&self, k: f64) -> ModelParams {
        let mut p = self.clone();
        for n in NodeId::ALL {
            let np = p.nodes.get_mut(n);
            np.idle_power_w *= k;
            np.epo_j_per_to *= k;
        }
        for l in &mut p.links {
            l.tx_power_w *= k;
        }
        p
    }
}
