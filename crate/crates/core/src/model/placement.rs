use std::fmt;

use serde::{Deserialize, Serialize};

use super::split::SplitIndex;
use super::ModelError;

/// Processing node that can host a CU or a DU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeId {
    /// Ground gateway.
    Gat,
    /// LEO satellite.
    Sat,
    /// High-altitude platform station.
    Hap,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::Gat, NodeId::Sat, NodeId::Hap];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeId::Gat => "GAT",
            NodeId::Sat => "SAT",
            NodeId::Hap => "HAP",
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The five admissible CU/DU placements.
///
/// Variant order is the canonical enumeration order and also the tie-break
/// order used by the oracle (lexicographic on DU node, then CU node).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    MonoGat,
    GatSat,
    MonoSat,
    GatHap,
    MonoHap,
}

impl Placement {
    pub const ALL: [Placement; 5] = [
        Placement::MonoGat,
        Placement::GatSat,
        Placement::MonoSat,
        Placement::GatHap,
        Placement::MonoHap,
    ];

    pub fn cu(self) -> NodeId {
        match self {
            Placement::MonoGat | Placement::GatSat | Placement::GatHap => NodeId::Gat,
            Placement::MonoSat => NodeId::Sat,
            Placement::MonoHap => NodeId::Hap,
        }
    }

    pub fn du(self) -> NodeId {
        match self {
            Placement::MonoGat => NodeId::Gat,
            Placement::GatSat | Placement::MonoSat => NodeId::Sat,
            Placement::GatHap | Placement::MonoHap => NodeId::Hap,
        }
    }

    pub fn is_monolithic(self) -> bool {
        self.cu() == self.du()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Placement> {
        Self::ALL.get(i).copied()
    }

    /// Placement for a (CU, DU) node pair. A disaggregated pair must have its
    /// CU at the gateway.
    pub fn from_nodes(cu: NodeId, du: NodeId) -> Result<Placement, ModelError> {
        match (cu, du) {
            (NodeId::Gat, NodeId::Gat) => Ok(Placement::MonoGat),
            (NodeId::Gat, NodeId::Sat) => Ok(Placement::GatSat),
            (NodeId::Sat, NodeId::Sat) => Ok(Placement::MonoSat),
            (NodeId::Gat, NodeId::Hap) => Ok(Placement::GatHap),
            (NodeId::Hap, NodeId::Hap) => Ok(Placement::MonoHap),
            _ => Err(ModelError::InvalidPlacement { cu, du }),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Placement::MonoGat => "mono@GAT",
            Placement::GatSat => "CU@GAT+DU@SAT",
            Placement::MonoSat => "mono@SAT",
            Placement::GatHap => "CU@GAT+DU@HAP",
            Placement::MonoHap => "mono@HAP",
        }
    }

    pub fn involves(self, node: NodeId) -> bool {
        self.cu() == node || self.du() == node
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A (CU node, DU node, split option) assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub placement: Placement,
    pub split: SplitIndex,
}

impl Configuration {
    /// Number of distinct configurations (5 placements x 7 splits).
    pub const COUNT: usize = 35;

    pub fn new(cu: NodeId, du: NodeId, split: SplitIndex) -> Result<Self, ModelError> {
        Ok(Configuration {
            placement: Placement::from_nodes(cu, du)?,
            split,
        })
    }

    pub const fn of(placement: Placement, split: SplitIndex) -> Self {
        Configuration { placement, split }
    }

    pub fn cu(&self) -> NodeId {
        self.placement.cu()
    }

    pub fn du(&self) -> NodeId {
        self.placement.du()
    }

    pub fn is_monolithic(&self) -> bool {
        self.placement.is_monolithic()
    }

    /// Dense index in `0..35`, placement-major.
    pub fn index(&self) -> usize {
        self.placement.index() * SplitIndex::COUNT + self.split.index()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        let placement = Placement::from_index(i / SplitIndex::COUNT)?;
        let split = SplitIndex::new((i % SplitIndex::COUNT) as u8).ok()?;
        Some(Configuration { placement, split })
    }

    pub fn all() -> impl Iterator<Item = Configuration> {
        (0..Self::COUNT).filter_map(Configuration::from_index)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/split{}", self.placement, self.split)
    }
}
