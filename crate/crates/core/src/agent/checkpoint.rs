//! JSON checkpoint: versioned header, architecture, and per-layer row-major
//! weights.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Architecture, Dense, QNetwork, LAYER_NAMES};
use super::AgentError;

pub const CHECKPOINT_FORMAT: &str = "orbitsplit-qnetwork";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointLayer {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub layers: Vec<CheckpointLayer>,
}

impl Checkpoint {
    pub fn from_network(net: &QNetwork) -> Self {
        let layers = net
            .layers()
            .iter()
            .zip(LAYER_NAMES)
            .map(|(l, name)| CheckpointLayer {
                name: name.to_string(),
                rows: l.weight.nrows(),
                cols: l.weight.ncols(),
                weights: l.weight.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: net.architecture(),
            layers,
        }
    }

    pub fn into_network(self) -> Result<QNetwork, AgentError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(AgentError::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(AgentError::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let arch = self.architecture;
        if arch.input_dim == 0 || arch.hidden == 0 || arch.output_dim == 0 {
            return Err(AgentError::Checkpoint("zero-sized architecture".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.into_iter().enumerate() {
            if LAYER_NAMES.get(i) != Some(&l.name.as_str()) {
                return Err(AgentError::Checkpoint(format!("layer {i} named {:?}", l.name)));
            }
            if l.rows.checked_mul(l.cols) != Some(l.weights.len()) || l.bias.len() != l.rows {
                return Err(AgentError::Checkpoint(format!("layer {:?} has inconsistent sizes", l.name)));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(AgentError::Checkpoint(format!("layer {:?} has non-finite values", l.name)));
            }
            let weight = Array2::from_shape_vec((l.rows, l.cols), l.weights).expect("length checked");
            layers.push(Dense { weight, bias: Array1::from(l.bias) });
        }
        QNetwork::from_layers(arch, layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    /// Decode and validate a checkpoint.
    pub fn decode(bytes: &[u8]) -> Result<QNetwork, AgentError> {
        let ck: Checkpoint = serde_json::from_slice(bytes).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        ck.into_network()
    }
}

pub fn save_checkpoint(net: &QNetwork, path: &Path) -> Result<(), AgentError> {
    fs::write(path, Checkpoint::from_network(net).to_json())
        .map_err(|source| AgentError::Io { path: path.to_path_buf(), source })
}

pub fn load_checkpoint(path: &Path) -> Result<QNetwork, AgentError> {
    let bytes = fs::read(path).map_err(|source| AgentError::Io { path: path.to_path_buf(), source })?;
    Checkpoint::decode(&bytes)
}
