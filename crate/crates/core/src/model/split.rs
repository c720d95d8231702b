//! Functional split catalog and per-side computational loads.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Split option index `o` in `0..=6`. Higher values move more of the
/// protocol stack into the CU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SplitIndex(u8);

impl SplitIndex {
    pub const COUNT: usize = 7;
    pub const MIN: SplitIndex = SplitIndex(0);
    pub const MAX: SplitIndex = SplitIndex(6);

    pub fn new(o: u8) -> Result<Self, ModelError> {
        if (o as usize) < Self::COUNT {
            Ok(SplitIndex(o))
        } else {
            Err(ModelError::InvalidSplit(o))
        }
    }

    pub fn all() -> impl Iterator<Item = SplitIndex> {
        (0..Self::COUNT as u8).map(SplitIndex)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Next split towards the CU, or `None` at the top.
    pub fn up(self) -> Option<SplitIndex> {
        (self.0 < Self::MAX.0).then(|| SplitIndex(self.0 + 1))
    }

    /// Next split towards the DU, or `None` at the bottom.
    pub fn down(self) -> Option<SplitIndex> {
        self.0.checked_sub(1).map(SplitIndex)
    }
}

impl TryFrom<u8> for SplitIndex {
    type Error = ModelError;

    fn try_from(o: u8) -> Result<Self, Self::Error> {
        SplitIndex::new(o)
    }
}

impl From<SplitIndex> for u8 {
    fn from(o: SplitIndex) -> u8 {
        o.0
    }
}

impl fmt::Display for SplitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// RAN protocol functions that are partitioned between DU and CU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionId {
    Phy,
    LowMac,
    HighMac,
    LowRlc,
    HighRlc,
    Pdcp,
}

impl FunctionId {
    /// Stack order, bottom (PHY) to top (PDCP).
    pub const ALL: [FunctionId; 6] = [
        FunctionId::Phy,
        FunctionId::LowMac,
        FunctionId::HighMac,
        FunctionId::LowRlc,
        FunctionId::HighRlc,
        FunctionId::Pdcp,
    ];
}

/// Which half of a disaggregated gNB is being asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Cu,
    Du,
}

/// Feeder-link traffic demand as a function of the RU load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrafficFormula {
    /// `slope * lambda + intercept` Mbps.
    Affine { slope: f64, intercept: f64 },
    /// Fixed rate in Mbps, independent of the RU load.
    Constant(f64),
}

impl TrafficFormula {
    pub fn eval(&self, lambda_ru: f64) -> f64 {
        match *self {
            TrafficFormula::Affine { slope, intercept } => slope * lambda_ru + intercept,
            TrafficFormula::Constant(v) => v,
        }
    }
}

/// One row of the split table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOption {
    pub index: SplitIndex,
    pub du_functions: Vec<FunctionId>,
    pub cu_functions: Vec<FunctionId>,
    pub latency_req_ms: f64,
    pub traffic: TrafficFormula,
}

/// Latency requirements per split in ms. Splits 1 and 2 carry a 1.5-10 ms
/// range; the permissive bound is used.
pub const DEFAULT_LATENCY_REQ_MS: [f64; 7] = [10.0, 10.0, 10.0, 0.1, 0.1, 0.25, 0.25];

/// Number of functions (bottom of the stack first) that stay in the DU.
const DU_FUNCTION_COUNT: [usize; 7] = [6, 5, 4, 3, 2, 1, 0];

const TRAFFIC: [TrafficFormula; 7] = [
    TrafficFormula::Affine { slope: 1.0, intercept: 0.0 },
    TrafficFormula::Affine { slope: 1.0, intercept: 0.0 },
    TrafficFormula::Affine { slope: 1.0, intercept: 0.0 },
    TrafficFormula::Affine { slope: 1.0, intercept: 0.0 },
    TrafficFormula::Affine { slope: 1.02, intercept: 1.5 },
    TrafficFormula::Affine { slope: 1.02, intercept: 1.5 },
    TrafficFormula::Constant(2500.0),
];

impl SplitOption {
    fn canonical(index: SplitIndex, latency_req_ms: f64) -> Self {
        let n_du = DU_FUNCTION_COUNT[index.index()];
        SplitOption {
            index,
            du_functions: FunctionId::ALL[..n_du].to_vec(),
            cu_functions: FunctionId::ALL[n_du..].to_vec(),
            latency_req_ms,
            traffic: TRAFFIC[index.index()],
        }
    }

    pub fn functions(&self, side: Side) -> &[FunctionId] {
        match side {
            Side::Cu => &self.cu_functions,
            Side::Du => &self.du_functions,
        }
    }
}

/// The seven canonical split options with default latency requirements.
pub fn split_catalog() -> Vec<SplitOption> {
    split_catalog_with_latency(&DEFAULT_LATENCY_REQ_MS)
}

pub fn split_catalog_with_latency(latency_req_ms: &[f64; 7]) -> Vec<SplitOption> {
    SplitIndex::all()
        .map(|o| SplitOption::canonical(o, latency_req_ms[o.index()]))
        .collect()
}

/// Per-function compute demand in GOPS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionLoads {
    pub comp_phy: f64,
    pub comp_mac: f64,
    pub comp_rlc: f64,
    pub comp_pdcp: f64,
    /// Share of the MAC load carried by low-MAC.
    pub mac_low_fraction: f64,
    /// Share of the RLC load carried by low-RLC.
    pub rlc_low_fraction: f64,
}

impl Default for FunctionLoads {
    fn default() -> Self {
        FunctionLoads {
            comp_phy: 1280.0,
            comp_mac: 50.0,
            comp_rlc: 50.0,
            comp_pdcp: 100.0,
            mac_low_fraction: 0.5,
            rlc_low_fraction: 0.5,
        }
    }
}

impl FunctionLoads {
    pub fn load_of(&self, f: FunctionId) -> f64 {
        match f {
            FunctionId::Phy => self.comp_phy,
            FunctionId::LowMac => self.comp_mac * self.mac_low_fraction,
            FunctionId::HighMac => self.comp_mac * (1.0 - self.mac_low_fraction),
            FunctionId::LowRlc => self.comp_rlc * self.rlc_low_fraction,
            FunctionId::HighRlc => self.comp_rlc * (1.0 - self.rlc_low_fraction),
            FunctionId::Pdcp => self.comp_pdcp,
        }
    }

    pub fn total(&self) -> f64 {
        self.comp_phy + self.comp_mac + self.comp_rlc + self.comp_pdcp
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let named = [
            ("comp_phy", self.comp_phy),
            ("comp_mac", self.comp_mac),
            ("comp_rlc", self.comp_rlc),
            ("comp_pdcp", self.comp_pdcp),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [
            ("mac_low_fraction", self.mac_low_fraction),
            ("rlc_low_fraction", self.rlc_low_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// Compute load in GOPS placed on one side of the split.
pub fn computational_load(split: SplitIndex, side: Side, loads: &FunctionLoads) -> f64 {
    let n_du = DU_FUNCTION_COUNT[split.index()];
    let funcs = match side {
        Side::Du => &FunctionId::ALL[..n_du],
        Side::Cu => &FunctionId::ALL[n_du..],
    };
    funcs.iter().map(|&f| loads.load_of(f)).sum()
}

/// Feeder traffic `TRA^o` in Mbps for RU load `lambda_ru`.
pub fn traffic_demand(split: SplitIndex, lambda_ru: f64) -> Result<f64, ModelError> {
    if !(lambda_ru >= 0.0 && lambda_ru.is_finite()) {
        return Err(ModelError::InvalidTraffic(lambda_ru));
    }
    Ok(TRAFFIC[split.index()].eval(lambda_ru))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s(o: u8) -> SplitIndex {
        SplitIndex::new(o).unwrap()
    }

    #[test]
    fn catalog_rows() {
        let cat = split_catalog();
        assert_eq!(cat.len(), 7);
        assert_eq!(cat[6].traffic.eval(0.0), 2500.0);
        assert_eq!(cat[6].traffic.eval(1234.0), 2500.0);
        assert_relative_eq!(cat[4].traffic.eval(100.0), 103.5, epsilon = 1e-12);
        assert_eq!(cat[0].traffic.eval(0.0), 0.0);
        let lat: Vec<f64> = cat.iter().map(|o| o.latency_req_ms).collect();
        assert_eq!(lat, vec![10.0, 10.0, 10.0, 0.1, 0.1, 0.25, 0.25]);
        for opt in &cat {
            let mut all: Vec<_> = opt.du_functions.iter().chain(&opt.cu_functions).copied().collect();
            all.sort();
            assert_eq!(all, FunctionId::ALL.to_vec());
            assert!(opt.latency_req_ms > 0.0);
        }
        assert!(cat[0].cu_functions.is_empty());
        assert!(cat[6].du_functions.is_empty());
        assert_eq!(cat[1].cu_functions, vec![FunctionId::Pdcp]);
    }

    #[test]
    fn loads_from_default_constants() {
        let l = FunctionLoads::default();
        assert_eq!(computational_load(s(3), Side::Du, &l), 1330.0);
        assert_eq!(computational_load(s(3), Side::Cu, &l), 150.0);
        assert_eq!(computational_load(s(0), Side::Cu, &l), 0.0);
        assert_eq!(computational_load(s(2), Side::Du, &l), 1355.0);
        assert_eq!(computational_load(s(5), Side::Cu, &l), 200.0);
        assert_eq!(computational_load(s(6), Side::Du, &l), 0.0);
    }

    #[test]
    fn traffic_demand_examples() {
        assert_eq!(traffic_demand(s(0), 150.0).unwrap(), 150.0);
        assert_relative_eq!(traffic_demand(s(5), 100.0).unwrap(), 103.5, epsilon = 1e-12);
        assert_eq!(traffic_demand(s(6), 0.0).unwrap(), 2500.0);
        assert!(matches!(traffic_demand(s(1), -1.0), Err(ModelError::InvalidTraffic(_))));
        assert!(traffic_demand(s(1), f64::NAN).is_err());
    }

    #[test]
    fn split_bounds() {
        assert!(SplitIndex::new(7).is_err());
        assert_eq!(s(6).up(), None);
        assert_eq!(s(0).down(), None);
        assert_eq!(s(3).up(), Some(s(4)));
    }

    proptest! {
        #[test]
        fn total_load_is_conserved(o in 0u8..7, phy in 0.0..5000.0f64, mac in 0.0..500.0f64,
                                   rlc in 0.0..500.0f64, pdcp in 0.0..500.0f64,
                                   fm in 0.0..=1.0f64, fr in 0.0..=1.0f64) {
            let l = FunctionLoads { comp_phy: phy, comp_mac: mac, comp_rlc: rlc, comp_pdcp: pdcp,
                                    mac_low_fraction: fm, rlc_low_fraction: fr };
            let sum = computational_load(s(o), Side::Cu, &l) + computational_load(s(o), Side::Du, &l);
            prop_assert!((sum - l.total()).abs() <= 1e-9 * l.total().max(1.0));
        }

        #[test]
        fn traffic_non_decreasing_in_split(lambda in 0.0..2449.0f64) {
            let mut prev = 0.0;
            for o in SplitIndex::all() {
                let t = traffic_demand(o, lambda).unwrap();
                prop_assert!(t >= prev);
                prop_assert!(t >= 0.0);
                prev = t;
            }
        }
    }
}
