//! Power, propagation latency and constraint checks for one configuration.

use serde::{Deserialize, Serialize};

use super::params::{LinkParams, ModelParams, NodeTable, SPEED_OF_LIGHT_M_PER_S};
use super::placement::{Configuration, NodeId};
use super::split::{computational_load, traffic_demand, FunctionLoads, Side};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub processing_w: f64,
    pub transmission_w: f64,
    pub total_w: f64,
}

impl PowerBreakdown {
    fn new(processing_w: f64, transmission_w: f64) -> Self {
        PowerBreakdown {
            processing_w,
            transmission_w,
            total_w: processing_w + transmission_w,
        }
    }
}

fn find_link(links: &[LinkParams], a: NodeId, b: NodeId) -> Result<&LinkParams, ModelError> {
    links
        .iter()
        .find(|l| l.connects(a, b))
        .ok_or(ModelError::MissingLink(a, b))
}

/// One-way propagation delay between CU and DU in ms. Zero when co-located.
pub fn propagation_latency(cfg: &Configuration, links: &[LinkParams]) -> Result<f64, ModelError> {
    if cfg.is_monolithic() {
        return Ok(0.0);
    }
    let link = find_link(links, cfg.cu(), cfg.du())?;
    Ok(link.distance_m / SPEED_OF_LIGHT_M_PER_S * 1e3)
}

/// CU plus DU processing power in W.
///
/// A monolithic gNB pays each idle term at half weight, so the merged node
/// pays its idle power once. EPO is J/TO and loads are GOPS, hence `/1000`.
pub fn processing_power(cfg: &Configuration, nodes: &NodeTable, loads: &FunctionLoads) -> f64 {
    let idle_weight = if cfg.is_monolithic() { 0.5 } else { 1.0 };
    let cu = nodes.get(cfg.cu());
    let du = nodes.get(cfg.du());
    let cu_load = computational_load(cfg.split, Side::Cu, loads);
    let du_load = computational_load(cfg.split, Side::Du, loads);
    let p_cu = cu.idle_power_w * idle_weight + cu.epo_j_per_to * cu_load / 1000.0;
    let p_du = du.idle_power_w * idle_weight + du.epo_j_per_to * du_load / 1000.0;
    p_cu + p_du
}

/// Feeder transmission power in W.
///
/// Disaggregated placements carry the split traffic. Monolithic NTN nodes
/// carry nothing unless `backhaul_mode` is set, in which case they pay for
/// sending the raw RU load to the gateway.
pub fn transmission_power(cfg: &Configuration, lambda_ru: f64, params: &ModelParams) -> Result<f64, ModelError> {
    match feeder_flow(cfg, lambda_ru, params)? {
        Some((link, tra)) => Ok(link.tx_power_w / link.capacity_mbps * tra),
        None => Ok(0.0),
    }
}

/// The feeder link in use and the traffic it carries, if any.
fn feeder_flow<'a>(
    cfg: &Configuration,
    lambda_ru: f64,
    params: &'a ModelParams,
) -> Result<Option<(&'a LinkParams, f64)>, ModelError> {
    let tra = traffic_demand(cfg.split, lambda_ru)?;
    if !cfg.is_monolithic() {
        return Ok(Some((params.link(cfg.cu(), cfg.du())?, tra)));
    }
    if params.backhaul_mode && cfg.cu() != NodeId::Gat {
        return Ok(Some((params.link(cfg.cu(), NodeId::Gat)?, lambda_ru)));
    }
    Ok(None)
}

pub fn total_power(cfg: &Configuration, lambda_ru: f64, params: &ModelParams) -> Result<PowerBreakdown, ModelError> {
    let processing = processing_power(cfg, &params.nodes, &params.loads);
    let transmission = transmission_power(cfg, lambda_ru, params)?;
    Ok(PowerBreakdown::new(processing, transmission))
}

/// Outcome of the latency, traffic and compute constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub latency_ok: bool,
    pub traffic_ok: bool,
    pub compute_ok: bool,
    pub latency_ms: f64,
    pub latency_req_ms: f64,
    /// Traffic on the feeder link in use (0 when none is used).
    pub feeder_traffic_mbps: f64,
    /// Capacity of the feeder link in use (0 when none is used).
    pub feeder_capacity_mbps: f64,
    pub comp_load_gops: f64,
    pub comp_capacity_gops: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.latency_ok && self.traffic_ok && self.compute_ok
    }
}

pub fn check_constraints(cfg: &Configuration, lambda_ru: f64, params: &ModelParams) -> Result<FeasibilityReport, ModelError> {
    let latency_ms = propagation_latency(cfg, &params.links)?;
    let latency_req_ms = params.latency_req(cfg.split);
    // (1 - x_cc) zeroes the latency term for monolithic placements.
    let effective_latency = if cfg.is_monolithic() { 0.0 } else { latency_ms };

    let (traffic_ok, feeder_traffic_mbps, feeder_capacity_mbps) = match feeder_flow(cfg, lambda_ru, params)? {
        Some((link, tra)) => (tra <= link.capacity_mbps, tra, link.capacity_mbps),
        None => (true, 0.0, 0.0),
    };

    let comp_load_gops = computational_load(cfg.split, Side::Cu, &params.loads)
        + computational_load(cfg.split, Side::Du, &params.loads);
    // Capacities are summed even when CU and DU share a node.
    let comp_capacity_gops =
        params.nodes.get(cfg.cu()).comp_max_gops + params.nodes.get(cfg.du()).comp_max_gops;

    Ok(FeasibilityReport {
        latency_ok: effective_latency <= latency_req_ms,
        traffic_ok,
        compute_ok: comp_load_gops <= comp_capacity_gops,
        latency_ms,
        latency_req_ms,
        feeder_traffic_mbps,
        feeder_capacity_mbps,
        comp_load_gops,
        comp_capacity_gops,
    })
}

/// Largest feasible total power over all configurations at
/// `params.peak_lambda_mbps`. Falls back to the largest total power overall
/// when nothing is feasible.
pub fn power_normalizer(params: &ModelParams) -> Result<f64, ModelError> {
    let lambda = params.peak_lambda_mbps;
    let mut best_feasible: Option<f64> = None;
    let mut best_any = 0.0_f64;
    for cfg in Configuration::all() {
        let p = total_power(&cfg, lambda, params)?.total_w;
        best_any = best_any.max(p);
        if check_constraints(&cfg, lambda, params)?.is_feasible() {
            best_feasible = Some(best_feasible.map_or(p, |b| b.max(p)));
        }
    }
    Ok(best_feasible.unwrap_or(best_any))
}

/// `total_w / normalizer`, clamped to `[0, 1]`.
pub fn normalize_power(total_w: f64, normalizer_w: f64) -> f64 {
    if normalizer_w > 0.0 {
        (total_w / normalizer_w).clamp(0.0, 1.0)
    } else {
        0.0
    }
}
