//! The placement MDP: state encoding, 18 composite actions, shaped reward and
//! a deterministic transition driven by an RU traffic trace.
//!
//! A state observed at trace index `n` carries the load `lambda[n]`. Taking an
//! action moves the cursor to `n + 1`; the reward and the next state are both
//! evaluated for the new configuration at `lambda[n + 1]`. The trace wraps
//! around, so episodes may start anywhere.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    check_constraints, computational_load, normalize_power, power_normalizer, propagation_latency, total_power,
    traffic_demand, Configuration, ModelError, ModelParams, Placement, PowerBreakdown, Side, SplitIndex,
};
use crate::traffic::TrafficSample;

pub const ACTION_COUNT: usize = 18;
/// 7-way split one-hot, 5-way placement one-hot, 10 scalars.
pub const STATE_DIM: usize = 22;
pub const DEFAULT_EPISODE_LEN: usize = 100;

const MAX_TRAFFIC_MBPS: f64 = 2500.0;
const LATENCY_SCALE_MS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("traffic trace is empty")]
    EmptyTrace,
    #[error("episode length must be at least 1")]
    ZeroEpisodeLength,
    #[error("episode is done; call reset first")]
    EpisodeDone,
    #[error("environment has not been reset")]
    NotReset,
    #[error("action index {0} out of range")]
    InvalidAction(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid reward weight {name}: {value}")]
    InvalidWeight { name: &'static str, value: f64 },
}

/// First half of an action: where to put the CU and DU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlacementAction {
    Set(Placement),
    Keep,
}

/// Second half of an action: move the split point. `Up` increments the
/// split index, pulling one more function into the CU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMove {
    Up,
    Down,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub placement: PlacementAction,
    pub split: SplitMove,
}

impl Action {
    const SPLIT_MOVES: [SplitMove; 3] = [SplitMove::Up, SplitMove::Down, SplitMove::Hold];

    /// Index in `0..18`: placement-major, with `Keep` as placement slot 5.
    pub fn index(&self) -> usize {
        let p = match self.placement {
            PlacementAction::Set(p) => p.index(),
            PlacementAction::Keep => 5,
        };
        let s = match self.split {
            SplitMove::Up => 0,
            SplitMove::Down => 1,
            SplitMove::Hold => 2,
        };
        p * 3 + s
    }

    pub fn from_index(i: usize) -> Option<Action> {
        if i >= ACTION_COUNT {
            return None;
        }
        let placement = match Placement::from_index(i / 3) {
            Some(p) => PlacementAction::Set(p),
            None => PlacementAction::Keep,
        };
        Some(Action { placement, split: Self::SPLIT_MOVES[i % 3] })
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..ACTION_COUNT).filter_map(Action::from_index)
    }

    pub fn label(&self) -> String {
        let p = match self.placement {
            PlacementAction::Set(p) => p.label(),
            PlacementAction::Keep => "keep",
        };
        let s = match self.split {
            SplitMove::Up => "up",
            SplitMove::Down => "down",
            SplitMove::Hold => "hold",
        };
        format!("{p}/{s}")
    }
}

/// Configuration reached by applying `action` to `cfg`. Split moves past
/// either end are clamped.
pub fn apply_action(cfg: &Configuration, action: Action) -> Configuration {
    let placement = match action.placement {
        PlacementAction::Set(p) => p,
        PlacementAction::Keep => cfg.placement,
    };
    let split = match action.split {
        SplitMove::Up => cfg.split.up().unwrap_or(cfg.split),
        SplitMove::Down => cfg.split.down().unwrap_or(cfg.split),
        SplitMove::Hold => cfg.split,
    };
    Configuration { placement, split }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub latency: f64,
    pub traffic: f64,
    pub compute: f64,
    pub placement_change: f64,
    pub split_change: f64,
    /// Weight of the `1 - normalized power` shaping term; 0 disables it.
    pub power: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            latency: 1.0,
            traffic: 1.0,
            compute: 1.0,
            placement_change: 0.25,
            split_change: 0.25,
            power: 1.0,
        }
    }
}

impl RewardWeights {
    /// Constraint and change terms only, no power shaping.
    pub fn constraint_only() -> Self {
        RewardWeights { power: 0.0, ..Self::default() }
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("latency", self.latency),
            ("traffic", self.traffic),
            ("compute", self.compute),
            ("placement_change", self.placement_change),
            ("split_change", self.split_change),
            ("power", self.power),
        ]
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(EnvError::InvalidWeight { name, value });
            }
        }
        Ok(())
    }

    fn linear(&self) -> [f64; 5] {
        [self.latency, self.traffic, self.compute, self.placement_change, self.split_change]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Latency, traffic, compute, placement change, split change.
    pub terms: [i8; 5],
    /// Weighted power shaping contribution.
    pub power_term: f64,
    pub total: f64,
}

/// Reward weights together with the power normalization they are applied with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub weights: RewardWeights,
    pub normalizer_w: f64,
}

impl RewardModel {
    pub fn new(weights: RewardWeights, params: &ModelParams) -> Result<Self, EnvError> {
        weights.validate()?;
        Ok(RewardModel { weights, normalizer_w: power_normalizer(params)? })
    }

    pub fn compute(
        &self,
        prev: &Configuration,
        new: &Configuration,
        lambda_ru: f64,
        params: &ModelParams,
    ) -> Result<RewardBreakdown, ModelError> {
        let sign = |ok: bool| if ok { 1 } else { -1 };
        let report = check_constraints(new, lambda_ru, params)?;
        let terms = [
            sign(report.latency_ok),
            sign(report.traffic_ok),
            sign(report.compute_ok),
            -((prev.placement != new.placement) as i8),
            -((prev.split != new.split) as i8),
        ];
        let linear: f64 = self.weights.linear().iter().zip(terms).map(|(w, r)| w * r as f64).sum();
        let power_term = if self.weights.power > 0.0 {
            let p = total_power(new, lambda_ru, params)?.total_w;
            self.weights.power * (1.0 - normalize_power(p, self.normalizer_w))
        } else {
            0.0
        };
        Ok(RewardBreakdown { terms, power_term, total: linear + power_term })
    }
}

/// Reward for moving from `prev` to `new` under RU load `lambda_ru`.
pub fn compute_reward(
    prev: &Configuration,
    new: &Configuration,
    lambda_ru: f64,
    params: &ModelParams,
    weights: &RewardWeights,
) -> Result<RewardBreakdown, EnvError> {
    Ok(RewardModel::new(*weights, params)?.compute(prev, new, lambda_ru, params)?)
}

/// Divisors applied to the scalar state features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingScales {
    pub traffic_mbps: f64,
    pub latency_ms: f64,
    pub power_w: f64,
    pub capacity_mbps: f64,
    pub comp_gops: f64,
}

impl EncodingScales {
    pub fn new(params: &ModelParams, normalizer_w: f64) -> Self {
        let capacity = params.links.iter().map(|l| l.capacity_mbps).fold(0.0, f64::max);
        EncodingScales {
            traffic_mbps: MAX_TRAFFIC_MBPS,
            latency_ms: LATENCY_SCALE_MS,
            power_w: if normalizer_w > 0.0 { normalizer_w } else { 1.0 },
            capacity_mbps: if capacity > 0.0 { capacity } else { 1.0 },
            comp_gops: params.nodes.max_comp_gops(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub config: Configuration,
    pub traffic_mbps: f64,
    pub latency_req_ms: f64,
    pub lambda_ru_mbps: f64,
    pub power: PowerBreakdown,
    pub latency_ms: f64,
    /// Feeder capacity between CU and DU; 0 when co-located.
    pub link_capacity_mbps: f64,
    pub comp_cu_gops: f64,
    pub comp_du_gops: f64,
    pub comp_max_cu_gops: f64,
    pub comp_max_du_gops: f64,
    pub time_of_day_h: f64,
    pub scales: EncodingScales,
}

impl EnvState {
    pub fn observe(
        config: Configuration,
        lambda_ru: f64,
        time_of_day_h: f64,
        params: &ModelParams,
        scales: EncodingScales,
    ) -> Result<EnvState, ModelError> {
        let link_capacity_mbps = if config.is_monolithic() {
            0.0
        } else {
            params.link(config.cu(), config.du())?.capacity_mbps
        };
        Ok(EnvState {
            config,
            traffic_mbps: traffic_demand(config.split, lambda_ru)?,
            latency_req_ms: params.latency_req(config.split),
            lambda_ru_mbps: lambda_ru,
            power: total_power(&config, lambda_ru, params)?,
            latency_ms: propagation_latency(&config, &params.links)?,
            link_capacity_mbps,
            comp_cu_gops: computational_load(config.split, Side::Cu, &params.loads),
            comp_du_gops: computational_load(config.split, Side::Du, &params.loads),
            comp_max_cu_gops: params.nodes.get(config.cu()).comp_max_gops,
            comp_max_du_gops: params.nodes.get(config.du()).comp_max_gops,
            time_of_day_h,
            scales,
        })
    }

    pub fn split(&self) -> SplitIndex {
        self.config.split
    }

    pub fn encode(&self) -> [f64; STATE_DIM] {
        let mut x = [0.0; STATE_DIM];
        x[self.config.split.index()] = 1.0;
        x[SplitIndex::COUNT + self.config.placement.index()] = 1.0;
        let s = &self.scales;
        let scalars = [
            self.traffic_mbps / s.traffic_mbps,
            self.latency_req_ms / s.latency_ms,
            self.lambda_ru_mbps / s.traffic_mbps,
            self.power.total_w / s.power_w,
            self.latency_ms / s.latency_ms,
            self.link_capacity_mbps / s.capacity_mbps,
            self.comp_cu_gops / s.comp_gops,
            self.comp_du_gops / s.comp_gops,
            self.comp_max_cu_gops / s.comp_gops,
            self.comp_max_du_gops / s.comp_gops,
        ];
        x[12..].copy_from_slice(&scalars);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialConfig {
    Fixed(Configuration),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: RewardBreakdown,
    pub done: bool,
}

/// One JSON-lines transcript entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub step: usize,
    pub lambda_ru_mbps: f64,
    pub action: usize,
    pub action_label: String,
    pub configuration: Configuration,
    pub reward: RewardBreakdown,
    pub power: PowerBreakdown,
}

pub fn write_transcript<W: Write>(mut w: W, records: &[TranscriptRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct NtnEnv {
    params: ModelParams,
    reward: RewardModel,
    lambdas: Vec<f64>,
    hours: Vec<f64>,
    episode_len: usize,
    scales: EncodingScales,
    cursor: usize,
    steps: usize,
    state: Option<EnvState>,
}

impl NtnEnv {
    pub fn new(
        trace: &[TrafficSample],
        params: ModelParams,
        weights: RewardWeights,
        episode_len: usize,
    ) -> Result<Self, EnvError> {
        if trace.is_empty() {
            return Err(EnvError::EmptyTrace);
        }
        if episode_len == 0 {
            return Err(EnvError::ZeroEpisodeLength);
        }
        params.validate()?;
        let reward = RewardModel::new(weights, &params)?;
        let scales = EncodingScales::new(&params, reward.normalizer_w);
        Ok(NtnEnv {
            lambdas: trace.iter().map(|s| s.lambda_ru_mbps).collect(),
            hours: trace.iter().map(|s| s.time_of_day_h).collect(),
            params,
            reward,
            episode_len,
            scales,
            cursor: 0,
            steps: 0,
            state: None,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn reward_model(&self) -> &RewardModel {
        &self.reward
    }

    pub fn episode_len(&self) -> usize {
        self.episode_len
    }

    pub fn trace_len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambda_at(&self, index: usize) -> f64 {
        self.lambdas[index % self.lambdas.len()]
    }

    pub fn hour_at(&self, index: usize) -> f64 {
        self.hours[index % self.hours.len()]
    }

    /// The `episode_len + 1` loads an episode starting at `start` sees.
    pub fn episode_lambdas(&self, start: usize) -> Vec<f64> {
        (0..=self.episode_len).map(|i| self.lambda_at(start + i)).collect()
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    fn observe(&self, config: Configuration, index: usize) -> Result<EnvState, ModelError> {
        EnvState::observe(config, self.lambda_at(index), self.hour_at(index), &self.params, self.scales)
    }

    /// Start an episode at trace index `start`.
    pub fn reset(&mut self, start: usize, initial: InitialConfig, seed: u64) -> Result<EnvState, EnvError> {
        let config = match initial {
            InitialConfig::Fixed(c) => c,
            InitialConfig::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Configuration::from_index(rng.gen_range(0..Configuration::COUNT)).expect("index in range")
            }
        };
        self.cursor = start % self.lambdas.len();
        self.steps = 0;
        let state = self.observe(config, self.cursor)?;
        self.state = Some(state);
        Ok(state)
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.episode_len
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        let prev = self.state.ok_or(EnvError::NotReset)?;
        if self.is_done() {
            return Err(EnvError::EpisodeDone);
        }
        let config = apply_action(&prev.config, action);
        let next_index = self.cursor + 1;
        let lambda = self.lambda_at(next_index);
        let reward = self.reward.compute(&prev.config, &config, lambda, &self.params)?;
        let state = self.observe(config, next_index)?;
        self.cursor = next_index % self.lambdas.len();
        self.steps += 1;
        self.state = Some(state);
        Ok(StepOutcome { state, reward, done: self.is_done() })
    }

    pub fn step_index(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        self.step(Action::from_index(action).ok_or(EnvError::InvalidAction(action))?)
    }
}
