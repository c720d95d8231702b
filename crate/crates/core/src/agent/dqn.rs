//! Experience-replay DQN with a periodically synced target network.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{argmax, Architecture, QNetwork};
use super::replay::{ReplayBuffer, Transition};
use super::rmsprop::{clip_global_norm, RmsProp};
use super::AgentError;
use crate::env::{EnvState, InitialConfig, NtnEnv, ACTION_COUNT};
use crate::model::{normalize_power, Placement};
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentHyperparams {
    pub discount: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_sync_period: usize,
    pub rms_decay: f64,
    pub rms_eps: f64,
    /// Global-norm gradient clip; 0 disables clipping.
    pub grad_clip_norm: f64,
    pub hidden: usize,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for AgentHyperparams {
    fn default() -> Self {
        AgentHyperparams {
            discount: 0.9,
            learning_rate: 1e-4,
            epsilon_start: 0.5,
            epsilon_decay: 0.995,
            epsilon_min: 0.0005,
            batch_size: 32,
            replay_capacity: 200,
            target_sync_period: 100,
            rms_decay: 0.99,
            rms_eps: 1e-8,
            grad_clip_norm: 10.0,
            hidden: 128,
            episodes: 500,
            seed: 0,
        }
    }
}

impl AgentHyperparams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |name: &'static str, why: &str| Err(AgentError::InvalidHyperparameter { name, reason: why.into() });
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount", "must be in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) {
            return bad("epsilon_start", "must be in [0, 1]");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return bad("epsilon_decay", "must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon_min", "must be in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.batch_size > self.replay_capacity {
            return bad("batch_size", "must not exceed replay_capacity");
        }
        if self.target_sync_period == 0 {
            return bad("target_sync_period", "must be positive");
        }
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return bad("rms_decay", "must be in (0, 1)");
        }
        if !(self.rms_eps > 0.0) {
            return bad("rms_eps", "must be positive");
        }
        if !(self.grad_clip_norm >= 0.0) {
            return bad("grad_clip_norm", "must be non-negative");
        }
        if self.hidden == 0 {
            return bad("hidden", "must be positive");
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture { hidden: self.hidden, ..Architecture::default() }
    }

    /// Exploration rate at global step `t`.
    pub fn epsilon_at(&self, t: usize) -> f64 {
        (self.epsilon_start * self.epsilon_decay.powi(t.min(i32::MAX as usize) as i32)).max(self.epsilon_min)
    }
}

/// With probability `epsilon` a uniform action, otherwise the greedy one.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, AgentError> {
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..net.architecture().output_dim));
    }
    Ok(argmax(&net.forward(state)?))
}

fn stack(rows: impl ExactSizeIterator<Item = impl AsRef<[f64]>>, cols: usize) -> Result<Array2<f64>, AgentError> {
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * cols);
    for r in rows {
        let r = r.as_ref();
        if r.len() != cols {
            return Err(AgentError::DimensionMismatch { expected: cols, got: r.len() });
        }
        flat.extend_from_slice(r);
    }
    Ok(Array2::from_shape_vec((n, cols), flat).expect("shape matches"))
}

/// `r + discount * max_a q_target(s', a)`; terminal transitions use `r`.
pub fn td_targets(batch: &[&Transition], target: &QNetwork, discount: f64) -> Result<Vec<f64>, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let dim = target.architecture().input_dim;
    let next = stack(batch.iter().map(|t| t.next_state.as_slice()), dim)?;
    let q = target.forward_batch(next.view())?;
    Ok(batch
        .iter()
        .zip(q.rows())
        .map(|(t, row)| {
            if t.done {
                t.reward
            } else {
                t.reward + discount * row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect())
}

/// Mean squared TD error over the batch and its parameter gradient. Only the
/// taken action's output receives gradient.
pub fn loss_and_gradient(
    net: &QNetwork,
    states: &[&[f64]],
    actions: &[usize],
    targets: &[f64],
) -> Result<(f64, QNetwork), AgentError> {
    let n = states.len();
    if n == 0 {
        return Err(AgentError::EmptyBatch);
    }
    let x = stack(states.iter().copied(), net.architecture().input_dim)?;
    let cache = net.forward_cached(x.view())?;
    let mut d_out = Array2::zeros(cache.output.dim());
    let mut loss = 0.0;
    for (b, (&a, &target)) in actions.iter().zip(targets).enumerate() {
        let err = cache.output[[b, a]] - target;
        loss += err * err;
        d_out[[b, a]] = 2.0 * err / n as f64;
    }
    Ok((loss / n as f64, net.backward(&cache, &d_out)))
}

/// Mutable learner state carried across training steps.
#[derive(Debug, Clone)]
pub struct Learner {
    pub net: QNetwork,
    pub target: QNetwork,
    pub optimizer: RmsProp,
    pub buffer: ReplayBuffer,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(hp: &AgentHyperparams, rng: &mut R) -> Self {
        let arch = hp.architecture();
        let net = QNetwork::init(arch, rng);
        Learner {
            target: net.clone(),
            net,
            optimizer: RmsProp::new(arch, hp.learning_rate, hp.rms_decay, hp.rms_eps),
            buffer: ReplayBuffer::new(hp.replay_capacity),
        }
    }
}

/// One mini-batch update. Returns the loss before the update.
pub fn train_step<R: Rng + ?Sized>(learner: &mut Learner, hp: &AgentHyperparams, rng: &mut R) -> Result<f64, AgentError> {
    let batch = learner
        .buffer
        .sample(hp.batch_size, rng)
        .ok_or(AgentError::BufferUnderflow { have: learner.buffer.len(), need: hp.batch_size })?;
    let targets = td_targets(&batch, &learner.target, hp.discount)?;
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let (loss, mut grad) = loss_and_gradient(&learner.net, &states, &actions, &targets)?;
    clip_global_norm(&mut grad, hp.grad_clip_norm);
    learner.optimizer.step(&mut learner.net, &grad);
    Ok(loss)
}

pub fn sync_target(net: &QNetwork, target: &mut QNetwork) -> Result<(), AgentError> {
    target.copy_from(net)
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogRow {
    pub step: usize,
    pub episode: usize,
    pub epsilon: f64,
    pub reward: f64,
    pub loss: Option<f64>,
    pub action: usize,
    pub placement: Placement,
    pub split: u8,
    pub total_w: f64,
    pub normalized_power: f64,
    pub time_of_day_h: f64,
    pub lambda_ru_mbps: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingArtifacts {
    pub net: QNetwork,
    pub log: Vec<TrainingLogRow>,
    /// Global steps at which the target network was refreshed.
    pub sync_steps: Vec<usize>,
    pub normalizer_w: f64,
}

/// Trace index at which episode `e` starts: episodes tile the trace.
pub fn episode_start(env: &NtnEnv, episode: usize) -> usize {
    (episode * env.episode_len()) % env.trace_len()
}

/// Full training loop. Deterministic in `(env, hp)`.
pub fn train(env: &mut NtnEnv, hp: &AgentHyperparams) -> Result<TrainingArtifacts, AgentError> {
    hp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut learner = Learner::new(hp, &mut rng);
    let normalizer_w = env.reward_model().normalizer_w;
    let mut log = Vec::with_capacity(hp.episodes * env.episode_len());
    let mut sync_steps = Vec::new();
    let mut t = 0usize;

    for episode in 0..hp.episodes {
        let init_seed = rng.gen::<u64>();
        let mut state = env.reset(episode_start(env, episode), InitialConfig::Random, init_seed)?;
        loop {
            let epsilon = hp.epsilon_at(t);
            let s = state.encode();
            let action = select_action(&learner.net, &s, epsilon, &mut rng)?;
            let out = env.step_index(action)?;
            learner.buffer.push(Transition {
                state: s.to_vec(),
                action,
                reward: out.reward.total,
                next_state: out.state.encode().to_vec(),
                done: out.done,
            });
            let loss = if learner.buffer.len() >= hp.batch_size {
                Some(train_step(&mut learner, hp, &mut rng)?)
            } else {
                None
            };
            if t % hp.target_sync_period == 0 {
                sync_target(&learner.net, &mut learner.target)?;
                sync_steps.push(t);
            }
            log.push(TrainingLogRow {
                step: t,
                episode,
                epsilon,
                reward: out.reward.total,
                loss,
                action,
                placement: out.state.config.placement,
                split: out.state.config.split.get(),
                total_w: out.state.power.total_w,
                normalized_power: normalize_power(out.state.power.total_w, normalizer_w),
                time_of_day_h: out.state.time_of_day_h,
                lambda_ru_mbps: out.state.lambda_ru_mbps,
            });
            t += 1;
            state = out.state;
            if out.done {
                break;
            }
        }
        if (episode + 1) % 50 == 0 {
            let recent = &log[log.len().saturating_sub(50 * env.episode_len())..];
            let mean = recent.iter().map(|r| r.reward).sum::<f64>() / recent.len() as f64;
            log::info!("episode {} mean reward (last 50) {:.4} epsilon {:.5}", episode + 1, mean, hp.epsilon_at(t));
        }
    }
    Ok(TrainingArtifacts { net: learner.net, log, sync_steps, normalizer_w })
}

/// Acts greedily with respect to a Q-network.
pub struct GreedyPolicy<'a> {
    pub net: &'a QNetwork,
}

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, state: &EnvState, _env: &NtnEnv) -> usize {
        self.net.forward(&state.encode()).map_or(ACTION_COUNT - 1, |q| argmax(&q))
    }
}
