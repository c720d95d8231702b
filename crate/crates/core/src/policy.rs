//! Policies that can drive an [`NtnEnv`] and a rollout helper.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{apply_action, Action, EnvError, EnvState, InitialConfig, NtnEnv, ACTION_COUNT};
use crate::model::Configuration;

pub trait Policy {
    fn act(&mut self, state: &EnvState, env: &NtnEnv) -> usize;
}

/// Uniform over all 18 actions.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _state: &EnvState, _env: &NtnEnv) -> usize {
        self.rng.gen_range(0..ACTION_COUNT)
    }
}

/// Maximizes the immediate reward, evaluated at the currently observed load.
pub struct MyopicPolicy;

impl Policy for MyopicPolicy {
    fn act(&mut self, state: &EnvState, env: &NtnEnv) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for a in Action::all() {
            let next = apply_action(&state.config, a);
            let r = env
                .reward_model()
                .compute(&state.config, &next, state.lambda_ru_mbps, env.params())
                .map_or(f64::NEG_INFINITY, |r| r.total);
            if r > best.0 {
                best = (r, a.index());
            }
        }
        best.1
    }
}

impl<F: FnMut(&EnvState) -> usize> Policy for F {
    fn act(&mut self, state: &EnvState, _env: &NtnEnv) -> usize {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub initial: Configuration,
    pub actions: Vec<usize>,
    pub states: Vec<EnvState>,
    pub rewards: Vec<f64>,
    pub discounted_return: f64,
}

impl Rollout {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Run one full episode from trace index `start`.
pub fn rollout<P: Policy + ?Sized>(
    env: &mut NtnEnv,
    start: usize,
    initial: InitialConfig,
    seed: u64,
    policy: &mut P,
    discount: f64,
) -> Result<Rollout, EnvError> {
    let mut state = env.reset(start, initial, seed)?;
    let initial = state.config;
    let mut out = Rollout { initial, actions: vec![], states: vec![], rewards: vec![], discounted_return: 0.0 };
    let mut weight = 1.0;
    loop {
        let a = policy.act(&state, env);
        let step = env.step_index(a)?;
        out.actions.push(a);
        out.rewards.push(step.reward.total);
        out.discounted_return += weight * step.reward.total;
        weight *= discount;
        out.states.push(step.state);
        state = step.state;
        if step.done {
            return Ok(out);
        }
    }
}
