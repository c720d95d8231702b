//! Exact reference solvers.
//!
//! [`solve_step`] enumerates every configuration for one RU load and returns
//! the cheapest feasible one. [`solve_trajectory_dp`] runs backward induction
//! over the deterministic 35-configuration, 18-action MDP to obtain the
//! maximum discounted return for a load sequence.

use serde::{Deserialize, Serialize};

use crate::env::{apply_action, Action, RewardBreakdown, RewardModel, ACTION_COUNT};
use crate::model::{
    check_constraints, normalize_power, total_power, Configuration, FeasibilityReport, ModelError, ModelParams,
    NodeId, Placement, PowerBreakdown, SplitIndex,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub config: Configuration,
    pub power: PowerBreakdown,
    pub feasibility: FeasibilityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSolution {
    pub lambda_ru_mbps: f64,
    /// `None` when no candidate satisfies the constraints.
    pub choice: Option<Choice>,
}

impl StepSolution {
    pub fn is_feasible(&self) -> bool {
        self.choice.is_some()
    }
}

/// Candidates in tie-break order: lowest split first, then placement order.
pub fn candidates() -> Vec<Configuration> {
    SplitIndex::all()
        .flat_map(|o| Placement::ALL.into_iter().map(move |p| Configuration::of(p, o)))
        .collect()
}

/// Candidates whose placement does not use any of `excluded` nodes.
pub fn candidates_without(excluded: &[NodeId]) -> Vec<Configuration> {
    candidates()
        .into_iter()
        .filter(|c| !excluded.iter().any(|&n| c.placement.involves(n)))
        .collect()
}

/// Relative power difference below which two candidates count as tied.
/// Monolithic placements differ across splits only by summation rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Cheapest feasible configuration among `candidates`; earlier candidates
/// win ties.
pub fn solve_step_among(
    lambda_ru: f64,
    params: &ModelParams,
    candidates: &[Configuration],
) -> Result<StepSolution, ModelError> {
    let mut best: Option<Choice> = None;
    for &config in candidates {
        let feasibility = check_constraints(&config, lambda_ru, params)?;
        if !feasibility.is_feasible() {
            continue;
        }
        let power = total_power(&config, lambda_ru, params)?;
        if best.map_or(true, |b| power.total_w < b.power.total_w - TIE_TOLERANCE * b.power.total_w.abs().max(1.0)) {
            best = Some(Choice { config, power, feasibility });
        }
    }
    Ok(StepSolution { lambda_ru_mbps: lambda_ru, choice: best })
}

pub fn solve_step(lambda_ru: f64, params: &ModelParams) -> Result<StepSolution, ModelError> {
    solve_step_among(lambda_ru, params, &candidates())
}

/// Per-step solutions for a whole load sequence plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub steps: Vec<StepSolution>,
    pub normalizer_w: f64,
    /// Sum of chosen total power over feasible steps.
    pub total_power_w: f64,
    pub mean_normalized_power: f64,
    pub infeasible_steps: usize,
}

pub fn solve_trace(lambdas: &[f64], params: &ModelParams, normalizer_w: f64) -> Result<OracleSolution, ModelError> {
    let steps = lambdas
        .iter()
        .map(|&l| solve_step(l, params))
        .collect::<Result<Vec<_>, _>>()?;
    let chosen: Vec<f64> = steps.iter().filter_map(|s| s.choice.map(|c| c.power.total_w)).collect();
    let mean_normalized_power = if chosen.is_empty() {
        0.0
    } else {
        chosen.iter().map(|&p| normalize_power(p, normalizer_w)).sum::<f64>() / chosen.len() as f64
    };
    Ok(OracleSolution {
        infeasible_steps: steps.len() - chosen.len(),
        total_power_w: chosen.iter().sum(),
        mean_normalized_power,
        normalizer_w,
        steps,
    })
}

/// Optimal trajectory for a deterministic episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSolution {
    pub initial: Configuration,
    pub actions: Vec<usize>,
    /// Configuration after each action.
    pub configs: Vec<Configuration>,
    pub rewards: Vec<RewardBreakdown>,
    /// Discounted return from `initial`.
    pub value: f64,
    /// Optimal discounted return from each configuration at step 0.
    pub values_by_initial: Vec<f64>,
}

/// Backward induction over `lambdas.len() - 1` steps.
///
/// `lambdas[0]` is the load observed at the episode start and is not used in
/// any reward; step `t` is rewarded at `lambdas[t + 1]`, matching the
/// environment. Ties go to the lowest action index.
pub fn solve_trajectory_dp(
    lambdas: &[f64],
    initial: Configuration,
    params: &ModelParams,
    reward: &RewardModel,
    discount: f64,
) -> Result<DpSolution, ModelError> {
    let horizon = lambdas.len().saturating_sub(1);
    let n = Configuration::COUNT;
    let configs: Vec<Configuration> = Configuration::all().collect();
    let next: Vec<[usize; ACTION_COUNT]> = configs
        .iter()
        .map(|c| {
            let mut row = [0; ACTION_COUNT];
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = apply_action(c, Action::from_index(a).expect("valid action")).index();
            }
            row
        })
        .collect();

    // Rewards per (t, config, action).
    let mut rewards = vec![[RewardBreakdown { terms: [0; 5], power_term: 0.0, total: 0.0 }; ACTION_COUNT]; horizon * n];
    for t in 0..horizon {
        for (ci, c) in configs.iter().enumerate() {
            for a in 0..ACTION_COUNT {
                rewards[t * n + ci][a] = reward.compute(c, &configs[next[ci][a]], lambdas[t + 1], params)?;
            }
        }
    }

    let mut value = vec![0.0; n];
    let mut policy = vec![0usize; horizon * n];
    for t in (0..horizon).rev() {
        let mut new_value = vec![f64::NEG_INFINITY; n];
        for ci in 0..n {
            let mut best_a = 0;
            for a in 0..ACTION_COUNT {
                let q = rewards[t * n + ci][a].total + discount * value[next[ci][a]];
                if q > new_value[ci] {
                    new_value[ci] = q;
                    best_a = a;
                }
            }
            policy[t * n + ci] = best_a;
        }
        value = new_value;
    }

    let mut actions = Vec::with_capacity(horizon);
    let mut path = Vec::with_capacity(horizon);
    let mut got = Vec::with_capacity(horizon);
    let mut cur = initial.index();
    for t in 0..horizon {
        let a = policy[t * n + cur];
        actions.push(a);
        got.push(rewards[t * n + cur][a]);
        cur = next[cur][a];
        path.push(configs[cur]);
    }
    Ok(DpSolution {
        initial,
        actions,
        configs: path,
        rewards: got,
        value: value[initial.index()],
        values_by_initial: value,
    })
}
