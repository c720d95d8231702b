//! Run metrics and their CSV, JSON-lines and SVG renderings.

mod emit;
mod svg;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::TrainingLogRow;
use crate::model::{normalize_power, power_normalizer, ModelError, ModelParams, SplitIndex};

pub use emit::{
    emit, parse_episode_csv, write_episode_csv, write_episode_jsonl, write_option_table_csv, write_oracle_csv,
    write_oracle_jsonl, write_training_log_csv, Format, EPISODE_CSV_HEADER, SCHEMA_VERSION,
};
pub use svg::write_svg;

/// Episodes averaged by the short-term reward.
pub const SHORT_TERM_WINDOW: usize = 50;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("training log is empty")]
    EmptyLog,
    #[error("training log episodes go backwards at step {step}")]
    UnorderedEpisodes { step: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("malformed metrics CSV: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    /// Mean normalized total power over the episode's steps.
    pub normalized_power: f64,
    pub mean_reward: f64,
    /// Mean instantaneous reward over the last [`SHORT_TERM_WINDOW`] episodes.
    pub short_term_reward: f64,
    /// Mean instantaneous reward over every step so far.
    pub long_term_reward: f64,
    /// Fraction of this episode's steps with a negative reward.
    pub negative_fraction: f64,
}

/// Count of each split option selected per hour of the day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionByHour {
    pub counts: Vec<[u64; SplitIndex::COUNT]>,
}

impl Default for OptionByHour {
    fn default() -> Self {
        OptionByHour { counts: vec![[0; SplitIndex::COUNT]; 24] }
    }
}

impl OptionByHour {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, u8)>) -> Self {
        let mut t = Self::default();
        for (hour, split) in pairs {
            t.record(hour, split);
        }
        t
    }

    pub fn record(&mut self, time_of_day_h: f64, split: u8) {
        let hour = (time_of_day_h.rem_euclid(24.0).floor() as usize).min(23);
        if let Some(c) = self.counts[hour].get_mut(split as usize) {
            *c += 1;
        }
    }

    /// Most frequent split in `hour`; lowest split on ties.
    pub fn mode(&self, hour: usize) -> Option<u8> {
        let row = self.counts.get(hour)?;
        let (best, &n) = row.iter().enumerate().rev().max_by_key(|&(_, n)| *n)?;
        (n > 0).then_some(best as u8)
    }

    /// Mean selected split in `hour`.
    pub fn mean(&self, hour: usize) -> Option<f64> {
        let row = self.counts.get(hour)?;
        let n: u64 = row.iter().sum();
        (n > 0).then(|| row.iter().enumerate().map(|(o, &c)| o as f64 * c as f64).sum::<f64>() / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Total power at peak load of the most power-hungry feasible
    /// configuration; every normalized power is relative to it.
    pub normalizer_w: f64,
    pub short_term_window: usize,
    pub episodes: Vec<EpisodeMetrics>,
    pub instantaneous_rewards: Vec<f64>,
    /// Fraction of all instantaneous rewards that are negative.
    pub reward_ratio: f64,
    pub option_by_hour: OptionByHour,
}

impl RunMetrics {
    pub fn final_long_term_reward(&self) -> f64 {
        self.episodes.last().map_or(0.0, |e| e.long_term_reward)
    }

    pub fn mean_normalized_power(&self) -> f64 {
        let steps: usize = self.episodes.iter().map(|e| e.steps).sum();
        self.episodes.iter().map(|e| e.normalized_power * e.steps as f64).sum::<f64>() / steps.max(1) as f64
    }

    /// Fraction of negative rewards among the last `fraction` of steps.
    pub fn tail_negative_fraction(&self, fraction: f64) -> f64 {
        let n = self.instantaneous_rewards.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let tail = &self.instantaneous_rewards[n.saturating_sub(k)..];
        tail.iter().filter(|&&r| r < 0.0).count() as f64 / tail.len().max(1) as f64
    }
}

pub fn compute_metrics(log: &[TrainingLogRow], params: &ModelParams) -> Result<RunMetrics, ReportError> {
    compute_metrics_with(log, power_normalizer(params)?)
}

/// [`compute_metrics`] with an explicit normalization constant.
pub fn compute_metrics_with(log: &[TrainingLogRow], normalizer_w: f64) -> Result<RunMetrics, ReportError> {
    if log.is_empty() {
        return Err(ReportError::EmptyLog);
    }
    // Group contiguous rows by episode.
    let mut groups: Vec<&[TrainingLogRow]> = Vec::new();
    let mut begin = 0;
    for i in 1..=log.len() {
        if i == log.len() || log[i].episode != log[begin].episode {
            if i < log.len() && log[i].episode < log[begin].episode {
                return Err(ReportError::UnorderedEpisodes { step: log[i].step });
            }
            groups.push(&log[begin..i]);
            begin = i;
        }
    }

    let mut episode_sums = Vec::with_capacity(groups.len());
    let mut episodes = Vec::with_capacity(groups.len());
    let (mut total, mut count) = (0.0, 0usize);
    for (k, rows) in groups.iter().enumerate() {
        let sum: f64 = rows.iter().map(|r| r.reward).sum();
        total += sum;
        count += rows.len();
        episode_sums.push((sum, rows.len()));
        let lo = (k + 1).saturating_sub(SHORT_TERM_WINDOW);
        let (ws, wn) = episode_sums[lo..].iter().fold((0.0, 0usize), |(s, n), &(es, en)| (s + es, n + en));
        let n = rows.len() as f64;
        episodes.push(EpisodeMetrics {
            episode: rows[0].episode,
            steps: rows.len(),
            normalized_power: rows.iter().map(|r| normalize_power(r.total_w, normalizer_w)).sum::<f64>() / n,
            mean_reward: sum / n,
            short_term_reward: ws / wn as f64,
            long_term_reward: total / count as f64,
            negative_fraction: rows.iter().filter(|r| r.reward < 0.0).count() as f64 / n,
        });
    }

    let instantaneous_rewards: Vec<f64> = log.iter().map(|r| r.reward).collect();
    let negatives = instantaneous_rewards.iter().filter(|&&r| r < 0.0).count();
    Ok(RunMetrics {
        normalizer_w,
        short_term_window: SHORT_TERM_WINDOW,
        reward_ratio: negatives as f64 / instantaneous_rewards.len() as f64,
        instantaneous_rewards,
        option_by_hour: OptionByHour::from_pairs(log.iter().map(|r| (r.time_of_day_h, r.split))),
        episodes,
    })
}
