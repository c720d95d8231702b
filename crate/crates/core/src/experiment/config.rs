use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::agent::{AgentError, AgentHyperparams};
use crate::env::{EnvError, InitialConfig, RewardWeights, DEFAULT_EPISODE_LEN};
use crate::model::{Configuration, ModelParams, Placement, SplitIndex};
use crate::traffic::{generate, load_trace, ProfileKind, TrafficProfile, TrafficSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub profile: ProfileKind,
    pub peak_mbps: f64,
    pub mean_mbps: f64,
    /// Defaults to 12 h for business and 20 h for residential.
    pub peak_hour: Option<f64>,
    pub noise_std: f64,
    pub seed: u64,
    pub steps_per_day: usize,
    pub days: usize,
    /// Load a CSV trace instead of generating one.
    pub trace: Option<PathBuf>,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            profile: ProfileKind::Business,
            peak_mbps: 200.0,
            mean_mbps: 100.0,
            peak_hour: None,
            noise_std: 5.0,
            seed: 1,
            steps_per_day: 96,
            days: 7,
            trace: None,
        }
    }
}

impl TrafficSection {
    pub fn profile_with_seed(&self, seed: u64) -> TrafficProfile {
        let base = match self.profile {
            ProfileKind::Residential => TrafficProfile::residential(seed),
            _ => TrafficProfile::business(seed),
        };
        TrafficProfile {
            kind: self.profile,
            peak_mbps: self.peak_mbps,
            mean_mbps: self.mean_mbps,
            peak_hour: self.peak_hour.unwrap_or(base.peak_hour),
            noise_std: self.noise_std,
            seed,
        }
    }
}

/// Starting configuration of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSetting {
    Named(InitialKind),
    Fixed { placement: Placement, split: SplitIndex },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Random,
}

impl InitialSetting {
    pub fn to_initial(self) -> InitialConfig {
        match self {
            InitialSetting::Named(InitialKind::Random) => InitialConfig::Random,
            InitialSetting::Fixed { placement, split } => InitialConfig::Fixed(Configuration::of(placement, split)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub episode_len: usize,
    pub initial: InitialSetting,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection { episode_len: DEFAULT_EPISODE_LEN, initial: InitialSetting::Named(InitialKind::Random) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub out_dir: PathBuf,
    /// Seed of the held-out traffic trace used by `evaluate` and `compare`.
    pub eval_seed: u64,
    /// Episodes of the held-out trace rolled out by `evaluate` and `compare`.
    pub eval_episodes: usize,
    /// Compute the oracle gap after training.
    pub oracle: bool,
    /// Agent seeds used by `sweep`.
    pub sweep_seeds: Vec<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: PathBuf::from("runs/default"),
            eval_seed: 1001,
            eval_episodes: 1,
            oracle: true,
            sweep_seeds: vec![0, 1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub traffic: TrafficSection,
    pub env: EnvSection,
    pub reward: RewardWeights,
    pub agent: AgentHyperparams,
    pub run: RunSection,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub episodes: Option<usize>,
    pub trace: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.agent.seed = s;
        }
        if let Some(p) = &o.out {
            self.run.out_dir = p.clone();
        }
        if let Some(e) = o.episodes {
            self.agent.episodes = e;
        }
        if let Some(t) = &o.trace {
            self.traffic.trace = Some(t.clone());
        }
    }

    /// Check every section. Messages name the offending field.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.model.validate().map_err(|e| config_err(format!("model: {e}")))?;
        if self.traffic.trace.is_none() {
            self.traffic
                .profile_with_seed(self.traffic.seed)
                .validate()
                .map_err(|e| config_err(format!("traffic: {e}")))?;
            if self.traffic.steps_per_day == 0 {
                return Err(config_err("traffic.steps_per_day must be positive"));
            }
            if self.traffic.days == 0 {
                return Err(config_err("traffic.days must be positive"));
            }
        }
        if self.env.episode_len == 0 {
            return Err(config_err("env.episode_len must be positive"));
        }
        self.reward.validate().map_err(|e| match e {
            EnvError::InvalidWeight { name, value } => {
                config_err(format!("reward.{name} must be finite and non-negative, got {value}"))
            }
            other => config_err(format!("reward: {other}")),
        })?;
        self.agent.validate().map_err(|e| match e {
            AgentError::InvalidHyperparameter { name, reason } => config_err(format!("agent.{name} {reason}")),
            other => config_err(format!("agent: {other}")),
        })?;
        if self.run.eval_episodes == 0 {
            return Err(config_err("run.eval_episodes must be positive"));
        }
        Ok(())
    }

    /// Training trace: the configured file, or a generated one.
    pub fn training_trace(&self) -> Result<Vec<TrafficSample>, ExperimentError> {
        match &self.traffic.trace {
            Some(path) => load_trace(path).map_err(|e| ExperimentError::Runtime(e.to_string())),
            None => self.generated_trace(self.traffic.seed),
        }
    }

    /// Held-out trace: same profile with the evaluation seed. A configured
    /// trace file is used as is.
    pub fn eval_trace(&self) -> Result<Vec<TrafficSample>, ExperimentError> {
        match &self.traffic.trace {
            Some(_) => self.training_trace(),
            None => self.generated_trace(self.run.eval_seed),
        }
    }

    fn generated_trace(&self, seed: u64) -> Result<Vec<TrafficSample>, ExperimentError> {
        generate(&self.traffic.profile_with_seed(seed), self.traffic.steps_per_day, self.traffic.days)
            .map_err(|e| config_err(format!("traffic: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = ExperimentConfig::default();
        c.env.initial = InitialSetting::Fixed { placement: Placement::GatHap, split: SplitIndex::new(3).unwrap() };
        c.traffic.trace = Some("x.csv".into());
        let text = c.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[agent]\nlearning_rte = 0.1\n").is_err());
        assert!(ExperimentConfig::from_toml("[nonsense]\n").is_err());
        assert!(ExperimentConfig::from_toml("[model.nodes.SAT]\nidle_power_w = 1\n").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let c = ExperimentConfig::from_toml("[reward]\nsplit_change = -1.0\n").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("reward.split_change"), "{msg}");

        let c = ExperimentConfig::from_toml("[agent]\nbatch_size = 500\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("agent.batch_size"));

        let c = ExperimentConfig::from_toml("[traffic]\nmean_mbps = 300.0\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("traffic"));

        let c = ExperimentConfig::from_toml("[env]\nepisode_len = 0\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("env.episode_len"));
    }

    #[test]
    fn overrides_apply() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides { seed: Some(7), out: Some("o".into()), episodes: Some(2), trace: None });
        assert_eq!((c.agent.seed, c.agent.episodes), (7, 2));
        assert_eq!(c.run.out_dir, PathBuf::from("o"));
    }

    #[test]
    fn initial_setting_forms() {
        let c = ExperimentConfig::from_toml("[env]\ninitial = \"random\"\n").unwrap();
        assert_eq!(c.env.initial.to_initial(), InitialConfig::Random);
        let c = ExperimentConfig::from_toml("[env]\ninitial = { placement = \"mono_sat\", split = 2 }\n").unwrap();
        assert!(matches!(c.env.initial.to_initial(), InitialConfig::Fixed(cfg) if cfg.placement == Placement::MonoSat));
        assert!(ExperimentConfig::from_toml("[env]\ninitial = { placement = \"mono_sat\", split = 9 }\n").is_err());
    }
}
