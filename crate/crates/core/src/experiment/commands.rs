use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::agent::{load_checkpoint, save_checkpoint, train, GreedyPolicy, QNetwork};
use crate::env::{InitialConfig, NtnEnv, TranscriptRecord, write_transcript, Action};
use crate::model::{normalize_power, Configuration};
use crate::oracle::{solve_step, solve_trace, solve_trajectory_dp};
use crate::policy::rollout;
use crate::report::{
    compute_metrics_with, emit, write_option_table_csv, write_oracle_csv, write_oracle_jsonl, write_training_log_csv,
    Format, OptionByHour, SCHEMA_VERSION,
};
use crate::traffic::TrafficSample;

fn runtime(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Runtime(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(runtime)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Validate, create the output directory and snapshot the resolved config.
pub fn prepare_run(cfg: &ExperimentConfig) -> Result<PathBuf, ExperimentError> {
    cfg.validate()?;
    let dir = cfg.run.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join("resolved_config.toml");
    fs::write(&path, cfg.to_toml()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(dir)
}

pub fn build_env(cfg: &ExperimentConfig, trace: &[TrafficSample]) -> Result<NtnEnv, ExperimentError> {
    NtnEnv::new(trace, cfg.model.clone(), cfg.reward, cfg.env.episode_len).map_err(runtime)
}

fn nonempty(trace: Vec<TrafficSample>) -> Result<Vec<TrafficSample>, ExperimentError> {
    if trace.is_empty() {
        Err(runtime("traffic trace is empty"))
    } else {
        Ok(trace)
    }
}

/// One greedy rollout next to the optimal trajectory from the same start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEpisode {
    pub start: usize,
    pub initial: Configuration,
    pub agent_return: f64,
    pub dp_return: f64,
    /// `(dp - agent) / |dp|`.
    pub optimality_gap: f64,
    pub agent_mean_normalized_power: f64,
    pub myopic_mean_normalized_power: f64,
    pub steps: Vec<CompareStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareStep {
    pub step: usize,
    pub time_of_day_h: f64,
    pub lambda_ru_mbps: f64,
    pub action: usize,
    pub agent_config: Configuration,
    pub agent_total_w: f64,
    pub reward: f64,
    pub myopic_config: Option<Configuration>,
    pub myopic_total_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRow {
    pub hour: usize,
    pub mode_split: Option<u8>,
    pub mean_split: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub normalizer_w: f64,
    pub discount: f64,
    pub episodes: Vec<CompareEpisode>,
    pub agent_return: f64,
    pub dp_return: f64,
    pub optimality_gap: f64,
    pub agent_mean_normalized_power: f64,
    pub myopic_mean_normalized_power: f64,
    pub option_by_hour: OptionByHour,
    pub hours: Vec<HourRow>,
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len().max(1) as f64;
    v.sum::<f64>() / n
}

/// Greedy rollouts of `net` over the first `episodes` windows of `env`'s
/// trace, each compared with the DP optimum and the myopic oracle.
pub fn compare_policy(
    net: &QNetwork,
    env: &mut NtnEnv,
    episodes: usize,
    initial: InitialConfig,
    seed: u64,
    discount: f64,
) -> Result<CompareReport, ExperimentError> {
    let normalizer_w = env.reward_model().normalizer_w;
    let mut out = Vec::with_capacity(episodes);
    let mut table = OptionByHour::default();
    for e in 0..episodes {
        let start = (e * env.episode_len()) % env.trace_len();
        let ro = rollout(env, start, initial, seed.wrapping_add(e as u64), &mut GreedyPolicy { net }, discount)
            .map_err(runtime)?;
        let lambdas = env.episode_lambdas(start);
        let dp = solve_trajectory_dp(&lambdas, ro.initial, env.params(), env.reward_model(), discount).map_err(runtime)?;
        let mut steps = Vec::with_capacity(ro.states.len());
        for (i, (s, (&a, &r))) in ro.states.iter().zip(ro.actions.iter().zip(&ro.rewards)).enumerate() {
            let myopic = solve_step(s.lambda_ru_mbps, env.params()).map_err(runtime)?.choice;
            table.record(s.time_of_day_h, s.config.split.get());
            steps.push(CompareStep {
                step: i,
                time_of_day_h: s.time_of_day_h,
                lambda_ru_mbps: s.lambda_ru_mbps,
                action: a,
                agent_config: s.config,
                agent_total_w: s.power.total_w,
                reward: r,
                myopic_config: myopic.map(|c| c.config),
                myopic_total_w: myopic.map(|c| c.power.total_w),
            });
        }
        let agent_np = mean(steps.iter().map(|s| normalize_power(s.agent_total_w, normalizer_w)));
        let myopic_np = mean(steps.iter().filter_map(|s| s.myopic_total_w).map(|p| normalize_power(p, normalizer_w)).collect::<Vec<_>>().into_iter());
        out.push(CompareEpisode {
            start,
            initial: ro.initial,
            agent_return: ro.discounted_return,
            dp_return: dp.value,
            optimality_gap: (dp.value - ro.discounted_return) / dp.value.abs().max(1e-12),
            agent_mean_normalized_power: agent_np,
            myopic_mean_normalized_power: myopic_np,
            steps,
        });
    }
    let agent_return = mean(out.iter().map(|e| e.agent_return));
    let dp_return = mean(out.iter().map(|e| e.dp_return));
    let hours = (0..24).map(|h| HourRow { hour: h, mode_split: table.mode(h), mean_split: table.mean(h) }).collect();
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        normalizer_w,
        discount,
        agent_return,
        dp_return,
        optimality_gap: (dp_return - agent_return) / dp_return.abs().max(1e-12),
        agent_mean_normalized_power: mean(out.iter().map(|e| e.agent_mean_normalized_power)),
        myopic_mean_normalized_power: mean(out.iter().map(|e| e.myopic_mean_normalized_power)),
        episodes: out,
        option_by_hour: table,
        hours,
    })
}

fn write_compare(dir: &Path, report: &CompareReport) -> Result<(), ExperimentError> {
    write_json(&dir.join("compare.json"), report)?;
    let path = dir.join("compare_steps.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record([
        "episode",
        "step",
        "time_of_day_h",
        "lambda_ru_mbps",
        "action",
        "agent_config",
        "agent_total_w",
        "reward",
        "myopic_config",
        "myopic_total_w",
    ])
    .map_err(runtime)?;
    for (e, ep) in report.episodes.iter().enumerate() {
        for s in &ep.steps {
            w.write_record([
                e.to_string(),
                s.step.to_string(),
                s.time_of_day_h.to_string(),
                s.lambda_ru_mbps.to_string(),
                s.action.to_string(),
                s.agent_config.to_string(),
                s.agent_total_w.to_string(),
                s.reward.to_string(),
                s.myopic_config.map_or(String::new(), |c| c.to_string()),
                s.myopic_total_w.map_or(String::new(), |p| p.to_string()),
            ])
            .map_err(runtime)?;
        }
    }
    w.flush().map_err(runtime)?;
    write_option_table_csv(&report.option_by_hour, create(&dir.join("option_by_hour.csv"))?).map_err(runtime)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub episodes: usize,
    pub steps: usize,
    pub normalizer_w: f64,
    pub final_long_term_reward: f64,
    pub mean_normalized_power: f64,
    pub tail_negative_fraction: f64,
    pub optimality_gap: Option<f64>,
    pub agent_eval_normalized_power: Option<f64>,
    pub myopic_eval_normalized_power: Option<f64>,
}

impl TrainSummary {
    pub fn print(&self) {
        println!("episodes: {} ({} steps), seed {}", self.episodes, self.steps, self.seed);
        println!("final long-term reward: {:.4}", self.final_long_term_reward);
        println!("mean normalized power: {:.4} (normalizer {:.4} W)", self.mean_normalized_power, self.normalizer_w);
        println!("negative reward fraction, last 20% of steps: {:.4}", self.tail_negative_fraction);
        if let (Some(g), Some(a), Some(m)) =
            (self.optimality_gap, self.agent_eval_normalized_power, self.myopic_eval_normalized_power)
        {
            println!("held-out optimality gap vs DP: {:.2}%", 100.0 * g);
            println!("held-out normalized power: agent {a:.4}, myopic oracle {m:.4}");
        }
    }
}

/// Train, then write checkpoint, training log, metrics and summary.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainSummary, ExperimentError> {
    let dir = prepare_run(cfg)?;
    let trace = nonempty(cfg.training_trace()?)?;
    let mut env = build_env(cfg, &trace)?;
    let art = train(&mut env, &cfg.agent).map_err(runtime)?;

    save_checkpoint(&art.net, &dir.join("checkpoint.json")).map_err(runtime)?;
    write_training_log_csv(&art.log, create(&dir.join("training_log.csv"))?).map_err(runtime)?;
    let metrics = compute_metrics_with(&art.log, art.normalizer_w).map_err(runtime)?;
    for f in [Format::Csv, Format::Jsonl, Format::Svg] {
        emit(&metrics, f, &dir.join(format!("metrics.{}", f.extension()))).map_err(runtime)?;
    }
    write_option_table_csv(&metrics.option_by_hour, create(&dir.join("option_by_hour.csv"))?).map_err(runtime)?;

    let mut summary = TrainSummary {
        seed: cfg.agent.seed,
        episodes: cfg.agent.episodes,
        steps: art.log.len(),
        normalizer_w: metrics.normalizer_w,
        final_long_term_reward: metrics.final_long_term_reward(),
        mean_normalized_power: metrics.mean_normalized_power(),
        tail_negative_fraction: metrics.tail_negative_fraction(0.2),
        optimality_gap: None,
        agent_eval_normalized_power: None,
        myopic_eval_normalized_power: None,
    };
    if cfg.run.oracle {
        let eval = nonempty(cfg.eval_trace()?)?;
        let mut eval_env = build_env(cfg, &eval)?;
        let report = compare_policy(
            &art.net,
            &mut eval_env,
            cfg.run.eval_episodes,
            cfg.env.initial.to_initial(),
            cfg.run.eval_seed,
            cfg.agent.discount,
        )?;
        summary.optimality_gap = Some(report.optimality_gap);
        summary.agent_eval_normalized_power = Some(report.agent_mean_normalized_power);
        summary.myopic_eval_normalized_power = Some(report.myopic_mean_normalized_power);
    }
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn load_net(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<QNetwork, ExperimentError> {
    let net = load_checkpoint(checkpoint).map_err(runtime)?;
    let want = cfg.agent.architecture();
    if net.architecture() != want {
        return Err(runtime(format!(
            "{}: architecture {:?} does not match configured {:?}",
            checkpoint.display(),
            net.architecture(),
            want
        )));
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub schema_version: u32,
    pub episodes: usize,
    pub steps: usize,
    pub mean_reward: f64,
    pub mean_discounted_return: f64,
    pub negative_fraction: f64,
    pub mean_normalized_power: f64,
    pub normalizer_w: f64,
}

/// Greedy rollouts of a checkpoint on the held-out trace.
pub fn cmd_evaluate(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<EvaluationSummary, ExperimentError> {
    let dir = prepare_run(cfg)?;
    let net = load_net(cfg, checkpoint)?;
    let trace = nonempty(cfg.eval_trace()?)?;
    let mut env = build_env(cfg, &trace)?;
    let normalizer_w = env.reward_model().normalizer_w;
    let mut records = Vec::new();
    let mut returns = Vec::new();
    let (mut rewards, mut powers) = (Vec::new(), Vec::new());
    for e in 0..cfg.run.eval_episodes {
        let start = (e * env.episode_len()) % env.trace_len();
        let ro = rollout(
            &mut env,
            start,
            cfg.env.initial.to_initial(),
            cfg.run.eval_seed.wrapping_add(e as u64),
            &mut GreedyPolicy { net: &net },
            cfg.agent.discount,
        )
        .map_err(runtime)?;
        returns.push(ro.discounted_return);
        for (i, (s, &a)) in ro.states.iter().zip(&ro.actions).enumerate() {
            rewards.push(ro.rewards[i]);
            powers.push(normalize_power(s.power.total_w, normalizer_w));
            let reward = env
                .reward_model()
                .compute(if i == 0 { &ro.initial } else { &ro.states[i - 1].config }, &s.config, s.lambda_ru_mbps, env.params())
                .map_err(runtime)?;
            records.push(TranscriptRecord {
                step: records.len(),
                lambda_ru_mbps: s.lambda_ru_mbps,
                action: a,
                action_label: Action::from_index(a).map_or_else(String::new, |x| x.label()),
                configuration: s.config,
                reward,
                power: s.power,
            });
        }
    }
    let path = dir.join("evaluation_transcript.jsonl");
    let mut w = create(&path)?;
    write_transcript(&mut w, &records).and_then(|_| w.flush()).map_err(runtime)?;
    let summary = EvaluationSummary {
        schema_version: SCHEMA_VERSION,
        episodes: returns.len(),
        steps: rewards.len(),
        mean_reward: mean(rewards.iter().copied()),
        mean_discounted_return: mean(returns.iter().copied()),
        negative_fraction: rewards.iter().filter(|&&r| r < 0.0).count() as f64 / rewards.len().max(1) as f64,
        mean_normalized_power: mean(powers.iter().copied()),
        normalizer_w,
    };
    write_json(&dir.join("evaluation.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpRecord {
    pub schema_version: u32,
    pub start: usize,
    pub initial: Configuration,
    pub value: f64,
    pub actions: Vec<usize>,
    pub configs: Vec<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub steps: usize,
    pub infeasible_steps: usize,
    pub mean_normalized_power: f64,
    pub normalizer_w: f64,
    /// Distinct configurations chosen by the per-step oracle, in first-seen order.
    pub chosen: Vec<Configuration>,
    pub dp_windows: usize,
    pub mean_dp_return: f64,
}

/// Per-step myopic oracle over the trace plus DP optima per episode window.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<OracleSummary, ExperimentError> {
    let dir = prepare_run(cfg)?;
    let trace = nonempty(cfg.training_trace()?)?;
    let env = build_env(cfg, &trace)?;
    let lambdas: Vec<f64> = trace.iter().map(|s| s.lambda_ru_mbps).collect();
    let sol = solve_trace(&lambdas, env.params(), env.reward_model().normalizer_w).map_err(runtime)?;
    write_oracle_csv(&sol, create(&dir.join("oracle_steps.csv"))?).map_err(runtime)?;
    write_oracle_jsonl(&sol, create(&dir.join("oracle_steps.jsonl"))?).map_err(runtime)?;

    let windows = (trace.len() / env.episode_len()).max(1);
    let path = dir.join("dp_trajectories.jsonl");
    let mut w = create(&path)?;
    let mut values = Vec::with_capacity(windows);
    for k in 0..windows {
        let start = k * env.episode_len();
        let initial = match cfg.env.initial.to_initial() {
            InitialConfig::Fixed(c) => c,
            InitialConfig::Random => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.agent.seed.wrapping_add(k as u64));
                Configuration::from_index(rng.gen_range(0..Configuration::COUNT)).expect("index in range")
            }
        };
        let dp = solve_trajectory_dp(&env.episode_lambdas(start), initial, env.params(), env.reward_model(), cfg.agent.discount)
            .map_err(runtime)?;
        values.push(dp.value);
        let rec = DpRecord { schema_version: SCHEMA_VERSION, start, initial, value: dp.value, actions: dp.actions, configs: dp.configs };
        serde_json::to_writer(&mut w, &rec).map_err(runtime)?;
        w.write_all(b"\n").map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;

    let mut chosen: Vec<Configuration> = Vec::new();
    for c in sol.steps.iter().filter_map(|s| s.choice) {
        if !chosen.contains(&c.config) {
            chosen.push(c.config);
        }
    }
    let summary = OracleSummary {
        steps: sol.steps.len(),
        infeasible_steps: sol.infeasible_steps,
        mean_normalized_power: sol.mean_normalized_power,
        normalizer_w: sol.normalizer_w,
        chosen,
        dp_windows: windows,
        mean_dp_return: mean(values.iter().copied()),
    };
    write_json(&dir.join("oracle_summary.json"), &summary)?;
    Ok(summary)
}

/// Compare a checkpoint's greedy policy with the oracles on the held-out trace.
pub fn cmd_compare(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<CompareReport, ExperimentError> {
    let dir = prepare_run(cfg)?;
    let net = load_net(cfg, checkpoint)?;
    let trace = nonempty(cfg.eval_trace()?)?;
    let mut env = build_env(cfg, &trace)?;
    let report = compare_policy(
        &net,
        &mut env,
        cfg.run.eval_episodes,
        cfg.env.initial.to_initial(),
        cfg.run.eval_seed,
        cfg.agent.discount,
    )?;
    write_compare(&dir, &report)?;
    Ok(report)
}

/// Train once per seed in `run.sweep_seeds`, each in its own subdirectory.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrainSummary>, ExperimentError> {
    let dir = prepare_run(cfg)?;
    if cfg.run.sweep_seeds.is_empty() {
        return Err(ExperimentError::Config("run.sweep_seeds is empty".into()));
    }
    let configs: Vec<ExperimentConfig> = cfg
        .run
        .sweep_seeds
        .iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.agent.seed = s;
            c.run.out_dir = dir.join(format!("seed_{s}"));
            c
        })
        .collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
    let mut results: Vec<Option<Result<TrainSummary, ExperimentError>>> = (0..configs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in results.chunks_mut(configs.len().div_ceil(workers)).enumerate() {
            let configs = &configs;
            scope.spawn(move || {
                let base = w * configs.len().div_ceil(workers);
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(cmd_train(&configs[base + i]));
                }
            });
        }
    });
    let summaries = results.into_iter().map(|r| r.expect("every seed ran")).collect::<Result<Vec<_>, _>>()?;
    let path = dir.join("sweep_summary.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for s in &summaries {
        w.serialize(s).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(summaries)
}
