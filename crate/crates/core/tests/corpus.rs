//! Fuzz corpus seeds replayed through the parsers they target.

use std::fs;
use std::path::PathBuf;

use orbitsplit::agent::Checkpoint;
use orbitsplit::experiment::ExperimentConfig;
use orbitsplit::report::parse_episode_csv;
use orbitsplit::traffic::parse_trace;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn check<T, E>(target: &str, accepted: &[&str], parse: impl Fn(&[u8]) -> Result<T, E>) {
    for (name, bytes) in seeds(target) {
        let ok = parse(&bytes).is_ok();
        assert_eq!(ok, accepted.contains(&name.as_str()), "{target}/{name}: parsed = {ok}");
    }
}

#[test]
fn config_seeds() {
    check("config_toml", &["empty.toml", "fixed_initial.toml", "negative_weight.toml", "resolved.toml", "small_run.toml"], |b| {
        ExperimentConfig::from_toml(std::str::from_utf8(b).unwrap())
    });
    let (_, bytes) = seeds("config_toml").into_iter().find(|(n, _)| n == "negative_weight.toml").unwrap();
    let c = ExperimentConfig::from_toml(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert!(c.validate().unwrap_err().to_string().contains("reward.split_change"));
}

#[test]
fn trace_seeds() {
    check("trace_csv", &["header_only.csv", "short.csv"], |b| parse_trace(b));
}

#[test]
fn checkpoint_seeds() {
    check("checkpoint_json", &["small.json"], Checkpoint::decode);
}

#[test]
fn metrics_seeds() {
    check("metrics_csv", &["header_only.csv", "two_episodes.csv"], |b| parse_episode_csv(b));
}
