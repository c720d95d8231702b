use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{EpisodeMetrics, OptionByHour, ReportError, RunMetrics};
use crate::agent::TrainingLogRow;
use crate::oracle::OracleSolution;

pub const SCHEMA_VERSION: u32 = 1;

pub const EPISODE_CSV_HEADER: [&str; 8] = [
    "episode",
    "steps",
    "normalized_power",
    "mean_reward",
    "short_term_reward",
    "long_term_reward",
    "negative_fraction",
    "normalizer_w",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Svg => "svg",
        }
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::Other, e)
}

/// Per-episode metrics, one row each. The normalization constant is
/// repeated in every row so the file stands on its own.
pub fn write_episode_csv<W: Write>(m: &RunMetrics, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EPISODE_CSV_HEADER).map_err(csv_err)?;
    for e in &m.episodes {
        out.write_record([
            e.episode.to_string(),
            e.steps.to_string(),
            e.normalized_power.to_string(),
            e.mean_reward.to_string(),
            e.short_term_reward.to_string(),
            e.long_term_reward.to_string(),
            e.negative_fraction.to_string(),
            m.normalizer_w.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Read back a file written by [`write_episode_csv`]. Returns the episodes
/// and the normalization constant (`None` for a header-only file).
pub fn parse_episode_csv<R: Read>(r: R) -> Result<(Vec<EpisodeMetrics>, Option<f64>), ReportError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| ReportError::Parse(e.to_string()))?.clone();
    if headers.iter().ne(EPISODE_CSV_HEADER) {
        return Err(ReportError::Parse(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    let mut normalizer = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ReportError::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| -> Result<f64, ReportError> {
            let v: f64 = rec[i].parse().map_err(|_| ReportError::Parse(format!("line {line}: bad number {:?}", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ReportError::Parse(format!("line {line}: non-finite value")))
            }
        };
        let u = |i: usize| -> Result<usize, ReportError> {
            rec[i].parse().map_err(|_| ReportError::Parse(format!("line {line}: bad integer {:?}", &rec[i])))
        };
        let n = f(7)?;
        if normalizer.is_some_and(|p| p != n) {
            return Err(ReportError::Parse(format!("line {line}: normalizer changes within file")));
        }
        normalizer = Some(n);
        out.push(EpisodeMetrics {
            episode: u(0)?,
            steps: u(1)?,
            normalized_power: f(2)?,
            mean_reward: f(3)?,
            short_term_reward: f(4)?,
            long_term_reward: f(5)?,
            negative_fraction: f(6)?,
        });
    }
    Ok((out, normalizer))
}

#[derive(Serialize)]
struct EpisodeRecord<'a> {
    schema_version: u32,
    normalizer_w: f64,
    #[serde(flatten)]
    episode: &'a EpisodeMetrics,
}

/// One JSON object per episode.
pub fn write_episode_jsonl<W: Write>(m: &RunMetrics, mut w: W) -> io::Result<()> {
    for e in &m.episodes {
        let rec = EpisodeRecord { schema_version: SCHEMA_VERSION, normalizer_w: m.normalizer_w, episode: e };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// `hour,split_0..split_6,mode` with raw selection counts.
pub fn write_option_table_csv<W: Write>(t: &OptionByHour, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["hour".to_string()];
    header.extend((0..7).map(|o| format!("split_{o}")));
    header.push("mode".into());
    out.write_record(&header).map_err(csv_err)?;
    for (hour, row) in t.counts.iter().enumerate() {
        let mut rec = vec![hour.to_string()];
        rec.extend(row.iter().map(|c| c.to_string()));
        rec.push(t.mode(hour).map_or(String::new(), |o| o.to_string()));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_training_log_csv<W: Write>(log: &[TrainingLogRow], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in log {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()
}

#[derive(Serialize)]
struct OracleRow {
    step: usize,
    lambda_ru_mbps: f64,
    feasible: bool,
    placement: String,
    split: String,
    processing_w: String,
    transmission_w: String,
    total_w: String,
    normalized_power: String,
    normalizer_w: f64,
}

fn oracle_rows(sol: &OracleSolution) -> impl Iterator<Item = OracleRow> + '_ {
    sol.steps.iter().enumerate().map(move |(step, s)| {
        let opt = |f: &dyn Fn(&crate::oracle::Choice) -> String| s.choice.as_ref().map_or(String::new(), f);
        OracleRow {
            step,
            lambda_ru_mbps: s.lambda_ru_mbps,
            feasible: s.is_feasible(),
            placement: opt(&|c| c.config.placement.label().to_string()),
            split: opt(&|c| c.config.split.get().to_string()),
            processing_w: opt(&|c| c.power.processing_w.to_string()),
            transmission_w: opt(&|c| c.power.transmission_w.to_string()),
            total_w: opt(&|c| c.power.total_w.to_string()),
            normalized_power: opt(&|c| crate::model::normalize_power(c.power.total_w, sol.normalizer_w).to_string()),
            normalizer_w: sol.normalizer_w,
        }
    })
}

pub fn write_oracle_csv<W: Write>(sol: &OracleSolution, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in oracle_rows(sol) {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_oracle_jsonl<W: Write>(sol: &OracleSolution, mut w: W) -> io::Result<()> {
    #[derive(Serialize)]
    struct Rec<'a> {
        schema_version: u32,
        step: usize,
        normalizer_w: f64,
        #[serde(flatten)]
        solution: &'a crate::oracle::StepSolution,
    }
    for (step, s) in sol.steps.iter().enumerate() {
        serde_json::to_writer(&mut w, &Rec { schema_version: SCHEMA_VERSION, step, normalizer_w: sol.normalizer_w, solution: s })?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Write `m` to `path` in `format`.
pub fn emit(m: &RunMetrics, format: Format, path: &Path) -> Result<(), ReportError> {
    let io_err = |source| ReportError::Io { path: path.to_path_buf(), source };
    let file = BufWriter::new(File::create(path).map_err(io_err)?);
    match format {
        Format::Csv => write_episode_csv(m, file),
        Format::Jsonl => write_episode_jsonl(m, file),
        Format::Svg => super::write_svg(m, file),
    }
    .map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::super::tests::row;
    use super::super::compute_metrics_with;
    use super::*;

    fn metrics() -> RunMetrics {
        let log: Vec<_> = (0..300)
            .map(|i| row(i, i / 7, ((i * 37) % 11) as f64 / 3.0 - 1.0, 10.0 + (i % 13) as f64 * 1.7, (i % 96) as f64 * 0.25, (i % 7) as u8))
            .collect();
        compute_metrics_with(&log, 51.9272).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let m = metrics();
        let mut buf = Vec::new();
        write_episode_csv(&m, &mut buf).unwrap();
        let (back, norm) = parse_episode_csv(buf.as_slice()).unwrap();
        assert_eq!(norm, Some(m.normalizer_w));
        assert_eq!(back.len(), m.episodes.len());
        for (a, b) in back.iter().zip(&m.episodes) {
            assert_eq!(a.episode, b.episode);
            assert!((a.long_term_reward - b.long_term_reward).abs() < 1e-9);
            assert!((a.normalized_power - b.normalized_power).abs() < 1e-9);
            assert!((a.short_term_reward - b.short_term_reward).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_is_bit_stable() {
        let m = metrics();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_episode_csv(&m, &mut a).unwrap();
        write_episode_csv(&m.clone(), &mut b).unwrap();
        assert_eq!(a, b);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_episode_jsonl(&m, &mut a).unwrap();
        write_episode_jsonl(&m, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_episode_csv("a,b\n1,2\n".as_bytes()).is_err());
        let header = EPISODE_CSV_HEADER.join(",");
        assert!(parse_episode_csv(format!("{header}\n1,2,x,0,0,0,0,1\n").as_bytes()).is_err());
        assert!(parse_episode_csv(format!("{header}\n1,2,NaN,0,0,0,0,1\n").as_bytes()).is_err());
        assert!(parse_episode_csv(format!("{header}\n1,2\n").as_bytes()).is_err());
        assert_eq!(parse_episode_csv(format!("{header}\n").as_bytes()).unwrap(), (vec![], None));
    }

    #[test]
    fn jsonl_has_one_versioned_record_per_episode() {
        let m = metrics();
        let mut buf = Vec::new();
        write_episode_jsonl(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), m.episodes.len());
        for (line, e) in lines.iter().zip(&m.episodes) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["schema_version"], SCHEMA_VERSION);
            assert_eq!(v["episode"], e.episode);
            assert_eq!(v["normalizer_w"], m.normalizer_w);
        }
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let m = metrics();
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("m.csv");
        match emit(&m, Format::Csv, &bad) {
            Err(ReportError::Io { path, .. }) => assert_eq!(path, bad),
            other => panic!("{other:?}"),
        }
        for f in [Format::Csv, Format::Jsonl, Format::Svg] {
            let p = dir.path().join(format!("m.{}", f.extension()));
            emit(&m, f, &p).unwrap();
            assert!(std::fs::metadata(&p).unwrap().len() > 0);
        }
    }

    #[test]
    fn option_table_has_24_rows() {
        let m = metrics();
        let mut buf = Vec::new();
        write_option_table_csv(&m.option_by_hour, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 25);
        assert!(text.starts_with("hour,split_0,"));
    }
}
