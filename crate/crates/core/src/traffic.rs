//! RU traffic traces: synthetic diurnal profiles and CSV ingestion.
//!
//! The synthetic day is a raised cosine centred on `peak_hour`. When the
//! requested mean is at least half the peak the curve is lifted by a constant
//! trough; otherwise it is sharpened with an exponent chosen so the mean over
//! the sampling grid matches exactly. Gaussian noise is added and the result
//! clipped to `[0, peak]`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_HEADER: [&str; 3] = ["step", "time_of_day_h", "lambda_ru_mbps"];

/// Default sampling resolution: 15-minute slots.
pub const DEFAULT_STEPS_PER_DAY: usize = 96;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("invalid traffic profile: {0}")]
    InvalidProfile(String),
    #[error("steps_per_day must be at least 1")]
    ZeroResolution,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: negative RU traffic {value}")]
    Negative { line: u64, value: f64 },
    #[error("line {line}: step {step} does not increase")]
    NonIncreasingStep { line: u64, step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Business,
    Residential,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficProfile {
    pub kind: ProfileKind,
    pub peak_mbps: f64,
    pub mean_mbps: f64,
    pub peak_hour: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl TrafficProfile {
    pub fn business(seed: u64) -> Self {
        TrafficProfile {
            kind: ProfileKind::Business,
            peak_mbps: 200.0,
            mean_mbps: 100.0,
            peak_hour: 12.0,
            noise_std: 5.0,
            seed,
        }
    }

    pub fn residential(seed: u64) -> Self {
        TrafficProfile {
            kind: ProfileKind::Residential,
            peak_hour: 20.0,
            ..Self::business(seed)
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |m: &str| Err(TrafficError::InvalidProfile(m.to_string()));
        if !(self.mean_mbps > 0.0 && self.mean_mbps <= self.peak_mbps && self.peak_mbps.is_finite()) {
            return bad("require 0 < mean_mbps <= peak_mbps");
        }
        if !(0.0..24.0).contains(&self.peak_hour) {
            return bad("peak_hour must be in [0, 24)");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSample {
    pub step: u64,
    pub time_of_day_h: f64,
    pub lambda_ru_mbps: f64,
}

fn day_weight(hour: f64, peak_hour: f64) -> f64 {
    0.5 * (1.0 + (2.0 * PI * (hour - peak_hour) / 24.0).cos())
}

/// Noise-free diurnal curve sampled on the grid, one value per slot.
fn base_day(profile: &TrafficProfile, steps_per_day: usize) -> Vec<f64> {
    let hours: Vec<f64> = (0..steps_per_day).map(|i| i as f64 * 24.0 / steps_per_day as f64).collect();
    let w: Vec<f64> = hours.iter().map(|&h| day_weight(h, profile.peak_hour)).collect();
    let (peak, mean) = (profile.peak_mbps, profile.mean_mbps);
    if 2.0 * mean >= peak {
        let trough = 2.0 * mean - peak;
        return w.iter().map(|&x| trough + (peak - trough) * x).collect();
    }
    let grid_mean = |k: f64| w.iter().map(|&x| x.powf(k)).sum::<f64>() / w.len() as f64;
    let target = mean / peak;
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while grid_mean(hi) > target && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if grid_mean(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    w.iter().map(|&x| peak * x.powf(k)).collect()
}

/// Synthesize `days` days of RU load at `steps_per_day` slots per day.
pub fn generate(profile: &TrafficProfile, steps_per_day: usize, days: usize) -> Result<Vec<TrafficSample>, TrafficError> {
    profile.validate()?;
    if steps_per_day == 0 {
        return Err(TrafficError::ZeroResolution);
    }
    let day = base_day(profile, steps_per_day);
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = Normal::new(0.0, profile.noise_std).map_err(|e| TrafficError::InvalidProfile(e.to_string()))?;
    let n = steps_per_day * days;
    let samples = (0..n)
        .map(|i| {
            let slot = i % steps_per_day;
            let eps = if profile.noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            TrafficSample {
                step: i as u64,
                time_of_day_h: slot as f64 * 24.0 / steps_per_day as f64,
                lambda_ru_mbps: (day[slot] + eps).clamp(0.0, profile.peak_mbps),
            }
        })
        .collect();
    Ok(samples)
}

pub fn write_trace<W: Write>(writer: W, samples: &[TrafficSample]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(path: &Path, samples: &[TrafficSample]) -> Result<(), TrafficError> {
    let io_err = |source| TrafficError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    write_trace(file, samples).map_err(|e| TrafficError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    })
}

/// Parse a trace in `step,time_of_day_h,lambda_ru_mbps` form.
///
/// An empty input (or a header with no rows) is an empty trace.
pub fn parse_trace<R: Read>(reader: R) -> Result<Vec<TrafficSample>, TrafficError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| TrafficError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(TRACE_HEADER) {
        return Err(TrafficError::Parse {
            line: 1,
            message: format!("expected header `{}`", TRACE_HEADER.join(",")),
        });
    }
    let mut out: Vec<TrafficSample> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| TrafficError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let sample: TrafficSample = rec
            .deserialize(Some(&headers))
            .map_err(|e| TrafficError::Parse { line, message: e.to_string() })?;
        if !sample.lambda_ru_mbps.is_finite() {
            return Err(TrafficError::Parse { line, message: "RU traffic is not finite".into() });
        }
        if sample.lambda_ru_mbps < 0.0 {
            return Err(TrafficError::Negative { line, value: sample.lambda_ru_mbps });
        }
        if let Some(prev) = out.last() {
            if sample.step <= prev.step {
                return Err(TrafficError::NonIncreasingStep { line, step: sample.step });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TrafficSample>, TrafficError> {
    let file = File::open(path).map_err(|source| TrafficError::Io { path: path.to_path_buf(), source })?;
    parse_trace(io::BufReader::new(file))
}
