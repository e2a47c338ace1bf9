//! Synthetic traces and anomaly injection.
//!
//! All randomness goes through [`Pcg32`], a PCG-XSH-RR generator (64-bit
//! LCG state, multiplier `6364136223846793005`, output by xorshift and
//! random rotation). Every draw order below is fixed so that a port with the
//! same generator reproduces the same test sets bit for bit.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::ingest::{self, IngestError, TimeSeries};

const PCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
/// Stream selector used by [`Pcg32::new`].
pub const DEFAULT_STREAM: u64 = 0xda3e_39cb_94b9_5bdb;

/// PCG-XSH-RR 64/32.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, DEFAULT_STREAM)
    }

    /// Standard PCG seeding: `inc = (stream << 1) | 1`, one step, add the
    /// seed, one more step.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Self {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// High word first.
    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection, `bound > 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Standard normal by Box-Muller, one variate per two uniforms.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid injection config: {0}")]
    InvalidConfig(String),
    #[error("cannot alter {wanted} of {len} readings")]
    RateTooHigh { wanted: usize, len: usize },
    #[error("series is empty")]
    EmptySeries,
}

/// Anomaly injection settings: a fraction of readings receives a random
/// offset of magnitude in `[offset_min, offset_max]` and random sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionConfig {
    rate: f64,
    offset_min: f64,
    offset_max: f64,
    pub seed: u64,
}

impl InjectionConfig {
    pub fn new(rate: f64, offset_min: f64, offset_max: f64, seed: u64) -> Result<Self, SynthError> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(SynthError::InvalidConfig(format!("rate must be in [0, 1], got {rate}")));
        }
        if !(offset_min > 0.0 && offset_min < offset_max && offset_max.is_finite()) {
            return Err(SynthError::InvalidConfig(format!(
                "need 0 < offset_min < offset_max, got {offset_min} and {offset_max}"
            )));
        }
        Ok(Self {
            rate,
            offset_min,
            offset_max,
            seed,
        })
    }

    /// 1% of readings, offsets of magnitude 1 to 4.
    pub fn standard(seed: u64) -> Self {
        Self {
            rate: 0.01,
            offset_min: 1.0,
            offset_max: 4.0,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn offset_min(&self) -> f64 {
        self.offset_min
    }

    pub fn offset_max(&self) -> f64 {
        self.offset_max
    }

    /// Number of readings altered in a series of `len` points.
    pub fn count_for(&self, len: usize) -> usize {
        (self.rate * len as f64).round() as usize
    }
}

/// A series with ground-truth labels (`true` = injected anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: TimeSeries,
    pub labels: Vec<bool>,
    /// `(index, offset)` in injection order.
    pub injected: Vec<(usize, f64)>,
}

impl LabeledSeries {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }
}

/// Injects anomalies.
///
/// Draw order: `m = round(rate * N)` indices by a partial Fisher-Yates
/// shuffle of `0..N` (step `i` swaps position `i` with `i + below(N - i)`);
/// then, for each chosen index in that order, one `next_f64` for the sign
/// (negative when `< 0.5`) and one for the magnitude
/// `offset_min + (offset_max - offset_min) * u`.
pub fn inject(series: &TimeSeries, cfg: &InjectionConfig) -> Result<LabeledSeries, SynthError> {
    let n = series.len();
    if n == 0 {
        return Err(SynthError::EmptySeries);
    }
    let m = cfg.count_for(n);
    if m > n {
        return Err(SynthError::RateTooHigh { wanted: m, len: n });
    }
    let mut rng = Pcg32::new(cfg.seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut values = series.values().to_vec();
    let mut labels = vec![false; n];
    let mut injected = Vec::with_capacity(m);
    for &i in &idx[..m] {
        let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let magnitude = cfg.offset_min + (cfg.offset_max - cfg.offset_min) * rng.next_f64();
        let delta = sign * magnitude;
        values[i] += delta;
        labels[i] = true;
        injected.push((i, delta));
    }
    Ok(LabeledSeries {
        series: series.with_values(values).expect("same length"),
        labels,
        injected,
    })
}

pub const LABELED_CSV_HEADER: &str = "timestamp,value,label";

pub fn write_labeled_csv<W: Write>(mut out: W, labeled: &LabeledSeries) -> std::io::Result<()> {
    writeln!(out, "{LABELED_CSV_HEADER}")?;
    for ((t, v), l) in labeled.series.iter().zip(&labeled.labels) {
        writeln!(out, "{},{},{}", ingest::format_timestamp(&t), v, u8::from(*l))?;
    }
    Ok(())
}

/// Reads `timestamp,value,label`. Offsets are not recorded in the file, so
/// `injected` comes back empty.
pub fn read_labeled_csv<R: Read>(source: R, sensor_id: &str) -> Result<LabeledSeries, IngestError> {
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    ingest::read_csv_rows(source, LABELED_CSV_HEADER, |_, rec| {
        timestamps.push(ingest::parse_timestamp(&rec[0])?);
        values.push(ingest::parse_value(&rec[1])?);
        labels.push(match &rec[2] {
            "0" => false,
            "1" => true,
            other => return Err(format!("bad label {other:?}")),
        });
        Ok(())
    })?;
    if values.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(LabeledSeries {
        series: TimeSeries::new(sensor_id, timestamps, values)?,
        labels,
        injected: Vec::new(),
    })
}

/// Shape of a synthetic per-minute trace:
/// `level + amplitude * sin(2 pi i / period) + trend_per_period * i / period + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub length: usize,
    pub period: usize,
    pub level: f64,
    pub amplitude: f64,
    pub trend_per_period: f64,
    pub noise_sd: f64,
    pub start: NaiveDateTime,
}

impl Default for SyntheticConfig {
    /// Three days of one-minute readings.
    fn default() -> Self {
        Self {
            length: 3 * 1440,
            period: 1440,
            level: 10.0,
            amplitude: 2.0,
            trend_per_period: 0.5,
            noise_sd: 1.4,
            start: NaiveDate::from_ymd_opt(2016, 5, 2)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
        }
    }
}

/// Generates a seasonal trace; one normal draw per point.
pub fn synthetic_trace(sensor_id: &str, cfg: &SyntheticConfig, seed: u64) -> TimeSeries {
    let mut rng = Pcg32::new(seed);
    let p = cfg.period as f64;
    let values = (0..cfg.length)
        .map(|i| {
            let phase = i as f64 / p;
            cfg.level + cfg.amplitude * (TAU * phase).sin() + cfg.trend_per_period * phase + cfg.noise_sd * rng.next_normal()
        })
        .collect();
    TimeSeries::per_minute(sensor_id, cfg.start, values)
}

/// An oxygen trace anti-correlated with `ammonia`:
/// `base + coupling * (ammonia - level) + noise_sd * N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompanionConfig {
    pub base: f64,
    pub coupling: f64,
    pub noise_sd: f64,
}

impl Default for CompanionConfig {
    fn default() -> Self {
        Self {
            base: 8.0,
            coupling: -0.5,
            noise_sd: 0.2,
        }
    }
}

pub fn companion_trace(sensor_id: &str, ammonia: &TimeSeries, level: f64, cfg: &CompanionConfig, seed: u64) -> TimeSeries {
    let mut rng = Pcg32::new(seed);
    let values = ammonia
        .values()
        .iter()
        .map(|a| cfg.base + cfg.coupling * (a - level) + cfg.noise_sd * rng.next_normal())
        .collect();
    TimeSeries::new(sensor_id, ammonia.timestamps().to_vec(), values).expect("aligned")
}
