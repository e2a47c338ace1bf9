//! Sensor CSV ingestion, junk-value cleaning and daylight-saving repair.
//!
//! Input files carry one reading per row under the header
//! `timestamp,sensor_id,value`, timestamps formatted `YYYY-MM-DD HH:MM:SS`.
//! The value column accepts any decimal literal plus the token `NaN`.

use std::fmt;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};
use thiserror::Error;

/// Timestamp layout shared by every CSV format in the crate.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

pub const SENSOR_CSV_HEADER: &str = "timestamp,sensor_id,value";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("unexpected header {found:?}, expected {expected:?}")]
    BadHeader { found: String, expected: &'static str },
    #[error("no data rows")]
    EmptyInput,
    #[error("duplicated span starting at {start} has odd length {len}")]
    OddSpan { start: NaiveDateTime, len: usize },
    #[error("condensed span starting at {start} overruns the following readings")]
    Unrepairable { start: NaiveDateTime },
    #[error("timestamps and values differ in length ({timestamps} vs {values})")]
    LengthMismatch { timestamps: usize, values: usize },
    #[error("invalid cleaning config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub timestamp: NaiveDateTime,
    pub sensor_id: String,
    pub value: f64,
}

/// Timestamped readings of a single sensor.
///
/// Timestamps are strictly increasing once ingestion (cleaning plus DST
/// repair) has completed; raw parsed series may still contain the repeated
/// hour.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sensor_id: String,
    timestamps: Vec<NaiveDateTime>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        sensor_id: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        if timestamps.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                timestamps: timestamps.len(),
                values: values.len(),
            });
        }
        Ok(Self {
            sensor_id: sensor_id.into(),
            timestamps,
            values,
        })
    }

    /// Builds a series sampled once per minute starting at `start`.
    pub fn per_minute(sensor_id: impl Into<String>, start: NaiveDateTime, values: Vec<f64>) -> Self {
        let timestamps = (0..values.len())
            .map(|i| start + Duration::minutes(i as i64))
            .collect();
        Self {
            sensor_id: sensor_id.into(),
            timestamps,
            values,
        }
    }

    pub fn from_readings(readings: &[SensorReading]) -> Self {
        let sensor_id = readings
            .first()
            .map(|r| r.sensor_id.clone())
            .unwrap_or_default();
        Self {
            sensor_id,
            timestamps: readings.iter().map(|r| r.timestamp).collect(),
            values: readings.iter().map(|r| r.value).collect(),
        }
    }

    pub fn sensor_id(&self) -> &str {
        &self.sensor_id
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDateTime, f64)> + '_ {
        self.timestamps.iter().copied().zip(self.values.iter().copied())
    }

    /// Same timestamps, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, IngestError> {
        Self::new(self.sensor_id.clone(), self.timestamps.clone(), values)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleaningConfig {
    magnitude_cutoff: f64,
    pub drop_negative: bool,
    pub drop_nonfinite: bool,
}

impl CleaningConfig {
    pub fn new(magnitude_cutoff: f64, drop_negative: bool, drop_nonfinite: bool) -> Result<Self, IngestError> {
        if !(magnitude_cutoff > 0.0) {
            return Err(IngestError::InvalidConfig(format!(
                "magnitude_cutoff must be positive, got {magnitude_cutoff}"
            )));
        }
        Ok(Self {
            magnitude_cutoff,
            drop_negative,
            drop_nonfinite,
        })
    }

    pub fn magnitude_cutoff(&self) -> f64 {
        self.magnitude_cutoff
    }
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            magnitude_cutoff: 1e6,
            drop_negative: true,
            drop_nonfinite: true,
        }
    }
}

/// Per-cause removal counts. Reports from successive stages add up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleaningReport {
    pub removed_nan: usize,
    pub removed_negative: usize,
    pub removed_magnitude: usize,
    pub condensed_pairs: usize,
}

impl CleaningReport {
    pub fn removed(&self) -> usize {
        self.removed_nan + self.removed_negative + self.removed_magnitude
    }
}

impl std::ops::Add for CleaningReport {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            removed_nan: self.removed_nan + rhs.removed_nan,
            removed_negative: self.removed_negative + rhs.removed_negative,
            removed_magnitude: self.removed_magnitude + rhs.removed_magnitude,
            condensed_pairs: self.condensed_pairs + rhs.condensed_pairs,
        }
    }
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "removed_nan={}", self.removed_nan)?;
        writeln!(f, "removed_negative={}", self.removed_negative)?;
        writeln!(f, "removed_magnitude={}", self.removed_magnitude)?;
        writeln!(f, "condensed_pairs={}", self.condensed_pairs)
    }
}

pub(crate) fn parse_timestamp(field: &str) -> Result<NaiveDateTime, String> {
    NaiveDateTime::parse_from_str(field, TIMESTAMP_FORMAT)
        .map_err(|e| format!("bad timestamp {field:?}: {e}"))
}

pub(crate) fn parse_value(field: &str) -> Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|_| format!("bad value {field:?}"))
}

pub(crate) fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Reads a headed CSV, checks the header and hands each data row (with its
/// 1-based line number) to `row`. Lines starting with `#` are skipped.
pub(crate) fn read_csv_rows<R, F>(source: R, expected_header: &'static str, mut row: F) -> Result<(), IngestError>
where
    R: Read,
    F: FnMut(u64, &csv::StringRecord) -> Result<(), String>,
{
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let expected_width = expected_header.split(',').count();
    let mut record = csv::StringRecord::new();
    let mut header_seen = false;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| IngestError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if !header_seen {
            let found = record.iter().collect::<Vec<_>>().join(",");
            if found != expected_header {
                return Err(IngestError::BadHeader {
                    found,
                    expected: expected_header,
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != expected_width {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected {expected_width} fields, found {}", record.len()),
            });
        }
        row(line, &record).map_err(|reason| IngestError::MalformedRow { line, reason })?;
    }
    if !header_seen {
        return Err(IngestError::EmptyInput);
    }
    Ok(())
}

/// Parses a sensor CSV. When `expected_sensor` is given, rows for other
/// sensors are skipped (after validation).
pub fn parse_sensor_csv<R: Read>(source: R, expected_sensor: Option<&str>) -> Result<Vec<SensorReading>, IngestError> {
    let mut readings = Vec::new();
    read_csv_rows(source, SENSOR_CSV_HEADER, |_, record| {
        let timestamp = parse_timestamp(&record[0])?;
        let sensor_id = &record[1];
        if sensor_id.is_empty() {
            return Err("empty sensor_id".to_string());
        }
        let value = parse_value(&record[2])?;
        if expected_sensor.is_none_or(|s| s == sensor_id) {
            readings.push(SensorReading {
                timestamp,
                sensor_id: sensor_id.to_string(),
                value,
            });
        }
        Ok(())
    })?;
    if readings.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(readings)
}

/// Splits readings into one series per sensor, in order of first appearance.
pub fn group_by_sensor(readings: &[SensorReading]) -> Vec<TimeSeries> {
    let mut out: Vec<TimeSeries> = Vec::new();
    for r in readings {
        let series = match out.iter_mut().position(|s| s.sensor_id == r.sensor_id) {
            Some(i) => &mut out[i],
            None => {
                out.push(TimeSeries {
                    sensor_id: r.sensor_id.clone(),
                    timestamps: Vec::new(),
                    values: Vec::new(),
                });
                out.last_mut().expect("just pushed")
            }
        };
        series.timestamps.push(r.timestamp);
        series.values.push(r.value);
    }
    out
}

/// Removes non-finite, negative and implausibly large readings.
///
/// Predicates are checked in that order and each removal is charged to the
/// first predicate that fires. Gaps are left as they are.
pub fn clean(series: &TimeSeries, cfg: &CleaningConfig) -> (TimeSeries, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut timestamps = Vec::with_capacity(series.len());
    let mut values = Vec::with_capacity(series.len());
    for (t, v) in series.iter() {
        if !v.is_finite() {
            if cfg.drop_nonfinite {
                report.removed_nan += 1;
                continue;
            }
        } else if cfg.drop_negative && v < 0.0 {
            report.removed_negative += 1;
            continue;
        } else if v.abs() > cfg.magnitude_cutoff {
            report.removed_magnitude += 1;
            continue;
        }
        timestamps.push(t);
        values.push(v);
    }
    let cleaned = TimeSeries {
        sensor_id: series.sensor_id.clone(),
        timestamps,
        values,
    };
    (cleaned, report)
}

/// Collapses the hour repeated by a one-hour clock set-back.
///
/// A repeated run starts at the first reading whose timestamp is not after
/// the running maximum and extends while that stays true. The duplicated
/// span is that run plus every already-accepted reading stamped at or after
/// the run's earliest timestamp. Consecutive readings of the span are
/// averaged pairwise and restamped one minute apart from the span's first
/// timestamp, so the two hours become one.
pub fn condense_dst(series: &TimeSeries) -> Result<(TimeSeries, CleaningReport), IngestError> {
    let n = series.len();
    let ts = &series.timestamps;
    let vs = &series.values;
    let mut out_t: Vec<NaiveDateTime> = Vec::with_capacity(n);
    let mut out_v: Vec<f64> = Vec::with_capacity(n);
    let mut report = CleaningReport::default();
    let mut running_max: Option<NaiveDateTime> = None;
    let mut i = 0;
    while i < n {
        let max = match running_max {
            Some(m) if ts[i] <= m => m,
            _ => {
                out_t.push(ts[i]);
                out_v.push(vs[i]);
                running_max = Some(ts[i]);
                i += 1;
                continue;
            }
        };
        let run_start = i;
        while i < n && ts[i] <= max {
            i += 1;
        }
        let earliest = ts[run_start..i].iter().min().copied().expect("non-empty run");
        // out_t is strictly increasing here
        let cut = out_t.partition_point(|t| *t < earliest);
        let start = out_t.get(cut).copied().unwrap_or(earliest);
        let mut span: Vec<f64> = out_v.drain(cut..).collect();
        out_t.truncate(cut);
        span.extend_from_slice(&vs[run_start..i]);
        if span.len() % 2 != 0 {
            return Err(IngestError::OddSpan { start, len: span.len() });
        }
        let pairs = span.len() / 2;
        let last = start + Duration::minutes(pairs as i64 - 1);
        if last > max {
            return Err(IngestError::Unrepairable { start });
        }
        for (k, pair) in span.chunks_exact(2).enumerate() {
            out_t.push(start + Duration::minutes(k as i64));
            out_v.push(0.5 * (pair[0] + pair[1]));
        }
        report.condensed_pairs += pairs;
    }
    let condensed = TimeSeries {
        sensor_id: series.sensor_id.clone(),
        timestamps: out_t,
        values: out_v,
    };
    debug_assert!(condensed.is_strictly_increasing());
    Ok((condensed, report))
}

/// Writes a series in the input schema.
pub fn write_sensor_csv<W: Write>(mut out: W, series: &[TimeSeries]) -> std::io::Result<()> {
    writeln!(out, "{SENSOR_CSV_HEADER}")?;
    for s in series {
        for (t, v) in s.iter() {
            writeln!(out, "{},{},{}", format_timestamp(&t), s.sensor_id, v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::per_minute("NH4_T3", ts("2016-10-18 00:00:00"), values.to_vec())
    }

    #[test]
    fn parses_single_row() {
        let csv = "timestamp,sensor_id,value\n2016-10-18 00:01:00,NH4_T3,3.2\n";
        let r = parse_sensor_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].value, 3.2);
        assert_eq!(r[0].sensor_id, "NH4_T3");
        assert_eq!(r[0].timestamp, ts("2016-10-18 00:01:00"));
    }

    #[test]
    fn bad_value_names_line() {
        let csv = "timestamp,sensor_id,value\n2016-10-18 00:01:00,NH4_T3,3.2\n2016-10-18 00:02:00,NH4_T3,abc\n";
        match parse_sensor_csv(csv.as_bytes(), None) {
            Err(IngestError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_timestamp_and_empty_sensor_rejected() {
        let csv = "timestamp,sensor_id,value\n2016-13-18 00:01:00,NH4_T3,3.2\n";
        assert!(matches!(
            parse_sensor_csv(csv.as_bytes(), None),
            Err(IngestError::MalformedRow { line: 2, .. })
        ));
        let csv = "timestamp,sensor_id,value\n2016-10-18 00:01:00,,3.2\n";
        assert!(matches!(
            parse_sensor_csv(csv.as_bytes(), None),
            Err(IngestError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn nan_token_and_sensor_filter() {
        let csv = "timestamp,sensor_id,value\n\
                   2016-10-18 00:01:00,NH4_T3,NaN\n\
                   2016-10-18 00:01:00,O2_T3,1.5\n\
                   2016-10-18 00:02:00,NH4_T3,2\n";
        let r = parse_sensor_csv(csv.as_bytes(), Some("NH4_T3")).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].value.is_nan());
        let all = parse_sensor_csv(csv.as_bytes(), None).unwrap();
        let groups = group_by_sensor(&all);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].sensor_id(), "NH4_T3");
        assert_eq!(groups[1].len(), 1);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(parse_sensor_csv("".as_bytes(), None), Err(IngestError::EmptyInput)));
        assert!(matches!(
            parse_sensor_csv("timestamp,sensor_id,value\n".as_bytes(), None),
            Err(IngestError::EmptyInput)
        ));
        let csv = "timestamp,sensor_id,value\n2016-10-18 00:01:00,O2,3.2\n";
        assert!(matches!(
            parse_sensor_csv(csv.as_bytes(), Some("NH4")),
            Err(IngestError::EmptyInput)
        ));
        assert!(matches!(
            parse_sensor_csv("time,id,v\n".as_bytes(), None),
            Err(IngestError::BadHeader { .. })
        ));
    }

    #[test]
    fn full_day_preserves_order() {
        let start = ts("2016-10-18 00:00:00");
        let mut csv = String::from("timestamp,sensor_id,value\n");
        for i in 0..1440 {
            let t = start + Duration::minutes(i);
            csv.push_str(&format!("{},NH4_T3,{}\n", format_timestamp(&t), i as f64 * 0.5));
        }
        let r = parse_sensor_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(r.len(), 1440);
        assert!(r.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert_eq!(r[1439].value, 719.5);
    }

    #[test]
    fn clean_counts_each_cause() {
        let s = series(&[3.1, f64::NAN, -0.5, 1e32, 4.0]);
        let (c, report) = clean(&s, &CleaningConfig::default());
        assert_eq!(c.values(), &[3.1, 4.0]);
        assert_eq!(c.timestamps()[1], ts("2016-10-18 00:04:00"));
        assert_eq!(
            (report.removed_nan, report.removed_negative, report.removed_magnitude, report.condensed_pairs),
            (1, 1, 1, 0)
        );
    }

    #[test]
    fn clean_keeps_valid_series() {
        let s = series(&[1.0, 2.0, 0.0, 999_999.0]);
        let (c, report) = clean(&s, &CleaningConfig::default());
        assert_eq!(c, s);
        assert_eq!(report, CleaningReport::default());
    }

    #[test]
    fn clean_respects_disabled_predicates() {
        let cfg = CleaningConfig::new(10.0, false, true).unwrap();
        let s = series(&[-1.0, 11.0, -11.0, f64::INFINITY]);
        let (c, r) = clean(&s, &cfg);
        assert_eq!(c.values(), &[-1.0]);
        assert_eq!((r.removed_nan, r.removed_negative, r.removed_magnitude), (1, 0, 2));
        assert!(CleaningConfig::new(0.0, true, true).is_err());
        assert!(CleaningConfig::new(f64::NAN, true, true).is_err());
    }

    #[test]
    fn report_renders_four_lines() {
        let r = CleaningReport {
            removed_nan: 1,
            removed_negative: 2,
            removed_magnitude: 3,
            condensed_pairs: 4,
        };
        assert_eq!(
            r.to_string(),
            "removed_nan=1\nremoved_negative=2\nremoved_magnitude=3\ncondensed_pairs=4\n"
        );
    }

    #[test]
    fn condense_identity_without_duplicates() {
        let s = series(&[1.0, 2.0, 3.0]);
        let (c, r) = condense_dst(&s).unwrap();
        assert_eq!(c, s);
        assert_eq!(r.condensed_pairs, 0);
    }

    #[test]
    fn condense_duplicated_pair() {
        let t = ts("2016-10-30 02:00:00");
        let s = TimeSeries::new("x", vec![t, t], vec![4.0, 6.0]).unwrap();
        let (c, r) = condense_dst(&s).unwrap();
        assert_eq!(c.values(), &[5.0]);
        assert_eq!(c.timestamps(), &[t]);
        assert_eq!(r.condensed_pairs, 1);
    }

    #[test]
    fn condense_odd_span_errors() {
        let t0 = ts("2016-10-30 02:00:00");
        let t1 = ts("2016-10-30 02:01:00");
        let s = TimeSeries::new("x", vec![t0, t1, t0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(condense_dst(&s), Err(IngestError::OddSpan { len: 3, .. })));
    }

    #[test]
    fn condense_rejects_overrun() {
        // two readings in the first pass, four in the replay: three pairs
        // would spill past the replayed hour
        let t = |m: i64| ts("2016-10-30 02:00:00") + Duration::minutes(m);
        let s = TimeSeries::new(
            "x",
            vec![t(0), t(1), t(0), t(0), t(1), t(1), t(5)],
            vec![1.0; 7],
        )
        .unwrap();
        assert!(matches!(condense_dst(&s), Err(IngestError::Unrepairable { .. })));
    }
}
