//! Scoring detectors against labels, anomaly-frequency profiles, the fault
//! rule and ensembles.

use std::fmt;
use std::io::Write;

use chrono::{NaiveDateTime, TimeDelta};
use thiserror::Error;

use crate::detect::AnomalyReport;
use crate::ingest;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("ensemble needs at least one report")]
    EmptyEnsemble,
    #[error("ensemble weights must be positive and finite, one per report")]
    NonpositiveWeights,
    #[error("no points fall inside the labelled window")]
    EmptyRegion,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn check_len(expected: usize, found: usize) -> Result<(), EvalError> {
    if expected == found {
        Ok(())
    } else {
        Err(EvalError::LengthMismatch { expected, found })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(report: &AnomalyReport, labels: &[bool]) -> Result<ConfusionCounts, EvalError> {
    confusion_flags(&report.flags, labels)
}

pub fn confusion_flags(flags: &[bool], labels: &[bool]) -> Result<ConfusionCounts, EvalError> {
    check_len(flags.len(), labels.len())?;
    let mut c = ConfusionCounts::default();
    for (f, l) in flags.iter().zip(labels) {
        match (f, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Fractions in `[0, 1]`. Any `0/0` is taken as 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn metrics(c: &ConfusionCounts) -> EvalMetrics {
    let tp = c.tp as f64;
    let precision = ratio(tp, tp + c.fp as f64);
    let recall = ratio(tp, tp + c.fn_ as f64);
    EvalMetrics {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
        accuracy: ratio((c.tp + c.tn) as f64, c.total() as f64),
    }
}

/// Confusion counts and metrics for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub detector: String,
    pub counts: ConfusionCounts,
    pub metrics: EvalMetrics,
}

impl MetricsRow {
    pub fn new(detector: impl Into<String>, counts: ConfusionCounts) -> Self {
        Self {
            detector: detector.into(),
            metrics: metrics(&counts),
            counts,
        }
    }
}

impl fmt::Display for MetricsRow {
    /// `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c, m) = (&self.counts, &self.metrics);
        writeln!(f, "detector={}", self.detector)?;
        writeln!(f, "tp={}", c.tp)?;
        writeln!(f, "fp={}", c.fp)?;
        writeln!(f, "fn={}", c.fn_)?;
        writeln!(f, "tn={}", c.tn)?;
        writeln!(f, "precision={:.6}", m.precision)?;
        writeln!(f, "recall={:.6}", m.recall)?;
        writeln!(f, "f1={:.6}", m.f1)?;
        writeln!(f, "accuracy={:.6}", m.accuracy)
    }
}

pub const METRICS_CSV_HEADER: &str = "detector,tp,fp,fn,tn,precision,recall,f1,accuracy";

/// Header plus one line per row.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricsRow]) -> std::io::Result<()> {
    writeln!(out, "{METRICS_CSV_HEADER}")?;
    for r in rows {
        let (c, m) = (&r.counts, &r.metrics);
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.detector, c.tp, c.fp, c.fn_, c.tn, m.precision, m.recall, m.f1, m.accuracy
        )?;
    }
    Ok(())
}

/// Points and flags falling in one time bin, split by whether they lie in
/// the labelled window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinCount {
    pub start: NaiveDateTime,
    pub inside_points: usize,
    pub inside_flags: usize,
    pub outside_points: usize,
    pub outside_flags: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowFrequency {
    /// Flags per point inside the window.
    pub in_rate: f64,
    /// Flags per point outside it; 0 when nothing lies outside.
    pub out_rate: f64,
    /// Non-empty bins in time order.
    pub bins: Vec<BinCount>,
}

/// Profiles anomaly frequency inside versus outside a closed time window.
/// Bins are `bin` wide and anchored at the first timestamp.
pub fn window_frequency(
    timestamps: &[NaiveDateTime],
    report: &AnomalyReport,
    bin: TimeDelta,
    window: (NaiveDateTime, NaiveDateTime),
) -> Result<WindowFrequency, EvalError> {
    check_len(timestamps.len(), report.len())?;
    if bin <= TimeDelta::zero() {
        return Err(EvalError::InvalidConfig("bin width must be positive".into()));
    }
    let Some(&origin) = timestamps.first() else {
        return Err(EvalError::EmptyRegion);
    };
    let bin_ms = bin.num_milliseconds().max(1);
    let mut bins: Vec<BinCount> = Vec::new();
    let (mut in_points, mut in_flags, mut out_points, mut out_flags) = (0usize, 0usize, 0usize, 0usize);
    for (t, &flag) in timestamps.iter().zip(&report.flags) {
        let offset = (*t - origin).num_milliseconds().div_euclid(bin_ms);
        let start = origin + TimeDelta::milliseconds(offset * bin_ms);
        if bins.last().is_none_or(|b| b.start != start) {
            bins.push(BinCount {
                start,
                inside_points: 0,
                inside_flags: 0,
                outside_points: 0,
                outside_flags: 0,
            });
        }
        let b = bins.last_mut().expect("pushed");
        let f = usize::from(flag);
        if window.0 <= *t && *t <= window.1 {
            b.inside_points += 1;
            b.inside_flags += f;
            in_points += 1;
            in_flags += f;
        } else {
            b.outside_points += 1;
            b.outside_flags += f;
            out_points += 1;
            out_flags += f;
        }
    }
    if in_points == 0 {
        return Err(EvalError::EmptyRegion);
    }
    Ok(WindowFrequency {
        in_rate: in_flags as f64 / in_points as f64,
        out_rate: ratio(out_flags as f64, out_points as f64),
        bins,
    })
}

pub const WINDOW_FREQUENCY_CSV_HEADER: &str = "bin_start,inside_points,inside_flags,outside_points,outside_flags";

pub fn write_window_frequency_csv<W: Write>(mut out: W, wf: &WindowFrequency) -> std::io::Result<()> {
    writeln!(out, "# in_rate={} out_rate={}", wf.in_rate, wf.out_rate)?;
    writeln!(out, "{WINDOW_FREQUENCY_CSV_HEADER}")?;
    for b in &wf.bins {
        writeln!(
            out,
            "{},{},{},{},{}",
            ingest::format_timestamp(&b.start),
            b.inside_points,
            b.inside_flags,
            b.outside_points,
            b.outside_flags
        )?;
    }
    Ok(())
}

/// A sensor is suspected faulty when at least `min_events` anomalies fall
/// within any closed interval of length `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPolicy {
    interval: TimeDelta,
    min_events: usize,
}

impl FaultPolicy {
    pub fn new(interval: TimeDelta, min_events: usize) -> Result<Self, EvalError> {
        if interval <= TimeDelta::zero() || min_events == 0 {
            return Err(EvalError::InvalidConfig(
                "fault interval and minimum event count must be positive".into(),
            ));
        }
        Ok(Self { interval, min_events })
    }

    pub fn interval(&self) -> TimeDelta {
        self.interval
    }

    pub fn min_events(&self) -> usize {
        self.min_events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultInterval {
    /// First flagged timestamp.
    pub start: NaiveDateTime,
    /// Last flagged timestamp.
    pub end: NaiveDateTime,
    /// Flags in `[start, end]`.
    pub count: usize,
}

/// Fault intervals, disjoint and in time order.
///
/// Every window `[t, t + interval]` holding at least `min_events` flags
/// contributes the span from its first to its last flag; overlapping spans
/// are merged. Timestamps must be non-decreasing.
pub fn fault_flag(timestamps: &[NaiveDateTime], report: &AnomalyReport, policy: &FaultPolicy) -> Result<Vec<FaultInterval>, EvalError> {
    check_len(timestamps.len(), report.len())?;
    let flagged: Vec<NaiveDateTime> = timestamps
        .iter()
        .zip(&report.flags)
        .filter_map(|(t, f)| f.then_some(*t))
        .collect();
    let mut out: Vec<FaultInterval> = Vec::new();
    let mut hi = 0;
    for lo in 0..flagged.len() {
        hi = hi.max(lo);
        while hi + 1 < flagged.len() && flagged[hi + 1] - flagged[lo] <= policy.interval {
            hi += 1;
        }
        if hi - lo + 1 < policy.min_events {
            continue;
        }
        match out.last_mut() {
            Some(last) if flagged[lo] <= last.end => {
                last.count += flagged[..=hi].iter().filter(|t| **t > last.end).count();
                last.end = flagged[hi];
            }
            _ => out.push(FaultInterval {
                start: flagged[lo],
                end: flagged[hi],
                count: hi - lo + 1,
            }),
        }
    }
    Ok(out)
}

pub const FAULT_CSV_HEADER: &str = "start,end,count";

pub fn write_faults_csv<W: Write>(mut out: W, faults: &[FaultInterval]) -> std::io::Result<()> {
    writeln!(out, "{FAULT_CSV_HEADER}")?;
    for f in faults {
        writeln!(
            out,
            "{},{},{}",
            ingest::format_timestamp(&f.start),
            ingest::format_timestamp(&f.end),
            f.count
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Flag when strictly more than half the members flag.
    Majority,
    /// Flag when the flagging members carry more than half the total weight.
    Weighted(Vec<f64>),
}

/// Combines aligned reports. The score is the weighted fraction of members
/// that flagged the point.
pub fn ensemble_combine(reports: &[AnomalyReport], strategy: &Strategy) -> Result<AnomalyReport, EvalError> {
    let first = reports.first().ok_or(EvalError::EmptyEnsemble)?;
    let n = first.len();
    for r in reports {
        check_len(n, r.len())?;
    }
    let members: Vec<&str> = reports.iter().map(|r| r.detector.as_str()).collect();
    let (flags, scores, echo) = match strategy {
        Strategy::Majority => {
            let m = reports.len();
            let mut flags = Vec::with_capacity(n);
            let mut scores = Vec::with_capacity(n);
            for i in 0..n {
                let votes = reports.iter().filter(|r| r.flags[i]).count();
                flags.push(2 * votes > m);
                scores.push(votes as f64 / m as f64);
            }
            (flags, scores, format!("strategy=majority members={}", members.join(",")))
        }
        Strategy::Weighted(weights) => {
            if weights.len() != reports.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(EvalError::NonpositiveWeights);
            }
            let total: f64 = weights.iter().sum();
            let mut flags = Vec::with_capacity(n);
            let mut scores = Vec::with_capacity(n);
            for i in 0..n {
                let vote: f64 = reports.iter().zip(weights).filter(|(r, _)| r.flags[i]).map(|(_, w)| w).sum();
                flags.push(vote > 0.5 * total);
                scores.push(vote / total);
            }
            let ws: Vec<String> = weights.iter().map(f64::to_string).collect();
            (
                flags,
                scores,
                format!("strategy=weighted members={} weights={}", members.join(","), ws.join(",")),
            )
        }
    };
    Ok(AnomalyReport::new("ensemble", flags, scores, echo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn report(flags: &[bool]) -> AnomalyReport {
        AnomalyReport::new("t", flags.to_vec(), vec![0.0; flags.len()], "")
    }

    fn minutes(n: usize) -> Vec<NaiveDateTime> {
        let t0 = NaiveDate::from_ymd_opt(2016, 5, 2).unwrap().and_hms_opt(0, 0, 0).unwrap();
        (0..n).map(|i| t0 + TimeDelta::minutes(i as i64)).collect()
    }

    // published figures are truncated, not rounded, to two decimals
    fn pct(x: f64) -> f64 {
        (x * 10_000.0 + 1e-9).floor() / 100.0
    }

    #[test]
    fn perfect_flags() {
        let labels: Vec<bool> = (0..100).map(|i| i % 10 == 0).collect();
        let c = confusion(&report(&labels), &labels).unwrap();
        assert_eq!(c, ConfusionCounts::new(10, 0, 0, 90));
        let none = confusion(&report(&[false; 100]), &labels).unwrap();
        assert_eq!(none, ConfusionCounts::new(0, 0, 10, 90));
        assert!(matches!(confusion(&report(&[true]), &labels), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn baseline_triple() {
        let m = metrics(&ConfusionCounts::new(32, 57, 9, 1000));
        assert_eq!((pct(m.precision), pct(m.recall), pct(m.f1)), (35.95, 78.04, 49.23));
    }

    #[test]
    fn degenerate_metrics() {
        let m = metrics(&ConfusionCounts::new(0, 0, 0, 50));
        assert_eq!(
            m,
            EvalMetrics {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                accuracy: 1.0
            }
        );
        assert_eq!(metrics(&ConfusionCounts::default()).accuracy, 0.0);
    }

    #[test]
    fn metrics_output() {
        let row = MetricsRow::new("baseline", ConfusionCounts::new(1, 1, 0, 2));
        let text = row.to_string();
        assert!(text.starts_with("detector=baseline\ntp=1\n"));
        assert!(text.contains("precision=0.500000\n"));
        let mut csv = Vec::new();
        write_metrics_csv(&mut csv, &[row]).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "detector,tp,fp,fn,tn,precision,recall,f1,accuracy\nbaseline,1,1,0,2,0.500000,1.000000,0.666667,0.750000\n"
        );
    }

    #[test]
    fn window_frequency_rates() {
        let ts = minutes(120);
        let mut flags = vec![false; 120];
        flags[70] = true;
        flags[75] = true;
        let wf = window_frequency(&ts, &report(&flags), TimeDelta::minutes(60), (ts[60], ts[119])).unwrap();
        assert_eq!(wf.in_rate, 2.0 / 60.0);
        assert_eq!(wf.out_rate, 0.0);
        assert_eq!(wf.bins.len(), 2);
        assert_eq!(wf.bins[1].inside_flags, 2);
        let zero = window_frequency(&ts, &report(&[false; 120]), TimeDelta::minutes(60), (ts[0], ts[10])).unwrap();
        assert_eq!((zero.in_rate, zero.out_rate), (0.0, 0.0));
        let after = ts[119] + TimeDelta::hours(1);
        assert_eq!(
            window_frequency(&ts, &report(&flags), TimeDelta::minutes(60), (after, after)),
            Err(EvalError::EmptyRegion)
        );
    }

    #[test]
    fn fault_single_events() {
        let ts = minutes(10);
        let mut flags = vec![false; 10];
        flags[2] = true;
        flags[3] = true;
        flags[8] = true;
        let p = FaultPolicy::new(TimeDelta::minutes(1), 1).unwrap();
        let f = fault_flag(&ts, &report(&flags), &p).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!((f[0].start, f[0].end, f[0].count), (ts[2], ts[3], 2));
        assert_eq!((f[1].start, f[1].end, f[1].count), (ts[8], ts[8], 1));
        assert!(fault_flag(&ts, &report(&[false; 10]), &p).unwrap().is_empty());
        assert!(FaultPolicy::new(TimeDelta::zero(), 1).is_err());
    }

    #[test]
    fn fault_needs_density() {
        let ts = minutes(30);
        let mut flags = vec![false; 30];
        for i in [0, 4, 8, 20] {
            flags[i] = true;
        }
        let p = FaultPolicy::new(TimeDelta::minutes(5), 2).unwrap();
        let f = fault_flag(&ts, &report(&flags), &p).unwrap();
        assert_eq!(f, vec![FaultInterval { start: ts[0], end: ts[8], count: 3 }]);
    }

    #[test]
    fn ensembles() {
        let a = report(&[true, true, false]);
        let b = report(&[true, false, false]);
        let c = report(&[false, true, false]);
        let maj = ensemble_combine(&[a.clone(), b.clone(), c.clone()], &Strategy::Majority).unwrap();
        assert_eq!(maj.flags, vec![true, true, false]);
        assert_eq!(ensemble_combine(std::slice::from_ref(&a), &Strategy::Majority).unwrap().flags, a.flags);
        let w = ensemble_combine(&[b.clone(), report(&[false; 3]), report(&[false; 3])], &Strategy::Weighted(vec![3.0, 1.0, 1.0])).unwrap();
        assert_eq!(w.flags, vec![true, false, false]);
        assert_eq!(w.scores[0], 0.6);
        assert_eq!(ensemble_combine(&[], &Strategy::Majority), Err(EvalError::EmptyEnsemble));
        assert_eq!(
            ensemble_combine(&[a.clone(), b.clone()], &Strategy::Weighted(vec![1.0, 0.0])),
            Err(EvalError::NonpositiveWeights)
        );
        // two members: a tie is not a majority
        let tie = ensemble_combine(&[a, b], &Strategy::Majority).unwrap();
        assert_eq!(tie.flags, vec![true, false, false]);
    }
}
