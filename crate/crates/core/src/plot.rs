//! Plot-ready data: series, histograms, report overlays and a bare-bones SVG
//! line chart.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDateTime;

use crate::detect::AnomalyReport;
use crate::ingest::{self, TimeSeries};

pub const SERIES_CSV_HEADER: &str = "index,timestamp,value";

pub fn write_series_csv<W: Write>(mut out: W, series: &TimeSeries) -> std::io::Result<()> {
    writeln!(out, "{SERIES_CSV_HEADER}")?;
    for (i, (t, v)) in series.iter().enumerate() {
        writeln!(out, "{i},{},{v}", ingest::format_timestamp(&t))?;
    }
    Ok(())
}

/// Histogram resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Integer,
    OneDecimal,
}

impl Rounding {
    fn scale(self) -> f64 {
        match self {
            Rounding::Integer => 1.0,
            Rounding::OneDecimal => 10.0,
        }
    }

    /// Renders a bin key as the value it stands for.
    pub fn label(self, key: i64) -> String {
        match self {
            Rounding::Integer => key.to_string(),
            Rounding::OneDecimal => {
                let sign = if key < 0 { "-" } else { "" };
                format!("{sign}{}.{}", key.unsigned_abs() / 10, key.unsigned_abs() % 10)
            }
        }
    }
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::Integer => "integer",
            Rounding::OneDecimal => "one-decimal",
        })
    }
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "integer" => Ok(Rounding::Integer),
            "one-decimal" => Ok(Rounding::OneDecimal),
            other => Err(format!("unknown rounding {other:?}")),
        }
    }
}

/// Counts of values rounded half away from zero, keyed by the rounded
/// value times 1 or 10. Non-finite values are skipped.
pub fn histogram(values: &[f64], rounding: Rounding) -> BTreeMap<i64, usize> {
    let mut bins = BTreeMap::new();
    for v in values.iter().filter(|v| v.is_finite()) {
        *bins.entry((v * rounding.scale()).round() as i64).or_insert(0) += 1;
    }
    bins
}

pub fn write_histogram_csv<W: Write>(mut out: W, bins: &BTreeMap<i64, usize>, rounding: Rounding) -> std::io::Result<()> {
    writeln!(out, "# rounding={rounding}")?;
    writeln!(out, "bin,count")?;
    for (k, c) in bins {
        writeln!(out, "{},{c}", rounding.label(*k))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub timestamp: NaiveDateTime,
    pub value: f64,
    /// Absent when the report has no row for this timestamp.
    pub score: Option<f64>,
    pub flag: Option<bool>,
}

/// Left join of a series with a report on timestamp.
pub fn overlay(series: &TimeSeries, report_timestamps: &[NaiveDateTime], report: &AnomalyReport) -> Vec<OverlayRow> {
    let index: HashMap<NaiveDateTime, usize> = report_timestamps
        .iter()
        .enumerate()
        .take(report.len())
        .map(|(i, t)| (*t, i))
        .collect();
    series
        .iter()
        .map(|(t, v)| {
            let hit = index.get(&t).copied();
            OverlayRow {
                timestamp: t,
                value: v,
                score: hit.map(|i| report.scores[i]),
                flag: hit.map(|i| report.flags[i]),
            }
        })
        .collect()
}

pub const OVERLAY_CSV_HEADER: &str = "timestamp,value,score,flag";

pub fn write_overlay_csv<W: Write>(mut out: W, rows: &[OverlayRow]) -> std::io::Result<()> {
    writeln!(out, "{OVERLAY_CSV_HEADER}")?;
    for r in rows {
        let score = r.score.map(|s| s.to_string()).unwrap_or_default();
        let flag = r.flag.map(|f| u8::from(f).to_string()).unwrap_or_default();
        writeln!(out, "{},{},{score},{flag}", ingest::format_timestamp(&r.timestamp), r.value)?;
    }
    Ok(())
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 300.0;
const SVG_MARGIN: f64 = 20.0;

/// A polyline of `ys` against their index, with a red circle on every
/// marked point. Non-finite values break the line.
pub fn write_svg<W: Write>(mut out: W, ys: &[f64], marks: Option<&[bool]>) -> std::io::Result<()> {
    let finite = ys.iter().copied().filter(|y| y.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = ys.len().max(2) - 1;
    let x = |i: usize| SVG_MARGIN + (SVG_WIDTH - 2.0 * SVG_MARGIN) * i as f64 / n as f64;
    let y = |v: f64| SVG_HEIGHT - SVG_MARGIN - (SVG_HEIGHT - 2.0 * SVG_MARGIN) * (v - lo) / span;

    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    )?;
    let mut segment: Vec<String> = Vec::new();
    let flush = |segment: &mut Vec<String>, out: &mut W| -> std::io::Result<()> {
        if !segment.is_empty() {
            writeln!(
                out,
                r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points="{}"/>"#,
                segment.join(" ")
            )?;
            segment.clear();
        }
        Ok(())
    };
    for (i, v) in ys.iter().enumerate() {
        if v.is_finite() {
            segment.push(format!("{:.2},{:.2}", x(i), y(*v)));
        } else {
            flush(&mut segment, &mut out)?;
        }
    }
    flush(&mut segment, &mut out)?;
    if let Some(marks) = marks {
        for (i, (v, m)) in ys.iter().zip(marks).enumerate() {
            if *m && v.is_finite() {
                writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, x(i), y(*v))?;
            }
        }
    }
    writeln!(out, "</svg>")
}
