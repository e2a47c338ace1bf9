//! Univariate detectors: the naive baseline, the running-average low-high
//! pass filter, the Gaussian predictor and Seasonal ESD.

use std::collections::VecDeque;
use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use crate::ingest::{self, IngestError, TimeSeries};
use crate::special;
use crate::stats::{self, GaussianModel, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("series of length {len} is too short (need at least {required})")]
    SeriesTooShort { len: usize, required: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("model has zero variance")]
    ZeroVarianceModel,
    #[error("need at least {required} samples, got {len}")]
    TooFewSamples { len: usize, required: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Per-point flags and scores produced by a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    pub detector: String,
    pub flags: Vec<bool>,
    pub scores: Vec<f64>,
    /// Hyper-parameters as `key=value` pairs separated by spaces.
    pub config_echo: String,
}

impl AnomalyReport {
    pub fn new(detector: impl Into<String>, flags: Vec<bool>, scores: Vec<f64>, config_echo: impl Into<String>) -> Self {
        assert_eq!(flags.len(), scores.len(), "flags and scores must align");
        Self {
            detector: detector.into(),
            flags,
            scores,
            config_echo: config_echo.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.then_some(i))
            .collect()
    }
}

pub const REPORT_CSV_HEADER: &str = "timestamp,value,score,flag,detector";

/// Writes the report joined with its series. The first line is a `#`
/// comment echoing the detector configuration.
pub fn write_report_csv<W: Write>(mut out: W, series: &TimeSeries, report: &AnomalyReport) -> std::io::Result<()> {
    assert_eq!(series.len(), report.len(), "report must align with series");
    if report.config_echo.is_empty() {
        writeln!(out, "# detector={}", report.detector)?;
    } else {
        writeln!(out, "# detector={} {}", report.detector, report.config_echo)?;
    }
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for (i, (t, v)) in series.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            ingest::format_timestamp(&t),
            v,
            report.scores[i],
            u8::from(report.flags[i]),
            report.detector
        )?;
    }
    Ok(())
}

/// Reads a report CSV back into its series and report. The configuration
/// comment is not recovered.
pub fn read_report_csv<R: Read>(source: R) -> Result<(TimeSeries, AnomalyReport), IngestError> {
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut scores = Vec::new();
    let mut flags = Vec::new();
    let mut detector: Option<String> = None;
    ingest::read_csv_rows(source, REPORT_CSV_HEADER, |_, rec| {
        timestamps.push(ingest::parse_timestamp(&rec[0])?);
        values.push(ingest::parse_value(&rec[1])?);
        scores.push(ingest::parse_value(&rec[2])?);
        flags.push(match &rec[3] {
            "0" => false,
            "1" => true,
            other => return Err(format!("bad flag {other:?}")),
        });
        match &detector {
            None => detector = Some(rec[4].to_string()),
            Some(d) if d != &rec[4] => return Err(format!("mixed detectors {d:?} and {:?}", &rec[4])),
            Some(_) => {}
        }
        Ok(())
    })?;
    let detector = detector.ok_or(IngestError::EmptyInput)?;
    let series = TimeSeries::new(detector.clone(), timestamps, values)?;
    Ok((series, AnomalyReport::new(detector, flags, scores, "")))
}

/// Flags a point when the integer part of its jump from the previous
/// reading exceeds 1. The first point is never flagged.
pub fn baseline_detect(values: &[f64]) -> Result<AnomalyReport, DetectError> {
    if values.len() < 2 {
        return Err(DetectError::SeriesTooShort {
            len: values.len(),
            required: 2,
        });
    }
    let mut flags = vec![false; values.len()];
    let mut scores = vec![0.0; values.len()];
    for i in 1..values.len() {
        let jump = (values[i] - values[i - 1]).abs();
        scores[i] = jump;
        flags[i] = jump.floor() > 1.0;
    }
    Ok(AnomalyReport::new("baseline", flags, scores, ""))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Online,
    Offline,
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Online => "online",
            FilterMode::Offline => "offline",
        })
    }
}

/// Low-high pass filter settings: window size and sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    window: usize,
    alpha: f64,
    mode: FilterMode,
}

impl FilterConfig {
    pub fn new(window: usize, alpha: f64, mode: FilterMode) -> Result<Self, DetectError> {
        if window < 2 {
            return Err(DetectError::InvalidConfig(format!("window must be >= 2, got {window}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DetectError::InvalidConfig(format!("alpha must be in (0, 1], got {alpha}")));
        }
        Ok(Self { window, alpha, mode })
    }

    /// Offline, tuned for isolated spikes: `W = 5`, `alpha = 1`.
    pub fn sporadic_offline() -> Self {
        Self {
            window: 5,
            alpha: 1.0,
            mode: FilterMode::Offline,
        }
    }

    /// Offline, tuned for slow anomalous trends: `W = 600`, `alpha = 1`.
    pub fn trend_offline() -> Self {
        Self {
            window: 600,
            alpha: 1.0,
            mode: FilterMode::Offline,
        }
    }

    /// Online, tuned for isolated spikes: `W = 20`, `alpha = 0.2`.
    pub fn sporadic_online() -> Self {
        Self {
            window: 20,
            alpha: 0.2,
            mode: FilterMode::Online,
        }
    }

    /// Online, tuned for a day-long anomalous trend: `W = 1440`, `alpha = 0.5`.
    pub fn trend_online() -> Self {
        Self {
            window: 1440,
            alpha: 0.5,
            mode: FilterMode::Online,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    fn echo(&self) -> String {
        format!("window={} alpha={} mode={}", self.window, self.alpha, self.mode)
    }
}

/// Offline low-high pass filter.
///
/// The population standard deviation of the whole series is computed once.
/// Each point joins a window of the last `W` points (partially filled at the
/// start) and is flagged when `alpha * x` falls strictly outside
/// `average(window) +/- std`. The score is `alpha * x - average`.
pub fn lowhigh_offline(values: &[f64], cfg: &FilterConfig) -> Result<AnomalyReport, DetectError> {
    if values.len() < cfg.window {
        return Err(DetectError::SeriesTooShort {
            len: values.len(),
            required: cfg.window,
        });
    }
    let std = stats::population_std(values);
    if std == 0.0 && cfg.alpha == 1.0 {
        return Err(DetectError::ZeroVariance);
    }
    let mut flags = Vec::with_capacity(values.len());
    let mut scores = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let start = (i + 1).saturating_sub(cfg.window);
        let window = &values[start..=i];
        let avg = window.iter().sum::<f64>() / window.len() as f64;
        let scaled = cfg.alpha * values[i];
        flags.push(scaled > avg + std || scaled < avg - std);
        scores.push(scaled - avg);
    }
    Ok(AnomalyReport::new(
        "lowhigh-offline",
        flags,
        scores,
        FilterConfig { mode: FilterMode::Offline, ..*cfg }.echo(),
    ))
}

/// Outcome of feeding one value to [`LowHighOnline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub flag: bool,
    pub score: f64,
}

/// Online low-high pass filter.
///
/// Same rule as [`lowhigh_offline`], but the band half-width is the sample
/// standard deviation of the current window (0 while it holds one point).
/// Window sums are kept relative to the first value seen and re-summed from
/// the buffer once per `W` updates, so each step is amortised `O(1)`.
#[derive(Debug, Clone)]
pub struct LowHighOnline {
    cfg: FilterConfig,
    buf: VecDeque<f64>,
    shift: f64,
    sum: f64,
    sum_sq: f64,
    since_resync: usize,
    flags: Vec<bool>,
    scores: Vec<f64>,
}

impl LowHighOnline {
    pub fn new(cfg: FilterConfig) -> Self {
        Self {
            cfg,
            buf: VecDeque::with_capacity(cfg.window),
            shift: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
            since_resync: 0,
            flags: Vec::new(),
            scores: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64) -> Verdict {
        if self.flags.is_empty() && self.buf.is_empty() {
            self.shift = x;
        }
        if self.buf.len() == self.cfg.window {
            let old = self.buf.pop_front().expect("full window") - self.shift;
            self.sum -= old;
            self.sum_sq -= old * old;
        }
        self.buf.push_back(x);
        let d = x - self.shift;
        self.sum += d;
        self.sum_sq += d * d;
        self.since_resync += 1;
        if self.since_resync >= self.cfg.window {
            self.sum = self.buf.iter().map(|v| v - self.shift).sum();
            self.sum_sq = self.buf.iter().map(|v| (v - self.shift) * (v - self.shift)).sum();
            self.since_resync = 0;
        }

        let n = self.buf.len() as f64;
        let avg = self.shift + self.sum / n;
        let std = if self.buf.len() < 2 {
            0.0
        } else {
            ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0).sqrt()
        };
        let scaled = self.cfg.alpha * x;
        let verdict = Verdict {
            flag: scaled > avg + std || scaled < avg - std,
            score: scaled - avg,
        };
        self.flags.push(verdict.flag);
        self.scores.push(verdict.score);
        verdict
    }

    pub fn processed(&self) -> usize {
        self.flags.len()
    }

    pub fn finish(self) -> AnomalyReport {
        let echo = FilterConfig { mode: FilterMode::Online, ..self.cfg }.echo();
        AnomalyReport::new("lowhigh-online", self.flags, self.scores, echo)
    }
}

/// Runs [`LowHighOnline`] over a whole slice.
pub fn lowhigh_online(values: &[f64], cfg: &FilterConfig) -> AnomalyReport {
    let mut filter = LowHighOnline::new(*cfg);
    for &x in values {
        filter.push(x);
    }
    filter.finish()
}

/// Two-tailed tail probability `P(|Z - mean| >= |z - mean|)` under the model.
///
/// The raw density of a continuous value is not a probability, so the
/// predictor thresholds this tail mass instead; it lies in `(0, 1]` and
/// equals 1 at the mean.
pub fn gaussian_score(model: &GaussianModel, z: f64) -> Result<f64, DetectError> {
    if model.zero_variance() {
        return Err(DetectError::ZeroVarianceModel);
    }
    Ok(special::normal_two_sided_tail((z - model.mean) / model.std_dev()))
}

/// Univariate Gaussian predictor.
///
/// Point mode flags values whose score is below `eps`. With `window =
/// Some(w)` the series is cut into consecutive non-overlapping windows of
/// `w` points (the last may be shorter); a window is flagged, with all its
/// members, when the product of member scores is below `eps`, and every
/// member carries that product as its score.
pub fn gaussian_detect(
    model: &GaussianModel,
    values: &[f64],
    eps: f64,
    window: Option<usize>,
) -> Result<AnomalyReport, DetectError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DetectError::InvalidConfig(format!("eps must be in (0, 1), got {eps}")));
    }
    if window == Some(0) {
        return Err(DetectError::InvalidConfig("window must be positive".into()));
    }
    let point_scores = values
        .iter()
        .map(|&z| gaussian_score(model, z))
        .collect::<Result<Vec<_>, _>>()?;
    let (flags, scores, echo) = match window {
        None => (
            point_scores.iter().map(|&s| s < eps).collect(),
            point_scores,
            format!("eps={eps} mean={} variance={}", model.mean, model.variance),
        ),
        Some(w) => {
            let mut flags = Vec::with_capacity(values.len());
            let mut scores = Vec::with_capacity(values.len());
            for chunk in point_scores.chunks(w) {
                let product: f64 = chunk.iter().product();
                flags.extend(std::iter::repeat_n(product < eps, chunk.len()));
                scores.extend(std::iter::repeat_n(product, chunk.len()));
            }
            (
                flags,
                scores,
                format!("eps={eps} window={w} mean={} variance={}", model.mean, model.variance),
            )
        }
    };
    Ok(AnomalyReport::new("gaussian", flags, scores, echo))
}

/// Seasonal ESD settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsdConfig {
    max_outliers: usize,
    significance: f64,
    period: usize,
}

impl EsdConfig {
    pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

    pub fn new(max_outliers: usize, significance: f64, period: usize) -> Result<Self, DetectError> {
        if max_outliers == 0 {
            return Err(DetectError::InvalidConfig("max_outliers must be positive".into()));
        }
        if !(significance > 0.0 && significance < 1.0) {
            return Err(DetectError::InvalidConfig(format!(
                "significance must be in (0, 1), got {significance}"
            )));
        }
        if period == 0 {
            return Err(DetectError::InvalidConfig("period must be positive".into()));
        }
        Ok(Self {
            max_outliers,
            significance,
            period,
        })
    }

    /// Outlier budget used when none is given: 2% of the series, at least 1.
    pub fn default_max_outliers(len: usize) -> usize {
        len.div_ceil(50).max(1)
    }

    pub fn max_outliers(&self) -> usize {
        self.max_outliers
    }

    pub fn significance(&self) -> f64 {
        self.significance
    }

    pub fn period(&self) -> usize {
        self.period
    }
}

/// One step of the generalized ESD procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsdStep {
    /// Index of the removed point in the input.
    pub index: usize,
    /// Studentized extreme `V_j`.
    pub statistic: f64,
    /// Critical value `lambda_j`.
    pub critical: f64,
}

/// ESD critical value for step `j` (1-based) on `n` points.
pub fn esd_critical_value(n: usize, j: usize, significance: f64) -> f64 {
    let remaining = (n - j + 1) as f64;
    let tail = significance / (2.0 * remaining);
    let df = (n - j - 1) as f64;
    let t = special::student_t_upper_quantile(tail, df);
    (n - j) as f64 * t / ((df + t * t) * remaining).sqrt()
}

/// Runs up to `k` removal steps and returns each step's statistic and
/// critical value. Stops early if the remaining points become constant.
///
/// The most extreme remaining point is always the current minimum or
/// maximum, so the values are sorted once and trimmed from either end while
/// shifted running sums track the mean and sample variance.
pub fn esd_steps(values: &[f64], k: usize, significance: f64) -> Result<Vec<EsdStep>, DetectError> {
    if k == 0 {
        return Err(DetectError::InvalidConfig("k must be positive".into()));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(DetectError::InvalidConfig(format!(
            "significance must be in (0, 1), got {significance}"
        )));
    }
    let n = values.len();
    if n < k + 2 {
        return Err(DetectError::TooFewSamples { len: n, required: k + 2 });
    }
    let shift = stats::mean(values);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut sum: f64 = values.iter().map(|v| v - shift).sum();
    let mut sum_sq: f64 = values.iter().map(|v| (v - shift) * (v - shift)).sum();
    if sum_sq == 0.0 {
        return Err(DetectError::ZeroVariance);
    }

    let (mut lo, mut hi) = (0usize, n - 1);
    let mut steps = Vec::with_capacity(k);
    for j in 1..=k {
        let m = (hi - lo + 1) as f64;
        let mean = shift + sum / m;
        let var = (sum_sq - sum * sum / m) / (m - 1.0);
        if !(var > 0.0) || values[order[lo]] == values[order[hi]] {
            break;
        }
        let sd = var.sqrt();
        let dev_lo = (values[order[lo]] - mean).abs();
        let dev_hi = (values[order[hi]] - mean).abs();
        let take_lo = dev_lo > dev_hi || (dev_lo == dev_hi && order[lo] < order[hi]);
        let (index, dev) = if take_lo {
            let i = order[lo];
            lo += 1;
            (i, dev_lo)
        } else {
            let i = order[hi];
            hi -= 1;
            (i, dev_hi)
        };
        let d = values[index] - shift;
        sum -= d;
        sum_sq -= d * d;
        steps.push(EsdStep {
            index,
            statistic: dev / sd,
            critical: esd_critical_value(n, j, significance),
        });
    }
    Ok(steps)
}

/// Generalized ESD test. Returns the indices of the first `j*` removed
/// points, where `j*` is the largest step whose statistic exceeds its
/// critical value, in removal order.
pub fn esd_test(values: &[f64], k: usize, significance: f64) -> Result<Vec<usize>, DetectError> {
    let steps = esd_steps(values, k, significance)?;
    let count = steps
        .iter()
        .rposition(|s| s.statistic > s.critical)
        .map_or(0, |p| p + 1);
    Ok(steps[..count].iter().map(|s| s.index).collect())
}

/// Residuals below this fraction of the series magnitude are rounding noise.
const RESIDUAL_NOISE_FLOOR: f64 = 1e-10;

/// Seasonal ESD.
///
/// The seasonal component comes from [`stats::decompose`]; the trend is
/// replaced by its median (over positions where it is defined), and the
/// generalized ESD test runs on `R = X - S - median(trend)`. Scores are the
/// absolute studentized residuals.
pub fn sesd_detect(values: &[f64], cfg: &EsdConfig) -> Result<AnomalyReport, DetectError> {
    let n = values.len();
    if n < 2 * cfg.period {
        return Err(DetectError::SeriesTooShort {
            len: n,
            required: 2 * cfg.period,
        });
    }
    if 2 * cfg.max_outliers >= n {
        return Err(DetectError::InvalidConfig(format!(
            "max_outliers {} must be below half the series length {n}",
            cfg.max_outliers
        )));
    }
    let dec = stats::decompose(values, cfg.period)?;
    let trend: Vec<f64> = dec.defined_trend().collect();
    let centre = stats::median(&trend).expect("trend defined somewhere");
    let residual: Vec<f64> = values
        .iter()
        .zip(&dec.seasonal)
        .map(|(x, s)| x - s - centre)
        .collect();

    let echo = format!(
        "max_outliers={} significance={} period={}",
        cfg.max_outliers, cfg.significance, cfg.period
    );
    let mean = stats::mean(&residual);
    let sd = (residual.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut flags = vec![false; n];
    if sd <= RESIDUAL_NOISE_FLOOR * scale {
        return Ok(AnomalyReport::new("sesd", flags, vec![0.0; n], echo));
    }
    for i in esd_test(&residual, cfg.max_outliers, cfg.significance)? {
        flags[i] = true;
    }
    let scores = residual.iter().map(|r| (r - mean).abs() / sd).collect();
    Ok(AnomalyReport::new("sesd", flags, scores, echo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_rule() {
        let r = baseline_detect(&[3.0, 3.5, 3.9]).unwrap();
        assert_eq!(r.flags, vec![false, false, false]);
        let r = baseline_detect(&[3.0, 5.2]).unwrap();
        assert_eq!(r.flags, vec![false, true]);
        assert!((r.scores[1] - 2.2).abs() < 1e-12);
        // a jump of exactly 2 has integer part 2
        assert!(baseline_detect(&[0.0, 2.0]).unwrap().flags[1]);
        assert!(!baseline_detect(&[0.0, 1.999]).unwrap().flags[1]);
        assert!(matches!(baseline_detect(&[1.0]), Err(DetectError::SeriesTooShort { .. })));
    }

    #[test]
    fn filter_config_validation() {
        assert!(FilterConfig::new(1, 0.5, FilterMode::Online).is_err());
        assert!(FilterConfig::new(5, 0.0, FilterMode::Online).is_err());
        assert!(FilterConfig::new(5, 1.5, FilterMode::Online).is_err());
        assert!(FilterConfig::new(5, 1.0, FilterMode::Offline).is_ok());
        let d = FilterConfig::sporadic_offline();
        assert_eq!((d.window(), d.alpha()), (5, 1.0));
        let d = FilterConfig::sporadic_online();
        assert_eq!((d.window(), d.alpha()), (20, 0.2));
        let d = FilterConfig::trend_online();
        assert_eq!((d.window(), d.alpha()), (1440, 0.5));
    }

    #[test]
    fn offline_spike() {
        let mut x = vec![3.0; 12];
        x[6] = 9.0;
        let r = lowhigh_offline(&x, &FilterConfig::sporadic_offline()).unwrap();
        // std over the series
        let m: f64 = 42.0 / 12.0;
        let std = ((11.0 * (3.0 - m) * (3.0 - m) + (9.0 - m) * (9.0 - m)) / 12.0).sqrt();
        // hand evaluation: spike 9 vs avg 4.2; following points 3 vs avg 4.2
        // (|1.2| < std) until the spike leaves the window
        assert!(std > 1.2 && std < 4.8);
        let expected: Vec<bool> = (0..12).map(|i| i == 6).collect();
        assert_eq!(r.flags, expected);
        assert!((r.scores[6] - (9.0 - 4.2)).abs() < 1e-12);
        assert_eq!(r.config_echo, "window=5 alpha=1 mode=offline");
    }

    #[test]
    fn offline_degenerate_cases() {
        let x = vec![2.0; 10];
        assert_eq!(
            lowhigh_offline(&x, &FilterConfig::sporadic_offline()),
            Err(DetectError::ZeroVariance)
        );
        // with alpha < 1 a constant series sits below the band everywhere
        let cfg = FilterConfig::new(5, 0.5, FilterMode::Offline).unwrap();
        assert!(lowhigh_offline(&x, &cfg).unwrap().flags.iter().all(|f| *f));
        assert!(matches!(
            lowhigh_offline(&x[..3], &FilterConfig::sporadic_offline()),
            Err(DetectError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn online_constant_series_quiet() {
        let cfg = FilterConfig::new(20, 1.0, FilterMode::Online).unwrap();
        let r = lowhigh_online(&[4.0; 100], &cfg);
        assert_eq!(r.flagged_count(), 0);
        assert_eq!(r.len(), 100);
        assert_eq!(r.detector, "lowhigh-online");
    }

    #[test]
    fn online_first_point_against_itself() {
        let cfg = FilterConfig::new(3, 0.5, FilterMode::Online).unwrap();
        let mut f = LowHighOnline::new(cfg);
        // 0.5 * 4 = 2 < 4 - 0
        let v = f.push(4.0);
        assert!(v.flag);
        assert_eq!(v.score, -2.0);
        assert_eq!(f.processed(), 1);
    }

    #[test]
    fn gaussian_score_points() {
        let m = GaussianModel { mean: 0.0, variance: 1.0, n: 100 };
        assert_eq!(gaussian_score(&m, 0.0).unwrap(), 1.0);
        assert!((gaussian_score(&m, 1.959_964).unwrap() - 0.05).abs() < 1e-6);
        let m2 = GaussianModel { mean: 3.0, variance: 4.0, n: 10 };
        assert_eq!(gaussian_score(&m2, 3.7).unwrap(), gaussian_score(&m2, 2.3).unwrap());
        let z = GaussianModel { mean: 3.0, variance: 0.0, n: 10 };
        assert_eq!(gaussian_score(&z, 3.0), Err(DetectError::ZeroVarianceModel));
    }

    #[test]
    fn gaussian_point_and_window_modes() {
        let m = GaussianModel { mean: 0.0, variance: 1.0, n: 100 };
        let r = gaussian_detect(&m, &[2.5, 1.0, 0.0], 0.05, None).unwrap();
        assert_eq!(r.flags, vec![true, false, false]);
        // window product of 1.0-sigma scores: 0.3173^2 ~ 0.1007
        let r = gaussian_detect(&m, &[1.0, 1.0, 0.0, 0.0, 3.0], 0.08, Some(2)).unwrap();
        assert_eq!(r.flags, vec![false, false, false, false, true]);
        let r = gaussian_detect(&m, &[1.0, 1.0, 1.0], 0.08, Some(3)).unwrap();
        assert_eq!(r.flags, vec![true; 3]);
        assert!(gaussian_detect(&m, &[1.0], 0.0, None).is_err());
        assert!(gaussian_detect(&m, &[1.0], 0.5, Some(0)).is_err());
        let tiny = gaussian_detect(&m, &[5.0, -8.0, 30.0], 1e-300, None).unwrap();
        assert_eq!(tiny.flagged_count(), 0);
    }

    #[test]
    fn esd_config_and_preconditions() {
        assert!(EsdConfig::new(0, 0.05, 10).is_err());
        assert!(EsdConfig::new(3, 1.0, 10).is_err());
        assert!(EsdConfig::new(3, 0.05, 0).is_err());
        assert!(matches!(esd_test(&[1.0, 2.0, 3.0], 0, 0.05), Err(DetectError::InvalidConfig(_))));
        assert!(matches!(esd_test(&[1.0, 2.0, 3.0], 2, 0.05), Err(DetectError::TooFewSamples { .. })));
        assert_eq!(esd_test(&[1.0; 10], 2, 0.05), Err(DetectError::ZeroVariance));
        assert_eq!(EsdConfig::default_max_outliers(4320), 87);
        assert_eq!(EsdConfig::default_max_outliers(10), 1);
    }

    #[test]
    fn esd_stops_when_remainder_constant() {
        let mut x = vec![5.0; 20];
        x[3] = 50.0;
        let out = esd_test(&x, 4, 0.05).unwrap();
        assert_eq!(out, vec![3]);
    }

    #[test]
    fn sesd_limits() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let cfg = EsdConfig::new(5, 0.05, 30).unwrap();
        assert!(matches!(sesd_detect(&x, &cfg), Err(DetectError::SeriesTooShort { .. })));
        let cfg = EsdConfig::new(20, 0.05, 10).unwrap();
        assert!(matches!(sesd_detect(&x, &cfg), Err(DetectError::InvalidConfig(_))));
    }

    #[test]
    fn report_csv_roundtrip() {
        use chrono::NaiveDate;
        let start = NaiveDate::from_ymd_opt(2016, 5, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = TimeSeries::per_minute("NH4", start, vec![1.0, 5.5, 1.25]);
        let r = baseline_detect(s.values()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &s, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# detector=baseline"));
        assert!(text.contains("\n2016-05-01 00:01:00,5.5,4.5,1,baseline\n"));
        let (s2, r2) = read_report_csv(buf.as_slice()).unwrap();
        assert_eq!(s2.values(), s.values());
        assert_eq!(s2.timestamps(), s.timestamps());
        assert_eq!(r2.flags, r.flags);
        assert_eq!(r2.scores, r.scores);
    }
}
