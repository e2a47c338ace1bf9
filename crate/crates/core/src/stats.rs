//! Additive seasonal decomposition, Gaussian maximum-likelihood fitting and
//! correlation coefficients.

use std::cmp::Ordering;
use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series of length {len} is too short (need at least {required})")]
    SeriesTooShort { len: usize, required: usize },
    #[error("period must be positive")]
    InvalidPeriod,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input is constant")]
    ConstantInput,
    #[error("coefficient undefined: all pairs tied in one variable")]
    Undefined,
}

/// Trend, seasonal and residual components aligned with a source series.
///
/// `trend` and `residual` are `None` in the first and last `period / 2`
/// positions, where the centred moving average is not defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
    pub period: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.seasonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seasonal.is_empty()
    }

    /// Trend values where defined.
    pub fn defined_trend(&self) -> impl Iterator<Item = f64> + '_ {
        self.trend.iter().filter_map(|t| *t)
    }
}

/// Classical additive decomposition with a centred moving average.
///
/// For an odd `period` the trend is the plain `period`-point mean; for an
/// even one it is the `2 x period` average, i.e. `period + 1` points with
/// half weight on both ends. The seasonal profile is the per-phase mean of
/// the detrended series, shifted to zero mean and tiled from index 0.
pub fn decompose(values: &[f64], period: usize) -> Result<Decomposition, StatsError> {
    if period == 0 {
        return Err(StatsError::InvalidPeriod);
    }
    let n = values.len();
    if n < 2 * period {
        return Err(StatsError::SeriesTooShort {
            len: n,
            required: 2 * period,
        });
    }
    let half = period / 2;
    let p = period as f64;
    let mut trend = vec![None; n];
    for i in half..n - half {
        let avg = if period % 2 == 1 {
            values[i - half..=i + half].iter().sum::<f64>() / p
        } else {
            let inner: f64 = values[i - half + 1..i + half].iter().sum();
            (0.5 * values[i - half] + inner + 0.5 * values[i + half]) / p
        };
        trend[i] = Some(avg);
    }

    let mut phase_sum = vec![0.0; period];
    let mut phase_count = vec![0usize; period];
    for (i, (x, t)) in values.iter().zip(&trend).enumerate() {
        if let Some(t) = t {
            phase_sum[i % period] += x - t;
            phase_count[i % period] += 1;
        }
    }
    // n >= 2 * period leaves at least `period` consecutive defined positions
    let mut profile: Vec<f64> = phase_sum
        .iter()
        .zip(&phase_count)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let centre = profile.iter().sum::<f64>() / p;
    profile.iter_mut().for_each(|s| *s -= centre);

    let seasonal: Vec<f64> = (0..n).map(|i| profile[i % period]).collect();
    let residual = values
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((x, t), s)| t.map(|t| x - t - s))
        .collect();
    Ok(Decomposition {
        trend,
        seasonal,
        residual,
        period,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `index,value,trend,seasonal,residual`, leaving undefined fields empty.
pub fn write_decomposition_csv<W: Write>(mut out: W, values: &[f64], dec: &Decomposition) -> std::io::Result<()> {
    writeln!(out, "index,value,trend,seasonal,residual")?;
    for (i, x) in values.iter().enumerate() {
        writeln!(
            out,
            "{i},{x},{},{},{}",
            fmt_opt(dec.trend[i]),
            dec.seasonal[i],
            fmt_opt(dec.residual[i])
        )?;
    }
    Ok(())
}

/// Mean and (population) variance of a training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl GaussianModel {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Detectors refuse models with zero variance.
    pub fn zero_variance(&self) -> bool {
        self.variance == 0.0
    }
}

/// Maximum-likelihood Gaussian fit: arithmetic mean and divisor-`n` variance.
pub fn fit_gaussian(values: &[f64]) -> Result<GaussianModel, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    Ok(GaussianModel { mean, variance, n })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewSamples(x.len()));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let mx = mean(x);
    let my = mean(y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]].total_cmp(&values[order[start]]) == Ordering::Equal {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall's tau-b, computed in `O(n log n)` with Knight's merge-sort count.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tied_pairs = |len: u64| len * (len - 1) / 2;
    let mut x_ties = 0u64;
    let mut joint_ties = 0u64;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0.total_cmp(&pairs[i].0) == Ordering::Equal {
            j += 1;
        }
        x_ties += tied_pairs((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && pairs[l].1.total_cmp(&pairs[k].1) == Ordering::Equal {
                l += 1;
            }
            joint_ties += tied_pairs((l - k) as u64);
            k = l;
        }
        i = j;
    }

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut y_ties = 0u64;
    let mut i = 0;
    while i < ys.len() {
        let mut j = i + 1;
        while j < ys.len() && ys[j].total_cmp(&ys[i]) == Ordering::Equal {
            j += 1;
        }
        y_ties += tied_pairs((j - i) as u64);
        i = j;
    }

    let total = tied_pairs(n);
    let untied_x = total - x_ties;
    let untied_y = total - y_ties;
    if untied_x == 0 || untied_y == 0 {
        return Err(StatsError::Undefined);
    }
    let concordant_minus_discordant =
        total as i64 - x_ties as i64 - y_ties as i64 + joint_ties as i64 - 2 * swaps as i64;
    Ok(concordant_minus_discordant as f64 / (untied_x as f64 * untied_y as f64).sqrt())
}

/// Stable merge sort of `v`, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
