//! k-means and the LDCOF cluster-based outlier score.
//!
//! Features are z-scored per column before clustering. A fitted
//! [`ClusterModel`] keeps the normalization so that new data can be mapped
//! into the same space, and it can be written to and read back from a small
//! text format without changing any score.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime};
use thiserror::Error;

use crate::detect::AnomalyReport;
use crate::ingest::TimeSeries;
use crate::synth::Pcg32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("no timestamps shared by the two series")]
    EmptyJoin,
    #[error("need at least {required} rows, got {rows}")]
    TooFewRows { rows: usize, required: usize },
    #[error("expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cluster {0} has zero average distance")]
    DegenerateCluster(usize),
    #[error("invalid clustering config: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
}

/// Optional calendar column appended to the sensor features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalFeature {
    #[default]
    None,
    /// 1..=12
    Month,
    /// 0 = Dec-Feb, 1 = Mar-May, 2 = Jun-Aug, 3 = Sep-Nov
    Season,
    /// 0 = Monday .. 6 = Sunday
    Weekday,
}

impl TemporalFeature {
    pub fn encode(self, ts: &NaiveDateTime) -> Option<f64> {
        match self {
            TemporalFeature::None => None,
            TemporalFeature::Month => Some(ts.month() as f64),
            TemporalFeature::Season => Some(((ts.month() % 12) / 3) as f64),
            TemporalFeature::Weekday => Some(ts.weekday().num_days_from_monday() as f64),
        }
    }

    pub fn column_name(self) -> Option<&'static str> {
        match self {
            TemporalFeature::None => None,
            TemporalFeature::Month => Some("month"),
            TemporalFeature::Season => Some("season"),
            TemporalFeature::Weekday => Some("weekday"),
        }
    }
}

impl fmt::Display for TemporalFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column_name().unwrap_or("none"))
    }
}

impl FromStr for TemporalFeature {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(TemporalFeature::None),
            "month" => Ok(TemporalFeature::Month),
            "season" => Ok(TemporalFeature::Season),
            "weekday" => Ok(TemporalFeature::Weekday),
            other => Err(ClusterError::InvalidConfig(format!("unknown temporal feature {other:?}"))),
        }
    }
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

impl Normalization {
    /// Columns with zero spread map to 0.
    pub fn apply(&self, x: f64) -> f64 {
        if self.std > 0.0 {
            (x - self.mean) / self.std
        } else {
            0.0
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        self.mean + z * self.std
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    column_names: Vec<String>,
    normalization: Vec<Normalization>,
    timestamps: Vec<NaiveDateTime>,
}

impl FeatureMatrix {
    /// Z-scores `raw` with its own column means and population stds.
    pub fn from_raw(column_names: Vec<String>, timestamps: Vec<NaiveDateTime>, raw: &[Vec<f64>]) -> Result<Self, ClusterError> {
        let width = column_names.len();
        check_width(raw, width)?;
        let n = raw.len() as f64;
        let normalization = (0..width)
            .map(|c| {
                if raw.is_empty() {
                    return Normalization { mean: 0.0, std: 0.0 };
                }
                let mean = raw.iter().map(|r| r[c]).sum::<f64>() / n;
                let var = raw.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
                Normalization { mean, std: var.sqrt() }
            })
            .collect();
        Self::standardize_with(column_names, timestamps, raw, normalization)
    }

    /// Z-scores `raw` with externally supplied parameters, e.g. those of a
    /// trained model.
    pub fn standardize_with(
        column_names: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        raw: &[Vec<f64>],
        normalization: Vec<Normalization>,
    ) -> Result<Self, ClusterError> {
        let width = column_names.len();
        check_width(raw, width)?;
        if normalization.len() != width {
            return Err(ClusterError::DimensionMismatch {
                expected: width,
                found: normalization.len(),
            });
        }
        if !timestamps.is_empty() && timestamps.len() != raw.len() {
            return Err(ClusterError::InvalidConfig("timestamps not aligned with rows".into()));
        }
        let rows = raw
            .iter()
            .map(|r| r.iter().zip(&normalization).map(|(x, n)| n.apply(*x)).collect())
            .collect();
        Ok(Self {
            rows,
            column_names,
            normalization,
            timestamps,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn normalization(&self) -> &[Normalization] {
        &self.normalization
    }

    /// Row timestamps when the matrix was built from series; may be empty.
    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }
}

fn check_width(raw: &[Vec<f64>], width: usize) -> Result<(), ClusterError> {
    match raw.iter().find(|r| r.len() != width) {
        Some(r) => Err(ClusterError::DimensionMismatch {
            expected: width,
            found: r.len(),
        }),
        None => Ok(()),
    }
}

/// Un-normalized feature rows from an inner join of two series on timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub column_names: Vec<String>,
    pub timestamps: Vec<NaiveDateTime>,
    pub rows: Vec<Vec<f64>>,
    /// Points of either series without a partner.
    pub dropped: usize,
}

impl RawFeatures {
    pub fn standardize(&self) -> Result<FeatureMatrix, ClusterError> {
        FeatureMatrix::from_raw(self.column_names.clone(), self.timestamps.clone(), &self.rows)
    }

    pub fn standardize_with(&self, normalization: &[Normalization]) -> Result<FeatureMatrix, ClusterError> {
        FeatureMatrix::standardize_with(
            self.column_names.clone(),
            self.timestamps.clone(),
            &self.rows,
            normalization.to_vec(),
        )
    }
}

/// Joins ammonia and oxygen readings on timestamp, in ammonia order, and
/// appends the temporal column.
pub fn raw_features(ammonia: &TimeSeries, oxygen: &TimeSeries, temporal: TemporalFeature) -> Result<RawFeatures, ClusterError> {
    let mut oxy: HashMap<NaiveDateTime, f64> = HashMap::with_capacity(oxygen.len());
    for (t, v) in oxygen.iter() {
        oxy.entry(t).or_insert(v);
    }
    let mut timestamps = Vec::new();
    let mut rows = Vec::new();
    for (t, a) in ammonia.iter() {
        if let Some(o) = oxy.remove(&t) {
            let mut row = vec![a, o];
            row.extend(temporal.encode(&t));
            timestamps.push(t);
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(ClusterError::EmptyJoin);
    }
    let mut column_names = vec![ammonia.sensor_id().to_string(), oxygen.sensor_id().to_string()];
    column_names.extend(temporal.column_name().map(String::from));
    Ok(RawFeatures {
        column_names,
        dropped: ammonia.len() + oxygen.len() - 2 * rows.len(),
        timestamps,
        rows,
    })
}

/// [`raw_features`] followed by z-scoring over the joined rows.
pub fn build_features(ammonia: &TimeSeries, oxygen: &TimeSeries, temporal: TemporalFeature) -> Result<(FeatureMatrix, usize), ClusterError> {
    let raw = raw_features(ammonia, oxygen, temporal)?;
    Ok((raw.standardize()?, raw.dropped))
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    /// Training row to cluster; empty for a model loaded from text.
    pub assignments: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Mean Euclidean distance of members to their centroid.
    pub avg_dist: Vec<f64>,
    /// Mean squared distance of members to their centroid.
    pub mean_sq_dist: Vec<f64>,
    pub large: Vec<usize>,
    pub small: Vec<usize>,
    pub seed: u64,
    /// Total within-cluster squared distance after each Lloyd iteration.
    pub inertia: Vec<f64>,
    pub column_names: Vec<String>,
    pub normalization: Vec<Normalization>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn final_inertia(&self) -> f64 {
        self.inertia.last().copied().unwrap_or(0.0)
    }

    pub fn is_large(&self, cluster: usize) -> bool {
        self.large.contains(&cluster)
    }

    /// Replaces the large/small partition.
    pub fn apply_split(&mut self, alpha: f64, beta: f64) {
        let (large, small) = split_clusters(&self.sizes, alpha, beta);
        self.large = large;
        self.small = small;
    }
}

/// Lloyd's algorithm.
///
/// Initial centroids are `k` distinct rows drawn by a partial Fisher-Yates
/// shuffle with [`Pcg32::new`]`(seed)`. Each iteration assigns every row to
/// its nearest centroid (lowest index on ties), hands each empty cluster the
/// row farthest from its current centroid, then moves centroids to member
/// means. Stops when assignments repeat or after `max_iter` iterations.
pub fn kmeans_fit(matrix: &FeatureMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel, ClusterError> {
    let rows = matrix.rows();
    let n = rows.len();
    if k == 0 || max_iter == 0 {
        return Err(ClusterError::InvalidConfig("k and max_iter must be positive".into()));
    }
    if n < k {
        return Err(ClusterError::TooFewRows { rows: n, required: k });
    }
    let dim = matrix.width();
    let mut rng = Pcg32::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut centroids: Vec<Vec<f64>> = order[..k].iter().map(|&i| rows[i].clone()).collect();
    let mut assignments = vec![usize::MAX; n];
    let mut inertia = Vec::new();

    for _ in 0..max_iter {
        let mut next: Vec<usize> = rows.iter().map(|r| nearest(r, &centroids).0).collect();
        let mut sizes = vec![0usize; k];
        for &c in &next {
            sizes[c] += 1;
        }
        for empty in 0..k {
            if sizes[empty] != 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, r) in rows.iter().enumerate() {
                let c = next[i];
                if sizes[c] > 1 {
                    let d = sq_dist(r, &centroids[c]);
                    if d > far_d {
                        far_d = d;
                        far = Some(i);
                    }
                }
            }
            // n >= k guarantees a donor cluster with two or more members
            let i = far.expect("donor row");
            sizes[next[i]] -= 1;
            next[i] = empty;
            sizes[empty] = 1;
            centroids[empty] = rows[i].clone();
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (r, &c) in rows.iter().zip(&next) {
            for (s, x) in sums[c].iter_mut().zip(r) {
                *s += x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            let m = sizes[c] as f64;
            centroids[c] = sum.into_iter().map(|s| s / m).collect();
        }
        inertia.push(rows.iter().zip(&next).map(|(r, &c)| sq_dist(r, &centroids[c])).sum());

        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }

    let mut sizes = vec![0usize; k];
    let mut dist_sum = vec![0.0; k];
    let mut sq_sum = vec![0.0; k];
    for (r, &c) in rows.iter().zip(&assignments) {
        let d2 = sq_dist(r, &centroids[c]);
        sizes[c] += 1;
        dist_sum[c] += d2.sqrt();
        sq_sum[c] += d2;
    }
    let per_member = |sums: Vec<f64>| -> Vec<f64> {
        sums.into_iter()
            .zip(&sizes)
            .map(|(s, &m)| if m > 0 { s / m as f64 } else { 0.0 })
            .collect()
    };
    let avg_dist = per_member(dist_sum);
    let mean_sq_dist = per_member(sq_sum);

    Ok(ClusterModel {
        centroids,
        assignments,
        large: (0..k).collect(),
        small: Vec::new(),
        sizes,
        avg_dist,
        mean_sq_dist,
        seed,
        inertia,
        column_names: matrix.column_names().to_vec(),
        normalization: matrix.normalization().to_vec(),
    })
}

/// Partitions cluster indices into (large, small), both in ascending index
/// order.
///
/// Clusters are ranked by size, largest first (lower index first on equal
/// size). The boundary is the first rank `b` whose cumulative size reaches
/// `alpha * total`, or whose successor is at most `beta` times its size.
pub fn split_clusters(sizes: &[usize], alpha: f64, beta: f64) -> (Vec<usize>, Vec<usize>) {
    let mut ranked: Vec<usize> = (0..sizes.len()).collect();
    ranked.sort_by(|a, b| sizes[*b].cmp(&sizes[*a]));
    let total: usize = sizes.iter().sum();
    let mut cumulative = 0usize;
    let mut boundary = ranked.len();
    for b in 0..ranked.len() {
        cumulative += sizes[ranked[b]];
        if cumulative as f64 >= alpha * total as f64 {
            boundary = b + 1;
            break;
        }
        if let Some(&next) = ranked.get(b + 1) {
            let current = sizes[ranked[b]];
            if current > 0 && sizes[next] as f64 / current as f64 <= beta {
                boundary = b + 1;
                break;
            }
        }
    }
    let mut large = ranked[..boundary].to_vec();
    let mut small = ranked[boundary..].to_vec();
    large.sort_unstable();
    small.sort_unstable();
    (large, small)
}

/// LDCOF score of a standardized point.
///
/// The point goes to its nearest centroid. Inside a large cluster the score
/// is the distance to that centroid over the cluster's average member
/// distance; inside a small cluster it is the smallest such ratio over all
/// large clusters.
pub fn ldcof_score(model: &ClusterModel, point: &[f64]) -> Result<f64, ClusterError> {
    if point.len() != model.dim() {
        return Err(ClusterError::DimensionMismatch {
            expected: model.dim(),
            found: point.len(),
        });
    }
    let ratio = |c: usize| -> Result<f64, ClusterError> {
        let davg = model.avg_dist[c];
        if davg > 0.0 {
            Ok(sq_dist(point, &model.centroids[c]).sqrt() / davg)
        } else {
            Err(ClusterError::DegenerateCluster(c))
        }
    };
    let (home, _) = nearest(point, &model.centroids);
    if model.is_large(home) {
        return ratio(home);
    }
    let mut best = f64::INFINITY;
    for &c in &model.large {
        best = best.min(ratio(c)?);
    }
    Ok(best)
}

/// Mean plus one population standard deviation of the distance ratios of
/// all large-cluster training members, computed from per-cluster moments.
pub fn auto_threshold(model: &ClusterModel) -> f64 {
    let mut count = 0.0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &c in &model.large {
        let m = model.sizes[c] as f64;
        let davg = model.avg_dist[c];
        count += m;
        if davg > 0.0 {
            sum += m;
            sum_sq += m * model.mean_sq_dist[c] / (davg * davg);
        }
    }
    if count == 0.0 {
        return f64::INFINITY;
    }
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(0.0);
    mean + var.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Auto,
    Fixed(f64),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Threshold {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Threshold::Auto);
        }
        match s.parse::<f64>() {
            Ok(t) if !t.is_nan() => Ok(Threshold::Fixed(t)),
            _ => Err(ClusterError::InvalidConfig(format!("bad threshold {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdcofConfig {
    k_clusters: usize,
    alpha: f64,
    beta: f64,
    pub threshold: Threshold,
    max_iter: usize,
}

impl Default for LdcofConfig {
    fn default() -> Self {
        Self {
            k_clusters: 12,
            alpha: 0.75,
            beta: 0.25,
            threshold: Threshold::Auto,
            max_iter: 100,
        }
    }
}

impl LdcofConfig {
    pub fn new(k_clusters: usize, alpha: f64, beta: f64, threshold: Threshold, max_iter: usize) -> Result<Self, ClusterError> {
        if k_clusters == 0 || max_iter == 0 {
            return Err(ClusterError::InvalidConfig("k and max_iter must be positive".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(ClusterError::InvalidConfig(format!(
                "alpha and beta must lie in (0, 1), got {alpha} and {beta}"
            )));
        }
        Ok(Self {
            k_clusters,
            alpha,
            beta,
            threshold,
            max_iter,
        })
    }

    pub fn k_clusters(&self) -> usize {
        self.k_clusters
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn echo(&self) -> String {
        format!(
            "k={} alpha={} beta={} threshold={} max_iter={}",
            self.k_clusters, self.alpha, self.beta, self.threshold, self.max_iter
        )
    }
}

/// k-means followed by the large/small split.
pub fn ldcof_fit(matrix: &FeatureMatrix, cfg: &LdcofConfig, seed: u64) -> Result<ClusterModel, ClusterError> {
    let mut model = kmeans_fit(matrix, cfg.k_clusters, seed, cfg.max_iter)?;
    model.apply_split(cfg.alpha, cfg.beta);
    Ok(model)
}

/// Scores every row; flags rows scoring strictly above the threshold.
pub fn ldcof_detect(model: &ClusterModel, matrix: &FeatureMatrix, cfg: &LdcofConfig) -> Result<AnomalyReport, ClusterError> {
    let threshold = match cfg.threshold {
        Threshold::Auto => auto_threshold(model),
        Threshold::Fixed(t) => t,
    };
    let scores = matrix
        .rows()
        .iter()
        .map(|r| ldcof_score(model, r))
        .collect::<Result<Vec<_>, _>>()?;
    let flags = scores.iter().map(|s| *s > threshold).collect();
    Ok(AnomalyReport::new(
        "ldcof",
        flags,
        scores,
        format!("{} seed={} threshold_value={}", cfg.echo(), model.seed, threshold),
    ))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Writes the model as text: `k=`, `seed=`, `columns=`, one centroid per
/// line, `large=`, `small=`, `avg_dist=`, then `sizes=`, `mean_sq_dist=`,
/// `norm_mean=` and `norm_std=`.
pub fn write_model<W: Write>(mut out: W, model: &ClusterModel) -> std::io::Result<()> {
    writeln!(out, "k={}", model.k())?;
    writeln!(out, "seed={}", model.seed)?;
    writeln!(out, "columns={}", model.column_names.join(","))?;
    for c in &model.centroids {
        writeln!(out, "{}", join(c))?;
    }
    writeln!(out, "large={}", join(&model.large))?;
    writeln!(out, "small={}", join(&model.small))?;
    writeln!(out, "avg_dist={}", join(&model.avg_dist))?;
    writeln!(out, "sizes={}", join(&model.sizes))?;
    writeln!(out, "mean_sq_dist={}", join(&model.mean_sq_dist))?;
    let means: Vec<f64> = model.normalization.iter().map(|n| n.mean).collect();
    let stds: Vec<f64> = model.normalization.iter().map(|n| n.std).collect();
    writeln!(out, "norm_mean={}", join(&means))?;
    writeln!(out, "norm_std={}", join(&stds))?;
    Ok(())
}

struct ModelLines<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> ModelLines<R> {
    fn err(&self, reason: impl Into<String>) -> ClusterError {
        ClusterError::ModelFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn next(&mut self) -> Result<String, ClusterError> {
        self.line += 1;
        match self.lines.next() {
            Some(Ok(l)) => Ok(l.trim_end_matches('\r').to_string()),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String, ClusterError> {
        let l = self.next()?;
        match l.split_once('=') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected `{key}=`"))),
        }
    }

    fn list<T: FromStr>(&self, v: &str) -> Result<Vec<T>, ClusterError> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|_| self.err(format!("bad number {x:?}"))))
            .collect()
    }

    fn keyed_list<T: FromStr>(&mut self, key: &str, len: usize) -> Result<Vec<T>, ClusterError> {
        let v = self.keyed(key)?;
        let xs = self.list(&v)?;
        if xs.len() != len {
            return Err(self.err(format!("`{key}` needs {len} entries, got {}", xs.len())));
        }
        Ok(xs)
    }
}

/// Reads a model written by [`write_model`]. Assignments and the inertia
/// history are not stored and come back empty.
pub fn read_model<R: BufRead>(source: R) -> Result<ClusterModel, ClusterError> {
    let mut src = ModelLines {
        lines: source.lines(),
        line: 0,
    };
    let k_text = src.keyed("k")?;
    let k: usize = k_text.parse().map_err(|_| src.err("bad k"))?;
    if k == 0 {
        return Err(src.err("k must be positive"));
    }
    let seed_text = src.keyed("seed")?;
    let seed: u64 = seed_text.parse().map_err(|_| src.err("bad seed"))?;
    let columns = src.keyed("columns")?;
    let column_names: Vec<String> = columns.split(',').map(String::from).collect();
    let dim = column_names.len();
    let mut centroids = Vec::new();
    for _ in 0..k {
        let l = src.next()?;
        let c: Vec<f64> = src.list(&l)?;
        if c.len() != dim || c.iter().any(|x| !x.is_finite()) {
            return Err(src.err(format!("centroid needs {dim} finite values")));
        }
        centroids.push(c);
    }
    let large_text = src.keyed("large")?;
    let large: Vec<usize> = src.list(&large_text)?;
    let small_text = src.keyed("small")?;
    let small: Vec<usize> = src.list(&small_text)?;
    let mut seen = vec![false; k];
    for &c in large.iter().chain(&small) {
        if c >= k || seen[c] {
            return Err(src.err("large/small must partition the clusters"));
        }
        seen[c] = true;
    }
    if seen.contains(&false) || large.is_empty() {
        return Err(src.err("large/small must partition the clusters"));
    }
    let avg_dist: Vec<f64> = src.keyed_list("avg_dist", k)?;
    let sizes: Vec<usize> = src.keyed_list("sizes", k)?;
    let mean_sq_dist: Vec<f64> = src.keyed_list("mean_sq_dist", k)?;
    if avg_dist.iter().chain(&mean_sq_dist).any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(src.err("distances must be finite and non-negative"));
    }
    let means: Vec<f64> = src.keyed_list("norm_mean", dim)?;
    let stds: Vec<f64> = src.keyed_list("norm_std", dim)?;
    Ok(ClusterModel {
        centroids,
        assignments: Vec::new(),
        sizes,
        avg_dist,
        mean_sq_dist,
        large,
        small,
        seed,
        inertia: Vec::new(),
        column_names,
        normalization: means.into_iter().zip(stds).map(|(mean, std)| Normalization { mean, std }).collect(),
    })
}
