//! Config-driven end-to-end runs: data, injection, every detector, metrics.
//!
//! [`DetectorSettings`] and [`run_detector`] are shared with the command
//! line `detect` subcommand, so a pipeline row and a standalone detector run
//! with the same settings produce the same flags.

use std::fmt;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::{self, ClusterError, ClusterModel, LdcofConfig, TemporalFeature, Threshold};
use crate::config::{Config, ConfigError};
use crate::detect::{self, AnomalyReport, DetectError, EsdConfig, FilterConfig};
use crate::evaluate::{self, EvalError, MetricsRow, Strategy};
use crate::ingest::{self, CleaningConfig, IngestError, TimeSeries};
use crate::stats::{self, StatsError};
use crate::synth::{self, CompanionConfig, InjectionConfig, LabeledSeries, Pcg32, SynthError, SyntheticConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// True when the fault lies in settings rather than data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Detect(DetectError::InvalidConfig(_))
                | PipelineError::Cluster(ClusterError::InvalidConfig(_))
                | PipelineError::Eval(EvalError::InvalidConfig(_) | EvalError::NonpositiveWeights)
                | PipelineError::Synth(SynthError::InvalidConfig(_))
                | PipelineError::Ingest(IngestError::InvalidConfig(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Baseline,
    LowHighOnline,
    LowHighOffline,
    Gaussian,
    Sesd,
    Ldcof,
    Ensemble,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 7] = [
        DetectorKind::Baseline,
        DetectorKind::LowHighOnline,
        DetectorKind::LowHighOffline,
        DetectorKind::Gaussian,
        DetectorKind::Sesd,
        DetectorKind::Ldcof,
        DetectorKind::Ensemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Baseline => "baseline",
            DetectorKind::LowHighOnline => "lowhigh-online",
            DetectorKind::LowHighOffline => "lowhigh-offline",
            DetectorKind::Gaussian => "gaussian",
            DetectorKind::Sesd => "sesd",
            DetectorKind::Ldcof => "ldcof",
            DetectorKind::Ensemble => "ensemble",
        }
    }

    fn needs_oxygen(self) -> bool {
        self == DetectorKind::Ldcof
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::Invalid {
                key: "detector".into(),
                reason: format!("unknown detector {s:?}"),
            })
    }
}

fn parse_list<T: FromStr<Err = ConfigError>>(text: &str) -> Result<Vec<T>, ConfigError> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(T::from_str).collect()
}

fn invalid(key: &str, e: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: e.to_string(),
    }
}

/// Hyper-parameters of every detector. Defaults are the best published
/// configurations for sporadic anomalies.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSettings {
    pub lowhigh_offline: FilterConfig,
    pub lowhigh_online: FilterConfig,
    pub gaussian_eps: f64,
    pub gaussian_window: Option<usize>,
    /// `None` picks [`EsdConfig::default_max_outliers`] for the series.
    pub esd_max_outliers: Option<usize>,
    pub esd_significance: f64,
    pub period: usize,
    pub ldcof: LdcofConfig,
    pub temporal: TemporalFeature,
    pub ensemble_members: Vec<DetectorKind>,
    pub ensemble_weights: Option<Vec<f64>>,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            lowhigh_offline: FilterConfig::sporadic_offline(),
            lowhigh_online: FilterConfig::sporadic_online(),
            gaussian_eps: 0.08,
            gaussian_window: None,
            esd_max_outliers: None,
            esd_significance: EsdConfig::DEFAULT_SIGNIFICANCE,
            period: 1440,
            ldcof: LdcofConfig::default(),
            temporal: TemporalFeature::None,
            ensemble_members: vec![
                DetectorKind::LowHighOnline,
                DetectorKind::LowHighOffline,
                DetectorKind::Gaussian,
                DetectorKind::Sesd,
                DetectorKind::Ldcof,
            ],
            ensemble_weights: None,
        }
    }
}

impl DetectorSettings {
    /// Reads the `[lowhigh]`, `[gaussian]`, `[sesd]`, `[ldcof]` and
    /// `[ensemble]` sections; absent keys keep their defaults.
    pub fn from_config(cfg: &Config, period: usize) -> Result<Self, ConfigError> {
        let d = Self::default();
        let filter = |w: &str, a: &str, base: FilterConfig| -> Result<FilterConfig, ConfigError> {
            let window = cfg.parse_or(w, base.window())?;
            let alpha = cfg.parse_or(a, base.alpha())?;
            FilterConfig::new(window, alpha, base.mode()).map_err(|e| invalid(w, e))
        };
        let gaussian_window = match cfg.get("gaussian.window") {
            None | Some("none") => None,
            Some(_) => Some(cfg.parse_required::<usize>("gaussian.window")?),
        };
        let esd_max_outliers = match cfg.get("sesd.max_outliers") {
            None | Some("auto") => None,
            Some(_) => Some(cfg.parse_required::<usize>("sesd.max_outliers")?),
        };
        let threshold = match cfg.get("ldcof.threshold") {
            None => d.ldcof.threshold,
            Some(t) => t.parse::<Threshold>().map_err(|e| invalid("ldcof.threshold", e))?,
        };
        let ldcof = LdcofConfig::new(
            cfg.parse_or("ldcof.k", d.ldcof.k_clusters())?,
            cfg.parse_or("ldcof.alpha", d.ldcof.alpha())?,
            cfg.parse_or("ldcof.beta", d.ldcof.beta())?,
            threshold,
            cfg.parse_or("ldcof.max_iter", d.ldcof.max_iter())?,
        )
        .map_err(|e| invalid("ldcof", e))?;
        let temporal = match cfg.get("ldcof.temporal") {
            None => d.temporal,
            Some(t) => t.parse().map_err(|e| invalid("ldcof.temporal", e))?,
        };
        let ensemble_members = match cfg.get("ensemble.members") {
            None => d.ensemble_members,
            Some(m) => parse_list(m)?,
        };
        let ensemble_weights = match cfg.get("ensemble.weights") {
            None => None,
            Some(w) => Some(
                w.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| invalid("ensemble.weights", e)))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let settings = Self {
            lowhigh_offline: filter("lowhigh.offline_window", "lowhigh.offline_alpha", d.lowhigh_offline)?,
            lowhigh_online: filter("lowhigh.online_window", "lowhigh.online_alpha", d.lowhigh_online)?,
            gaussian_eps: cfg.parse_or("gaussian.eps", d.gaussian_eps)?,
            gaussian_window,
            esd_max_outliers,
            esd_significance: cfg.parse_or("sesd.significance", d.esd_significance)?,
            period: cfg.parse_or("sesd.period", period)?,
            ldcof,
            temporal,
            ensemble_members,
            ensemble_weights,
        };
        settings.validate()?;
        Ok(settings)
    }

    /// Checks what the detector constructors cannot see in isolation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gaussian_eps > 0.0 && self.gaussian_eps < 1.0) {
            return Err(invalid("gaussian.eps", "must lie in (0, 1)"));
        }
        if self.gaussian_window == Some(0) {
            return Err(invalid("gaussian.window", "must be positive"));
        }
        EsdConfig::new(self.esd_max_outliers.unwrap_or(1), self.esd_significance, self.period)
            .map_err(|e| invalid("sesd", e))?;
        if self.ensemble_members.is_empty() || self.ensemble_members.contains(&DetectorKind::Ensemble) {
            return Err(invalid("ensemble.members", "needs one or more non-ensemble detectors"));
        }
        if let Some(w) = &self.ensemble_weights {
            if w.len() != self.ensemble_members.len() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invalid("ensemble.weights", "need one positive weight per member"));
            }
        }
        Ok(())
    }

    pub fn strategy(&self) -> Strategy {
        match &self.ensemble_weights {
            None => Strategy::Majority,
            Some(w) => Strategy::Weighted(w.clone()),
        }
    }

    pub fn esd_config(&self, len: usize) -> Result<EsdConfig, DetectError> {
        let k = self.esd_max_outliers.unwrap_or_else(|| EsdConfig::default_max_outliers(len));
        EsdConfig::new(k, self.esd_significance, self.period)
    }
}

/// Data a detector may draw on.
#[derive(Debug, Clone, Copy)]
pub struct DetectInput<'a> {
    /// Series under test.
    pub series: &'a TimeSeries,
    /// Companion series covering every timestamp of `series`.
    pub oxygen: Option<&'a TimeSeries>,
    /// Clean training series for the Gaussian model and for clustering;
    /// the series under test is used when absent.
    pub train: Option<&'a TimeSeries>,
    pub train_oxygen: Option<&'a TimeSeries>,
    /// Pre-trained cluster model; replaces clustering when present.
    pub model: Option<&'a ClusterModel>,
    pub seed: u64,
}

/// Fits LDCOF on the training features (or takes the supplied model).
pub fn ldcof_model(settings: &DetectorSettings, input: &DetectInput<'_>) -> Result<ClusterModel, PipelineError> {
    if let Some(m) = input.model {
        return Ok(m.clone());
    }
    let (nh4, o2) = match (input.train, input.train_oxygen) {
        (Some(a), Some(o)) => (a, o),
        _ => (input.series, input.oxygen.ok_or_else(missing_oxygen)?),
    };
    let features = cluster::raw_features(nh4, o2, settings.temporal)?.standardize()?;
    Ok(cluster::ldcof_fit(&features, &settings.ldcof, input.seed)?)
}

fn missing_oxygen() -> PipelineError {
    PipelineError::Input("ldcof needs an oxygen series".into())
}

fn run_ldcof(settings: &DetectorSettings, input: &DetectInput<'_>) -> Result<AnomalyReport, PipelineError> {
    let oxygen = input.oxygen.ok_or_else(missing_oxygen)?;
    let model = ldcof_model(settings, input)?;
    let raw = cluster::raw_features(input.series, oxygen, settings.temporal)?;
    if raw.rows.len() != input.series.len() {
        return Err(PipelineError::Input(format!(
            "oxygen series covers {} of {} timestamps",
            raw.rows.len(),
            input.series.len()
        )));
    }
    let expected: Vec<&str> = model.column_names.iter().skip(2).map(String::as_str).collect();
    let found: Vec<&str> = settings.temporal.column_name().into_iter().collect();
    if expected != found {
        return Err(PipelineError::Input(format!(
            "model expects temporal column {expected:?}, settings give {found:?}"
        )));
    }
    let matrix = raw.standardize_with(&model.normalization)?;
    Ok(cluster::ldcof_detect(&model, &matrix, &settings.ldcof)?)
}

/// Runs one detector. The ensemble runs its members first.
pub fn run_detector(kind: DetectorKind, settings: &DetectorSettings, input: &DetectInput<'_>) -> Result<AnomalyReport, PipelineError> {
    let values = input.series.values();
    Ok(match kind {
        DetectorKind::Baseline => detect::baseline_detect(values)?,
        DetectorKind::LowHighOnline => detect::lowhigh_online(values, &settings.lowhigh_online),
        DetectorKind::LowHighOffline => detect::lowhigh_offline(values, &settings.lowhigh_offline)?,
        DetectorKind::Gaussian => {
            let train = input.train.unwrap_or(input.series);
            let model = stats::fit_gaussian(train.values())?;
            detect::gaussian_detect(&model, values, settings.gaussian_eps, settings.gaussian_window)?
        }
        DetectorKind::Sesd => detect::sesd_detect(values, &settings.esd_config(values.len())?)?,
        DetectorKind::Ldcof => run_ldcof(settings, input)?,
        DetectorKind::Ensemble => {
            let members = settings
                .ensemble_members
                .iter()
                .map(|k| run_detector(*k, settings, input))
                .collect::<Result<Vec<_>, _>>()?;
            evaluate::ensemble_combine(&members, &settings.strategy())?
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    /// Sensor CSV holding an ammonia and, optionally, an oxygen sensor.
    File {
        path: PathBuf,
        ammonia: String,
        oxygen: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads for the detector comparison; 1 runs sequentially and
    /// 0 lets the thread pool decide. Never affects the output.
    pub threads: usize,
    pub source: DataSource,
    pub cleaning: CleaningConfig,
    pub injection: InjectionConfig,
    pub detectors: Vec<DetectorKind>,
    pub settings: DetectorSettings,
}

impl PipelineConfig {
    /// `[pipeline] seed` is the only required key.
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let seed: u64 = cfg.parse_required("pipeline.seed")?;
        let threads = cfg.parse_or("pipeline.threads", 1usize)?;
        let source = match cfg.get("data.source").unwrap_or("synthetic") {
            "synthetic" => {
                let d = SyntheticConfig::default();
                let s = SyntheticConfig {
                    length: cfg.parse_or("data.length", d.length)?,
                    period: cfg.parse_or("data.period", d.period)?,
                    level: cfg.parse_or("data.level", d.level)?,
                    amplitude: cfg.parse_or("data.amplitude", d.amplitude)?,
                    trend_per_period: cfg.parse_or("data.trend_per_period", d.trend_per_period)?,
                    noise_sd: cfg.parse_or("data.noise_sd", d.noise_sd)?,
                    start: d.start,
                };
                if s.period == 0 || s.length < 2 || !(s.noise_sd >= 0.0) {
                    return Err(invalid("data", "need period > 0, length >= 2 and noise_sd >= 0"));
                }
                DataSource::Synthetic(s)
            }
            "file" => DataSource::File {
                path: PathBuf::from(cfg.require("data.input")?),
                ammonia: cfg.require("data.ammonia")?.to_string(),
                oxygen: cfg.get("data.oxygen").map(String::from),
            },
            other => return Err(invalid("data.source", format!("expected synthetic or file, got {other:?}"))),
        };
        let period = match &source {
            DataSource::Synthetic(s) => s.period,
            DataSource::File { .. } => 1440,
        };
        let dc = CleaningConfig::default();
        let cleaning = CleaningConfig::new(
            cfg.parse_or("clean.magnitude_cutoff", dc.magnitude_cutoff())?,
            cfg.parse_or("clean.drop_negative", dc.drop_negative)?,
            cfg.parse_or("clean.drop_nonfinite", dc.drop_nonfinite)?,
        )
        .map_err(|e| invalid("clean.magnitude_cutoff", e))?;
        let di = InjectionConfig::standard(0);
        let injection = InjectionConfig::new(
            cfg.parse_or("inject.rate", di.rate())?,
            cfg.parse_or("inject.offset_min", di.offset_min())?,
            cfg.parse_or("inject.offset_max", di.offset_max())?,
            0,
        )
        .map_err(|e| invalid("inject", e))?;
        let detectors = match cfg.get("pipeline.detectors") {
            None => DetectorKind::ALL.to_vec(),
            Some(list) => parse_list(list)?,
        };
        if detectors.is_empty() {
            return Err(invalid("pipeline.detectors", "empty list"));
        }
        Ok(Self {
            seed,
            threads,
            source,
            cleaning,
            injection,
            detectors,
            settings: DetectorSettings::from_config(cfg, period)?,
        })
    }
}

/// Seeds for each random stage, drawn in this order from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub train: u64,
    pub train_oxygen: u64,
    pub test: u64,
    pub test_oxygen: u64,
    pub inject: u64,
    pub cluster: u64,
}

impl StageSeeds {
    pub fn derive(seed: u64) -> Self {
        let mut rng = Pcg32::new(seed);
        Self {
            train: rng.next_u64(),
            train_oxygen: rng.next_u64(),
            test: rng.next_u64(),
            test_oxygen: rng.next_u64(),
            inject: rng.next_u64(),
            cluster: rng.next_u64(),
        }
    }
}

/// Training and test data of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: TimeSeries,
    pub train_oxygen: Option<TimeSeries>,
    /// Test series with injected anomalies and labels.
    pub test: LabeledSeries,
    pub test_oxygen: Option<TimeSeries>,
}

/// Synthetic training and test traces for `seed`. Oxygen follows the clean
/// ammonia signal, so injected spikes break the correlation.
pub fn synthetic_dataset(cfg: &SyntheticConfig, injection: &InjectionConfig, seed: u64) -> Result<Dataset, SynthError> {
    let seeds = StageSeeds::derive(seed);
    let companion = CompanionConfig::default();
    let train = synth::synthetic_trace("NH4", cfg, seeds.train);
    let train_oxygen = synth::companion_trace("O2", &train, cfg.level, &companion, seeds.train_oxygen);
    let clean = synth::synthetic_trace("NH4", cfg, seeds.test);
    let test_oxygen = synth::companion_trace("O2", &clean, cfg.level, &companion, seeds.test_oxygen);
    let test = synth::inject(&clean, &injection.with_seed(seeds.inject))?;
    Ok(Dataset {
        train,
        train_oxygen: Some(train_oxygen),
        test,
        test_oxygen: Some(test_oxygen),
    })
}

fn load_sensor(readings: &[ingest::SensorReading], id: &str, cleaning: &CleaningConfig) -> Result<TimeSeries, PipelineError> {
    let raw = ingest::group_by_sensor(readings)
        .into_iter()
        .find(|s| s.sensor_id() == id)
        .ok_or_else(|| PipelineError::Input(format!("sensor {id:?} not found")))?;
    let (cleaned, _) = ingest::clean(&raw, cleaning);
    Ok(ingest::condense_dst(&cleaned)?.0)
}

/// Keeps the timestamps the two series share.
fn align(a: &TimeSeries, b: &TimeSeries) -> Result<(TimeSeries, TimeSeries), PipelineError> {
    let raw = cluster::raw_features(a, b, TemporalFeature::None)?;
    let pick = |col: usize, id: &str| {
        TimeSeries::new(id, raw.timestamps.clone(), raw.rows.iter().map(|r| r[col]).collect())
    };
    Ok((pick(0, a.sensor_id())?, pick(1, b.sensor_id())?))
}

/// Cleaned file data; the clean series doubles as training data.
pub fn file_dataset(
    path: &std::path::Path,
    ammonia: &str,
    oxygen: Option<&str>,
    cleaning: &CleaningConfig,
    injection: &InjectionConfig,
    seed: u64,
) -> Result<Dataset, PipelineError> {
    let file = File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let readings = ingest::parse_sensor_csv(BufReader::new(file), None)?;
    let mut nh4 = load_sensor(&readings, ammonia, cleaning)?;
    let mut o2 = None;
    if let Some(id) = oxygen {
        let (a, o) = align(&nh4, &load_sensor(&readings, id, cleaning)?)?;
        nh4 = a;
        o2 = Some(o);
    }
    let seeds = StageSeeds::derive(seed);
    let test = synth::inject(&nh4, &injection.with_seed(seeds.inject))?;
    Ok(Dataset {
        train: nh4,
        train_oxygen: o2.clone(),
        test,
        test_oxygen: o2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Effective configuration, one `key=value ...` line per stage.
    pub header: Vec<String>,
    pub dataset: Dataset,
    pub reports: Vec<AnomalyReport>,
    pub rows: Vec<MetricsRow>,
}

impl PipelineOutput {
    /// Header lines as `#` comments followed by the metrics CSV.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            writeln!(s, "# {h}").expect("string write");
        }
        let mut csv = Vec::new();
        evaluate::write_metrics_csv(&mut csv, &self.rows).expect("vec write");
        s.push_str(&String::from_utf8(csv).expect("utf-8"));
        s
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let dataset = match &cfg.source {
        DataSource::Synthetic(s) => synthetic_dataset(s, &cfg.injection, cfg.seed)?,
        DataSource::File { path, ammonia, oxygen } => {
            file_dataset(path, ammonia, oxygen.as_deref(), &cfg.cleaning, &cfg.injection, cfg.seed)?
        }
    };
    let seeds = StageSeeds::derive(cfg.seed);
    let input = DetectInput {
        series: &dataset.test.series,
        oxygen: dataset.test_oxygen.as_ref(),
        train: Some(&dataset.train),
        train_oxygen: dataset.train_oxygen.as_ref(),
        model: None,
        seed: seeds.cluster,
    };
    let settings = &cfg.settings;
    let has_oxygen = input.oxygen.is_some();
    for k in &cfg.detectors {
        let uses_ldcof = k.needs_oxygen() || (*k == DetectorKind::Ensemble && settings.ensemble_members.contains(&DetectorKind::Ldcof));
        if uses_ldcof && !has_oxygen {
            return Err(missing_oxygen());
        }
    }

    // Members are computed once; the ensemble reuses them.
    let mut needed: Vec<DetectorKind> = Vec::new();
    for k in cfg.detectors.iter().chain(&settings.ensemble_members) {
        if *k != DetectorKind::Ensemble && !needed.contains(k) && (cfg.detectors.contains(k) || cfg.detectors.contains(&DetectorKind::Ensemble)) {
            needed.push(*k);
        }
    }
    let run = |k: &DetectorKind| run_detector(*k, settings, &input);
    let computed: Vec<Result<AnomalyReport, PipelineError>> = if cfg.threads == 1 {
        needed.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| PipelineError::Input(format!("thread pool: {e}")))?;
        pool.install(|| needed.par_iter().map(run).collect())
    };
    let computed = computed.into_iter().collect::<Result<Vec<_>, _>>()?;
    let lookup = |k: DetectorKind| &computed[needed.iter().position(|n| *n == k).expect("computed")];

    let mut reports = Vec::with_capacity(cfg.detectors.len());
    for &k in &cfg.detectors {
        reports.push(if k == DetectorKind::Ensemble {
            let members: Vec<AnomalyReport> = settings.ensemble_members.iter().map(|m| lookup(*m).clone()).collect();
            evaluate::ensemble_combine(&members, &settings.strategy())?
        } else {
            lookup(k).clone()
        });
    }
    let rows = reports
        .iter()
        .map(|r| Ok(MetricsRow::new(r.detector.clone(), evaluate::confusion(r, &dataset.test.labels)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;

    let mut header = vec![format!("pipeline seed={}", cfg.seed)];
    header.push(match &cfg.source {
        DataSource::Synthetic(s) => format!(
            "data source=synthetic length={} period={} level={} amplitude={} trend_per_period={} noise_sd={}",
            s.length, s.period, s.level, s.amplitude, s.trend_per_period, s.noise_sd
        ),
        DataSource::File { path, ammonia, oxygen } => format!(
            "data source=file input={} ammonia={} oxygen={} magnitude_cutoff={} drop_negative={} drop_nonfinite={}",
            path.display(),
            ammonia,
            oxygen.as_deref().unwrap_or("none"),
            cfg.cleaning.magnitude_cutoff(),
            cfg.cleaning.drop_negative,
            cfg.cleaning.drop_nonfinite
        ),
    });
    header.push(format!(
        "inject rate={} offset_min={} offset_max={} positives={}",
        cfg.injection.rate(),
        cfg.injection.offset_min(),
        cfg.injection.offset_max(),
        dataset.test.positives()
    ));
    for r in &reports {
        header.push(format!("{} {}", r.detector, r.config_echo).trim_end().to_string());
    }
    Ok(PipelineOutput {
        header,
        dataset,
        reports,
        rows,
    })
}
