use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDateTime, TimeDelta};
use sensor_anomaly::cluster::{self, LdcofConfig, TemporalFeature, Threshold};
use sensor_anomaly::config::Config;
use sensor_anomaly::detect::{self, FilterConfig, FilterMode};
use sensor_anomaly::evaluate::{self, FaultPolicy, MetricsRow};
use sensor_anomaly::ingest::{self, CleaningConfig, SensorReading, TimeSeries};
use sensor_anomaly::pipeline::{self, DetectInput, DetectorKind, DetectorSettings, PipelineConfig};
use sensor_anomaly::plot::{self, Rounding};
use sensor_anomaly::stats;
use sensor_anomaly::synth::{self, InjectionConfig, LabeledSeries, SyntheticConfig};

use crate::error::CliError;
use crate::{
    Algo, CleanArgs, Cli, Command, CorrelateArgs, DecomposeArgs, DetectArgs, EvalKind, EvaluateArgs, InjectArgs,
    PipelineArgs, PlotArgs, PlotKind, RoundingArg,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Clean(a) => clean(cli, a),
        Command::Decompose(a) => decompose(cli, a),
        Command::Correlate(a) => correlate(cli, a),
        Command::Inject(a) => inject(cli, a),
        Command::Detect(a) => detect(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Pipeline(a) => run_pipeline(cli, a),
        Command::PlotData(a) => plot_data(cli, a),
    }
}

/// Buffered output file, or standard output.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::internal(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_with(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut out = output(path)?;
    f(&mut out).map_err(CliError::write)?;
    out.flush().map_err(CliError::write)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::read(path, e))
}

fn load_config(cli: &Cli) -> Result<Option<Config>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    Ok(Some(Config::parse(&text)?))
}

fn read_readings(path: &Path) -> Result<Vec<SensorReading>> {
    Ok(ingest::parse_sensor_csv(open(path)?, None)?)
}

/// The named sensor, or the only one present.
fn pick(readings: &[SensorReading], sensor: Option<&str>, path: &Path) -> Result<TimeSeries> {
    let all = ingest::group_by_sensor(readings);
    match sensor {
        Some(id) => all
            .into_iter()
            .find(|s| s.sensor_id() == id)
            .ok_or_else(|| CliError::input(format!("sensor {id:?} not found in {}", path.display()))),
        None if all.len() == 1 => Ok(all.into_iter().next().expect("one series")),
        None => {
            let ids: Vec<&str> = all.iter().map(TimeSeries::sensor_id).collect();
            Err(CliError::config(format!(
                "{} holds sensors {}; choose one with --sensor",
                path.display(),
                ids.join(", ")
            )))
        }
    }
}

fn clean(cli: &Cli, a: &CleanArgs) -> Result<()> {
    let file_cfg = load_config(cli)?.unwrap_or_default();
    let d = CleaningConfig::default();
    let cutoff = match a.magnitude_cutoff {
        Some(c) => c,
        None => file_cfg.parse_or("clean.magnitude_cutoff", d.magnitude_cutoff())?,
    };
    let drop_negative = !a.keep_negative && file_cfg.parse_or("clean.drop_negative", d.drop_negative)?;
    let drop_nonfinite = file_cfg.parse_or("clean.drop_nonfinite", d.drop_nonfinite)?;
    let cfg = CleaningConfig::new(cutoff, drop_negative, drop_nonfinite)?;

    let readings = ingest::parse_sensor_csv(open(&a.input)?, a.sensor.as_deref())?;
    let mut total = ingest::CleaningReport::default();
    let mut out = Vec::new();
    for s in ingest::group_by_sensor(&readings) {
        let (cleaned, r1) = ingest::clean(&s, &cfg);
        let (condensed, r2) = ingest::condense_dst(&cleaned)?;
        total = total + r1 + r2;
        out.push(condensed);
    }
    write_with(cli.output.as_deref(), |w| {
        writeln!(
            w,
            "# clean magnitude_cutoff={} drop_negative={} drop_nonfinite={}",
            cfg.magnitude_cutoff(),
            cfg.drop_negative,
            cfg.drop_nonfinite
        )?;
        ingest::write_sensor_csv(w, &out)
    })?;
    match &a.report {
        Some(p) => write_with(Some(p), |w| write!(w, "{total}")),
        None => {
            eprint!("{total}");
            Ok(())
        }
    }
}

fn decompose(cli: &Cli, a: &DecomposeArgs) -> Result<()> {
    let s = pick(&read_readings(&a.input)?, a.sensor.as_deref(), &a.input)?;
    let dec = stats::decompose(s.values(), a.period)?;
    write_with(cli.output.as_deref(), |w| {
        writeln!(w, "# decompose sensor={} period={}", s.sensor_id(), a.period)?;
        stats::write_decomposition_csv(w, s.values(), &dec)
    })
}

fn correlate(cli: &Cli, a: &CorrelateArgs) -> Result<()> {
    let readings = read_readings(&a.input)?;
    let x = pick(&readings, Some(&a.x), &a.input)?;
    let y = pick(&readings, Some(&a.y), &a.input)?;
    let joined = cluster::raw_features(&x, &y, TemporalFeature::None)?;
    let xs: Vec<f64> = joined.rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = joined.rows.iter().map(|r| r[1]).collect();
    let p = stats::pearson(&xs, &ys)?;
    let s = stats::spearman(&xs, &ys)?;
    let k = stats::kendall(&xs, &ys)?;
    write_with(cli.output.as_deref(), |w| {
        writeln!(w, "x={}", a.x)?;
        writeln!(w, "y={}", a.y)?;
        writeln!(w, "n={}", xs.len())?;
        writeln!(w, "dropped={}", joined.dropped)?;
        writeln!(w, "pearson={p}")?;
        writeln!(w, "spearman={s}")?;
        writeln!(w, "kendall={k}")
    })
}

fn inject(cli: &Cli, a: &InjectArgs) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let cfg = InjectionConfig::new(a.rate, a.offset_min, a.offset_max, seed)?;
    let series = match &a.input {
        Some(p) => pick(&read_readings(p)?, a.sensor.as_deref(), p)?,
        None => {
            if a.period == 0 || a.length == 0 {
                return Err(CliError::config("length and period must be positive"));
            }
            let s = SyntheticConfig {
                length: a.length,
                period: a.period,
                ..SyntheticConfig::default()
            };
            synth::synthetic_trace(a.sensor.as_deref().unwrap_or("NH4"), &s, seed)
        }
    };
    let labeled = synth::inject(&series, &cfg)?;
    write_with(cli.output.as_deref(), |w| {
        writeln!(
            w,
            "# inject sensor={} rate={} offset_min={} offset_max={} seed={} positives={}",
            series.sensor_id(),
            cfg.rate(),
            cfg.offset_min(),
            cfg.offset_max(),
            seed,
            labeled.positives()
        )?;
        synth::write_labeled_csv(w, &labeled)
    })
}

fn filter_override(base: FilterConfig, a: &DetectArgs, mode: FilterMode) -> Result<FilterConfig> {
    Ok(FilterConfig::new(
        a.window.unwrap_or(base.window()),
        a.alpha.unwrap_or(base.alpha()),
        mode,
    )?)
}

fn detector_settings(cli: &Cli, a: &DetectArgs) -> Result<DetectorSettings> {
    let mut s = match load_config(cli)? {
        Some(cfg) => DetectorSettings::from_config(&cfg, 1440)?,
        None => DetectorSettings::default(),
    };
    match a.algo {
        Algo::LowhighOnline => s.lowhigh_online = filter_override(s.lowhigh_online, a, FilterMode::Online)?,
        Algo::LowhighOffline => s.lowhigh_offline = filter_override(s.lowhigh_offline, a, FilterMode::Offline)?,
        _ if a.window.is_some() || a.alpha.is_some() => {
            return Err(CliError::config("--window and --alpha apply to the low-high filters only"));
        }
        _ => {}
    }
    if let Some(e) = a.eps {
        s.gaussian_eps = e;
    }
    if a.gaussian_window.is_some() {
        s.gaussian_window = a.gaussian_window;
    }
    if a.max_outliers.is_some() {
        s.esd_max_outliers = a.max_outliers;
    }
    if let Some(sig) = a.significance {
        s.esd_significance = sig;
    }
    if let Some(p) = a.period {
        s.period = p;
    }
    let threshold = match &a.threshold {
        Some(t) => t.parse::<Threshold>()?,
        None => s.ldcof.threshold,
    };
    s.ldcof = LdcofConfig::new(
        a.k.unwrap_or(s.ldcof.k_clusters()),
        a.ldcof_alpha.unwrap_or(s.ldcof.alpha()),
        a.ldcof_beta.unwrap_or(s.ldcof.beta()),
        threshold,
        s.ldcof.max_iter(),
    )?;
    if let Some(t) = &a.temporal {
        s.temporal = t.parse()?;
    }
    if let Some(m) = &a.members {
        s.ensemble_members = m
            .split(',')
            .map(|x| x.trim().parse::<DetectorKind>())
            .collect::<std::result::Result<_, _>>()?;
    }
    if let Some(w) = &a.weights {
        let weights = w
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::config(format!("bad --weights: {e}")))?;
        s.ensemble_weights = Some(weights);
    }
    s.validate()?;
    Ok(s)
}

fn kind_of(algo: Algo) -> DetectorKind {
    match algo {
        Algo::Baseline => DetectorKind::Baseline,
        Algo::LowhighOnline => DetectorKind::LowHighOnline,
        Algo::LowhighOffline => DetectorKind::LowHighOffline,
        Algo::Gaussian => DetectorKind::Gaussian,
        Algo::Sesd => DetectorKind::Sesd,
        Algo::Ldcof => DetectorKind::Ldcof,
        Algo::Ensemble => DetectorKind::Ensemble,
    }
}

fn read_labels(path: &Path, series: &TimeSeries) -> Result<LabeledSeries> {
    let labeled = synth::read_labeled_csv(open(path)?, series.sensor_id())?;
    if labeled.series.timestamps() != series.timestamps() {
        return Err(CliError::input(format!(
            "labels in {} do not line up with the scored series",
            path.display()
        )));
    }
    Ok(labeled)
}

fn detect(cli: &Cli, a: &DetectArgs) -> Result<()> {
    let settings = detector_settings(cli, a)?;
    let kind = kind_of(a.algo);
    let uses_ldcof = kind == DetectorKind::Ldcof
        || (kind == DetectorKind::Ensemble && settings.ensemble_members.contains(&DetectorKind::Ldcof));
    if uses_ldcof && a.oxygen.is_none() {
        return Err(CliError::config("ldcof needs --oxygen"));
    }

    let readings = read_readings(&a.input)?;
    let series = pick(&readings, a.sensor.as_deref(), &a.input)?;
    let oxygen = match &a.oxygen {
        Some(id) => Some(pick(&readings, Some(id), &a.input)?),
        None => None,
    };
    let (train, train_oxygen) = match &a.train {
        Some(p) => {
            let r = read_readings(p)?;
            let t = pick(&r, Some(series.sensor_id()), p)?;
            let o = match &a.oxygen {
                Some(id) => Some(pick(&r, Some(id), p)?),
                None => None,
            };
            (Some(t), o)
        }
        None => (None, None),
    };
    let loaded = match &a.model {
        Some(p) => Some(cluster::read_model(open(p)?)?),
        None => None,
    };
    let mut input = DetectInput {
        series: &series,
        oxygen: oxygen.as_ref(),
        train: train.as_ref(),
        train_oxygen: train_oxygen.as_ref(),
        model: loaded.as_ref(),
        seed: cli.seed.unwrap_or(0),
    };
    let fitted;
    if let Some(p) = &a.save_model {
        if !uses_ldcof {
            return Err(CliError::config("--save-model applies to ldcof only"));
        }
        fitted = pipeline::ldcof_model(&settings, &input)?;
        write_with(Some(p), |w| cluster::write_model(w, &fitted))?;
        input.model = Some(&fitted);
    }
    let report = pipeline::run_detector(kind, &settings, &input)?;
    write_with(cli.output.as_deref(), |w| detect::write_report_csv(w, &series, &report))?;

    if let Some(lp) = &a.labels {
        let labeled = read_labels(lp, &series)?;
        let row = MetricsRow::new(report.detector.clone(), evaluate::confusion(&report, &labeled.labels)?);
        match &a.metrics {
            Some(p) => write_with(Some(p), |w| write!(w, "{row}"))?,
            None => eprint!("{row}"),
        }
    }
    Ok(())
}

fn parse_time(flag: &str, v: &Option<String>) -> Result<NaiveDateTime> {
    let v = v
        .as_deref()
        .ok_or_else(|| CliError::config(format!("--kind frequency needs --{flag}")))?;
    NaiveDateTime::parse_from_str(v, ingest::TIMESTAMP_FORMAT).map_err(|e| CliError::config(format!("bad --{flag} {v:?}: {e}")))
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<()> {
    let (series, report) = detect::read_report_csv(open(&a.report)?)?;
    match a.kind {
        EvalKind::Metrics | EvalKind::MetricsCsv => {
            let lp = a
                .labels
                .as_ref()
                .ok_or_else(|| CliError::config("metrics need --labels"))?;
            let labeled = read_labels(lp, &TimeSeries::new(report.detector.clone(), series.timestamps().to_vec(), series.values().to_vec())?)?;
            let row = MetricsRow::new(report.detector.clone(), evaluate::confusion(&report, &labeled.labels)?);
            write_with(cli.output.as_deref(), |w| {
                if a.kind == EvalKind::Metrics {
                    write!(w, "{row}")
                } else {
                    evaluate::write_metrics_csv(w, std::slice::from_ref(&row))
                }
            })
        }
        EvalKind::Faults => {
            let policy = FaultPolicy::new(TimeDelta::minutes(a.fault_interval), a.fault_min)?;
            let faults = evaluate::fault_flag(series.timestamps(), &report, &policy)?;
            write_with(cli.output.as_deref(), |w| {
                writeln!(w, "# fault interval_minutes={} min_events={}", a.fault_interval, a.fault_min)?;
                evaluate::write_faults_csv(w, &faults)
            })
        }
        EvalKind::Frequency => {
            let window = (parse_time("window-start", &a.window_start)?, parse_time("window-end", &a.window_end)?);
            let wf = evaluate::window_frequency(series.timestamps(), &report, TimeDelta::minutes(a.bin), window)?;
            write_with(cli.output.as_deref(), |w| {
                writeln!(w, "# frequency bin_minutes={}", a.bin)?;
                evaluate::write_window_frequency_csv(w, &wf)
            })
        }
    }
}

fn run_pipeline(cli: &Cli, a: &PipelineArgs) -> Result<()> {
    let mut cfg = load_config(cli)?.ok_or_else(|| CliError::config("pipeline needs --config"))?;
    if let Some(seed) = cli.seed {
        cfg.set("pipeline.seed", seed.to_string());
    }
    if let Some(t) = a.threads {
        cfg.set("pipeline.threads", t.to_string());
    }
    let pc = PipelineConfig::from_config(&cfg)?;
    let out = pipeline::run_pipeline(&pc)?;
    write_with(cli.output.as_deref(), |w| w.write_all(out.render().as_bytes()))?;
    if let Some(dir) = &a.artifacts {
        write_artifacts(dir, &out.dataset)?;
    }
    Ok(())
}

fn write_artifacts(dir: &Path, d: &pipeline::Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    let path = |name: &str| -> PathBuf { dir.join(name) };
    let mut train = vec![d.train.clone()];
    train.extend(d.train_oxygen.clone());
    let mut test = vec![d.test.series.clone()];
    test.extend(d.test_oxygen.clone());
    write_with(Some(&path("train.csv")), |w| ingest::write_sensor_csv(w, &train))?;
    write_with(Some(&path("test.csv")), |w| ingest::write_sensor_csv(w, &test))?;
    write_with(Some(&path("labels.csv")), |w| synth::write_labeled_csv(w, &d.test))
}

fn plot_data(cli: &Cli, a: &PlotArgs) -> Result<()> {
    let s = pick(&read_readings(&a.input)?, a.sensor.as_deref(), &a.input)?;
    let mut svg: (Vec<f64>, Option<Vec<bool>>) = (s.values().to_vec(), None);
    match a.kind {
        PlotKind::Series => write_with(cli.output.as_deref(), |w| plot::write_series_csv(w, &s))?,
        PlotKind::Decomposition => {
            let dec = stats::decompose(s.values(), a.period)?;
            write_with(cli.output.as_deref(), |w| stats::write_decomposition_csv(w, s.values(), &dec))?;
        }
        PlotKind::Histogram => {
            let rounding = match a.rounding {
                RoundingArg::Integer => Rounding::Integer,
                RoundingArg::OneDecimal => Rounding::OneDecimal,
            };
            let bins = plot::histogram(s.values(), rounding);
            svg = (bins.values().map(|c| *c as f64).collect(), None);
            write_with(cli.output.as_deref(), |w| plot::write_histogram_csv(w, &bins, rounding))?;
        }
        PlotKind::ReportOverlay => {
            let rp = a
                .report
                .as_ref()
                .ok_or_else(|| CliError::config("report-overlay needs --report"))?;
            let (rs, report) = detect::read_report_csv(open(rp)?)?;
            let rows = plot::overlay(&s, rs.timestamps(), &report);
            svg.1 = Some(rows.iter().map(|r| r.flag == Some(true)).collect());
            write_with(cli.output.as_deref(), |w| plot::write_overlay_csv(w, &rows))?;
        }
    }
    if let Some(p) = &a.svg {
        write_with(Some(p), |w| plot::write_svg(w, &svg.0, svg.1.as_deref()))?;
    }
    Ok(())
}
