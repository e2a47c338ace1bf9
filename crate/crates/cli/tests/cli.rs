use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sensor-anomaly"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn clean_matches_golden_output() {
    let o = run(&["clean", "--input", p(&fixture("raw.csv"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let golden = fs::read_to_string(fixture("raw.clean.csv")).unwrap();
    assert_eq!(stdout(&o), golden);
    let err = stderr(&o);
    for line in ["removed_nan=1", "removed_negative=1", "removed_magnitude=1", "condensed_pairs=2"] {
        assert!(err.contains(line), "{err}");
    }
}

#[test]
fn clean_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let o = run(&["clean", "--input", p(&fixture("raw.csv")), "--report", p(&report)]);
    assert!(o.status.success());
    assert!(fs::read_to_string(report).unwrap().contains("condensed_pairs=2"));
}

#[test]
fn missing_input_exits_2() {
    let o = run(&["clean", "--input", "/nonexistent/readings.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_row_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "timestamp,sensor_id,value\n2016-10-18 00:01:00,NH4_T3,abc\n").unwrap();
    let o = run(&["clean", "--input", p(&input)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_1() {
    let o = run(&[
        "--output",
        "/nonexistent/dir/out.csv",
        "clean",
        "--input",
        p(&fixture("raw.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unknown_algo_exits_3() {
    let o = run(&["detect", "--input", p(&fixture("raw.csv")), "--algo", "isolation-forest"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn filter_flags_on_other_detector_exit_3() {
    let o = run(&["detect", "--input", p(&fixture("raw.clean.csv")), "--algo", "gaussian", "--window", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn ldcof_without_oxygen_exits_3() {
    let o = run(&["detect", "--input", p(&fixture("raw.clean.csv")), "--algo", "ldcof"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn help_exits_0() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pipeline"));
}

#[test]
fn lowhigh_offline_header_echoes_defaults() {
    let o = run(&["detect", "--input", p(&fixture("nh4.csv")), "--algo", "lowhigh-offline"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# detector=lowhigh-offline window=5 alpha=1 mode=offline"));
    assert_eq!(lines.next(), Some("timestamp,value,score,flag,detector"));
    let flagged: Vec<&str> = lines.filter(|l| l.ends_with(",1,lowhigh-offline")).collect();
    assert_eq!(flagged.len(), 1);
    assert!(flagged[0].starts_with("2016-05-02 00:06:00,9,"), "{flagged:?}");
}

#[test]
fn pipeline_without_seed_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.ini");
    fs::write(&cfg, "[data]\nlength = 2880\n").unwrap();
    let o = run(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("pipeline.seed"), "{}", stderr(&o));
}

#[test]
fn invalid_config_value_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.ini");
    fs::write(&cfg, "[pipeline]\nseed = 1\n[lowhigh]\noffline_alpha = 3\n").unwrap();
    let o = run(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .to_string()
}

#[test]
fn pipeline_rows_match_stepwise_detect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.ini");
    fs::write(&cfg, "[pipeline]\nseed = 11\ndetectors = baseline,lowhigh-offline,gaussian,sesd,ldcof\n").unwrap();
    let art = dir.path().join("art");
    let o = run(&["pipeline", "--config", p(&cfg), "--artifacts", p(&art)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let ldcof_header = out.lines().find(|l| l.starts_with("# ldcof ")).unwrap();
    let cluster_seed = field(ldcof_header, "seed");

    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let metrics = dir.path().join(format!("{}.txt", cols[0]));
        let report = dir.path().join(format!("{}.csv", cols[0]));
        let o = run(&[
            "--seed",
            &cluster_seed,
            "--output",
            p(&report),
            "detect",
            "--input",
            p(&art.join("test.csv")),
            "--train",
            p(&art.join("train.csv")),
            "--sensor",
            "NH4",
            "--oxygen",
            "O2",
            "--algo",
            cols[0],
            "--labels",
            p(&art.join("labels.csv")),
            "--metrics",
            p(&metrics),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = fs::read_to_string(&metrics).unwrap();
        let got: Vec<String> = text.lines().map(|l| l.split_once('=').unwrap().1.to_string()).collect();
        assert_eq!(got, cols.iter().map(|c| c.to_string()).collect::<Vec<_>>(), "{}", cols[0]);

        let first = fs::read_to_string(&report).unwrap().lines().next().unwrap().to_string();
        let from_pipeline = out.lines().find(|l| l.starts_with(&format!("# {} ", cols[0])) || *l == format!("# {}", cols[0])).unwrap();
        assert_eq!(first.replacen(&format!("# detector={}", cols[0]), "", 1), from_pipeline.replacen(&format!("# {}", cols[0]), "", 1));
    }
}

#[test]
fn ldcof_header_echoes_defaults_and_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.ini");
    fs::write(&cfg, "[pipeline]\nseed = 3\ndetectors = baseline\n").unwrap();
    let art = dir.path().join("art");
    assert!(run(&["pipeline", "--config", p(&cfg), "--artifacts", p(&art)]).status.success());

    let model = dir.path().join("model.txt");
    let (test, train) = (art.join("test.csv"), art.join("train.csv"));
    let common = [
        "detect",
        "--input",
        p(&test),
        "--train",
        p(&train),
        "--sensor",
        "NH4",
        "--oxygen",
        "O2",
        "--algo",
        "ldcof",
    ];
    let mut first_args = vec!["--seed", "9"];
    first_args.extend(common);
    first_args.extend(["--save-model", p(&model)]);
    let first = run(&first_args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let header = stdout(&first).lines().next().unwrap().to_string();
    assert!(
        header.starts_with("# detector=ldcof k=12 alpha=0.75 beta=0.25 threshold=auto max_iter=100 seed=9 "),
        "{header}"
    );

    let mut second_args = common.to_vec();
    second_args.extend(["--model", p(&model)]);
    let second = run(&second_args);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn inject_is_seeded() {
    let a = run(&["--seed", "5", "inject", "--length", "2880"]);
    let b = run(&["--seed", "5", "inject", "--length", "2880"]);
    let c = run(&["--seed", "6", "inject", "--length", "2880"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let out = stdout(&a);
    let header = out.lines().next().unwrap();
    assert_eq!(field(header, "positives"), "29");
    let flagged = out.lines().skip(2).filter(|l| l.ends_with(",1")).count();
    assert_eq!(flagged, 29);
}

#[test]
fn evaluate_faults_and_metrics_from_report() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    let inject = run(&["--seed", "2", "--output", p(&labels), "inject", "--length", "2880"]);
    assert!(inject.status.success());
    let series = dir.path().join("series.csv");
    let text = fs::read_to_string(&labels).unwrap();
    let mut csv = String::from("timestamp,sensor_id,value\n");
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        csv.push_str(&format!("{},NH4,{}\n", cols[0], cols[1]));
    }
    fs::write(&series, csv).unwrap();
    let report = dir.path().join("report.csv");
    let d = run(&["--output", p(&report), "detect", "--input", p(&series), "--algo", "baseline"]);
    assert!(d.status.success(), "{}", stderr(&d));

    let m = run(&["evaluate", "--report", p(&report), "--labels", p(&labels)]);
    assert_eq!(m.status.code(), Some(0), "{}", stderr(&m));
    assert!(stdout(&m).starts_with("detector=baseline\ntp="));

    let f = run(&["evaluate", "--report", p(&report), "--kind", "faults", "--fault-interval", "60", "--fault-min", "5"]);
    assert_eq!(f.status.code(), Some(0), "{}", stderr(&f));
    let out = stdout(&f);
    assert_eq!(out.lines().next(), Some("# fault interval_minutes=60 min_events=5"));
    assert_eq!(out.lines().nth(1), Some("start,end,count"));
}

#[test]
fn evaluate_with_wrong_labels_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    assert!(run(&["--output", p(&report), "detect", "--input", p(&fixture("raw.clean.csv")), "--algo", "baseline"])
        .status
        .success());
    let labels = dir.path().join("labels.csv");
    fs::write(&labels, "timestamp,value,label\n2016-10-30 01:58:00,3.2,0\n").unwrap();
    let o = run(&["evaluate", "--report", p(&report), "--labels", p(&labels)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn plot_data_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("h.svg");
    let o = run(&["plot-data", "--kind", "histogram", "--input", p(&fixture("raw.clean.csv")), "--svg", p(&svg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "# rounding=integer\nbin,count\n3,1\n4,1\n5,1\n7,1\n");
    assert!(fs::read_to_string(svg).unwrap().contains("<svg"));
}

#[test]
fn correlate_prints_all_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.csv");
    let mut csv = String::from("timestamp,sensor_id,value\n");
    for i in 0..10 {
        csv.push_str(&format!("2016-05-02 00:{i:02}:00,A,{i}\n2016-05-02 00:{i:02}:00,B,{}\n", i * i));
    }
    fs::write(&input, csv).unwrap();
    let o = run(&["correlate", "--input", p(&input), "--x", "A", "--y", "B"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("n=10"));
    assert!(out.contains("spearman=1\n"), "{out}");
    assert!(out.contains("kendall=1\n"), "{out}");
}

#[test]
fn plot_data_overlay_is_left_join() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    // report covers only the last 8 of the 12 readings
    let mut short = String::from("timestamp,sensor_id,value\n");
    for line in fs::read_to_string(fixture("nh4.csv")).unwrap().lines().skip(5) {
        short.push_str(line);
        short.push('\n');
    }
    let short_path = dir.path().join("short.csv");
    fs::write(&short_path, short).unwrap();
    assert!(run(&["--output", p(&report), "detect", "--input", p(&short_path), "--algo", "baseline"])
        .status
        .success());
    let o = run(&["plot-data", "--kind", "report-overlay", "--input", p(&fixture("nh4.csv")), "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let report_text = fs::read_to_string(&report).unwrap();
    let by_time: std::collections::HashMap<&str, (&str, &str)> = report_text
        .lines()
        .skip(2)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0], (c[2], c[3]))
        })
        .collect();
    let series = fs::read_to_string(fixture("nh4.csv")).unwrap();
    let want: Vec<String> = series
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            let (score, flag) = by_time.get(c[0]).copied().unwrap_or(("", ""));
            format!("{},{},{score},{flag}", c[0], c[2].parse::<f64>().unwrap())
        })
        .collect();
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("timestamp,value,score,flag"));
    assert_eq!(lines.map(str::to_string).collect::<Vec<_>>(), want);
}

#[test]
fn plot_data_decomposition_schema() {
    let o = run(&["plot-data", "--kind", "decomposition", "--input", p(&fixture("nh4.csv")), "--period", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("index,value,trend,seasonal,residual"));
    assert_eq!(out.lines().count(), 13);
    // first period / 2 rows have no trend
    assert!(out.lines().nth(1).unwrap().starts_with("0,3,,"));
}

#[test]
fn plot_data_missing_input_exits_2() {
    let o = run(&["plot-data", "--kind", "series", "--input", "/nonexistent.csv"]);
    assert_eq!(o.status.code(), Some(2));
}
