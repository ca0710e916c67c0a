use std::f64::consts::LN_2;

use fourier_width::harness::{
    run_experiment, run_sweep, Deviation, ExperimentConfig, FamilySpec, HarnessError, NRange,
    OutputFormat, OutputSpec, PredictionReport, Threads, CSV_COLUMNS,
};
use fourier_width::validation::oracle::grid_oracle;
use fourier_width::{FormulaId, KernelSpec, PsiSequence};

fn config(
    family: FamilySpec,
    betas: Vec<f64>,
    start: u64,
    stop: u64,
    formulas: Vec<FormulaId>,
) -> ExperimentConfig {
    ExperimentConfig {
        family,
        beta_list: betas,
        n_range: NRange {
            start,
            stop,
            step: None,
            factor: None,
        },
        tol: 1e-10,
        formulas,
        output: OutputSpec {
            path: "report.csv".into(),
            format: OutputFormat::Csv,
        },
        threads: Threads::Auto,
    }
}

fn poisson_sweep() -> ExperimentConfig {
    config(
        FamilySpec::gen_poisson(LN_2, 1.0),
        vec![0.0],
        4,
        12,
        vec![FormulaId::T1, FormulaId::C2],
    )
}

fn csv_of(r: &PredictionReport) -> String {
    let mut out = Vec::new();
    r.write_csv(&mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn poisson_sweep_rows() {
    let report = run_experiment(&poisson_sweep()).unwrap();
    assert_eq!(report.rows.len(), 9);
    for (row, n) in report.rows.iter().zip(4..) {
        assert_eq!(row.n, n);
        assert!(row.error.is_none());
        assert_eq!(row.sandwich_holds, Some(true));
        assert_eq!(row.predictions.len(), 2);
        for p in &row.predictions {
            match p.dev {
                Some(Deviation::Normalized(d)) => assert!(d.is_finite() && d < 10.0, "n={n} {d}"),
                ref other => panic!("{other:?}"),
            }
        }
    }
    let row5 = &report.rows[1];
    let spec =
        KernelSpec::new(PsiSequence::generalized_poisson(LN_2, 1.0).unwrap(), 0.0, 5).unwrap();
    let o = grid_oracle(&spec, 1_000_000, 1e-12).unwrap();
    let e = row5.estimate.unwrap().e_n;
    let ov = o.e_n.rescaled(e.log_scale);
    assert!((ov.value - e.value).abs() <= ov.radius + e.radius);
}

#[test]
fn rows_sorted_by_beta_then_n() {
    let cfg = config(
        FamilySpec::gen_poisson(LN_2, 1.0),
        vec![1.0, 0.0, 1.0],
        3,
        5,
        vec![],
    );
    let report = run_experiment(&cfg).unwrap();
    let keys: Vec<(f64, u64)> = report.rows.iter().map(|r| (r.beta, r.n)).collect();
    assert_eq!(
        keys,
        vec![(0.0, 3), (0.0, 4), (0.0, 5), (1.0, 3), (1.0, 4), (1.0, 5)]
    );
}

#[test]
fn json_round_trip() {
    let mut cfg = poisson_sweep();
    cfg.n_range.stop = 6;
    let report = run_experiment(&cfg).unwrap();
    let back = PredictionReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn csv_header_and_determinism() {
    let mut one = poisson_sweep();
    one.threads = Threads::Count(1);
    let a = csv_of(&run_experiment(&one).unwrap());
    let b = csv_of(&run_experiment(&poisson_sweep()).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(a.lines().count(), 1 + 9 * 2);
}

#[test]
fn underflowing_rows_keep_logs() {
    let cfg = config(
        FamilySpec::gen_poisson(1.0, 2.0),
        vec![0.0],
        30,
        30,
        vec![FormulaId::T1, FormulaId::C01],
    );
    let report = run_experiment(&cfg).unwrap();
    let csv = csv_of(&report);
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let headers = rd.headers().unwrap().clone();
    let col = |rec: &csv::StringRecord, name: &str| {
        rec[headers.iter().position(|h| h == name).unwrap()].to_string()
    };
    let recs: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 2);
    for rec in &recs {
        assert_eq!(col(rec, "e_n"), "");
        assert_eq!(col(rec, "main_term"), "");
        let log_e: f64 = col(rec, "log_e_n").parse().unwrap();
        let log_main: f64 = col(rec, "log_main").parse().unwrap();
        assert!(log_e < -800.0 && log_main < -800.0);
        let dev: f64 = col(rec, "dev").parse().unwrap();
        assert!(dev.is_finite());
    }
}

#[test]
fn row_errors_stay_in_row() {
    let mut cfg = poisson_sweep();
    cfg.tol = 1e-40;
    cfg.n_range.stop = 5;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report
        .rows
        .iter()
        .all(|r| r.error.is_some() && r.estimate.is_none()));
    assert!(csv_of(&report).contains("unreachable"));
}

#[test]
fn sweep_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = poisson_sweep();
    cfg.n_range.stop = 5;
    cfg.output = OutputSpec {
        path: dir.path().join("r.json"),
        format: OutputFormat::Json,
    };
    let report = run_sweep(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert_eq!(PredictionReport::from_json(&text).unwrap(), report);
    cfg.output = OutputSpec {
        path: dir.path().join("r.csv"),
        format: OutputFormat::Csv,
    };
    run_sweep(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text, csv_of(&report));
}

#[test]
fn config_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = ExperimentConfig::from_path(&dir.path().join("nope.json"));
    assert!(matches!(missing, Err(HarnessError::Io { .. })));
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"family": {"name": "loglog_power"}, "beta_list": [0], "n_range": {"start": 4, "stop": 5},
            "tol": 1e-3, "formulas": ["c2"], "output": {"path": "x.csv", "format": "csv"}}"#,
    )
    .unwrap();
    let err = ExperimentConfig::from_path(&path).unwrap_err();
    assert!(err.to_string().contains("formulas"), "{err}");
    std::fs::write(
        &path,
        r#"{"family": {"name": "gen_poisson", "q": 0.5}, "beta_list": [], "n_range": {"start": 4, "stop": 5},
            "tol": 1e-3, "output": {"path": "x.csv", "format": "csv"}}"#,
    )
    .unwrap();
    assert!(ExperimentConfig::from_path(&path)
        .unwrap_err()
        .to_string()
        .contains("beta_list"));
}
