use std::f64::consts::PI;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fourier-width"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exact_poisson() {
    let out = cli(&[
        "exact",
        "--family",
        "gen_poisson",
        "--alpha",
        "0.6931471805599453",
        "--r",
        "1",
        "--beta",
        "0",
        "--n",
        "5",
        "--tol",
        "1e-10",
    ]);
    let v = stdout_json(&out);
    let e = &v["e_n"];
    let value = e["value"].as_f64().unwrap() * e["log_scale"].as_f64().unwrap().exp();
    let radius = e["radius"].as_f64().unwrap() * e["log_scale"].as_f64().unwrap().exp();
    assert!((value - 0.017926910997437604).abs() <= radius, "{value}");
    assert!(v["lower_sandwich"].is_object() && v["witness_t0"].is_number());
}

#[test]
fn predict_c2() {
    let v = stdout_json(&cli(&[
        "predict",
        "--formula",
        "c2",
        "--alpha",
        "0.6931471805599453",
        "--n",
        "3",
    ]));
    assert!((v["main_term"].as_f64().unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
    assert_eq!(v["formula_id"], "c2");
}

#[test]
fn eval_kernel_single_harmonic() {
    let out = cli(&[
        "eval-kernel",
        "--family",
        "custom",
        "--harmonic",
        "4",
        "--n",
        "4",
        "--t",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.split('±').next().unwrap().trim().parse().unwrap();
    assert_eq!(value, 1.0);
}

#[test]
fn custom_table_flag() {
    let v = stdout_json(&cli(&[
        "exact",
        "--family",
        "custom",
        "--table",
        "2:1,3:0.5",
        "--n",
        "3",
    ]));
    let e = &v["e_n"];
    let value = e["value"].as_f64().unwrap() * e["log_scale"].as_f64().unwrap().exp();
    assert!((value - 0.5 / PI).abs() < 1e-10, "{value}");
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&[]).status.code(), Some(2));
    assert_eq!(cli(&["exact", "--n", "five"]).status.code(), Some(2));
    assert_eq!(
        cli(&["predict", "--formula", "zz", "--alpha", "1", "--n", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&[
            "predict",
            "--family",
            "loglog_power",
            "--formula",
            "c2",
            "--n",
            "3"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["exact", "--alpha", "-1", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["exact", "--alpha", "1", "--n", "3", "--tol", "1e-40"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cli(&["sweep", "/nonexistent/config.json"]).status.code(),
        Some(1)
    );
    assert_eq!(cli(&["validate", "--only", "99"]).status.code(), Some(2));
}

#[test]
fn sweep_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.csv");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"family": {{"name": "gen_poisson", "alpha": 0.6931471805599453, "r": 1}}, "beta_list": [0],
                "n_range": {{"start": 4, "stop": 12}}, "tol": 1e-10, "formulas": ["t1", "c2"],
                "output": {{"path": {:?}, "format": "csv"}}, "threads": "auto"}}"#,
            out_path
        ),
    )
    .unwrap();
    assert_eq!(
        cli(&["sweep", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 19);

    let out = cli(&["validate", "--only", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("criterion  1 PASS") && text.contains("criterion  2 PASS"));
}
