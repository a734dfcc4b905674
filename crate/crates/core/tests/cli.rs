use std::process::{Command, Output};

fn kennedy_tes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kennedy-tes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bounds_prints_csv_with_header() {
    let out = kennedy_tes(&["bounds", "--alpha-sq-grid", "0,1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha_sq,p_sql,p_helstrom");
    assert_eq!(lines.len(), 3);
    let row: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 0.5, 0.5]);
    let row: Vec<f64> = lines[2].split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row[1] - 0.5 * libm::erfc(3f64.sqrt())).abs() < 1e-12 * row[1]);
}

#[test]
fn missing_or_malformed_arguments_are_usage_errors() {
    assert_eq!(kennedy_tes(&[]).status.code(), Some(1));
    assert_eq!(kennedy_tes(&["sweep-alpha", "--grid", "1"]).status.code(), Some(1));
    assert_eq!(
        kennedy_tes(&["sweep-alpha", "--grid", "x", "--seed", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        kennedy_tes(&["sweep-alpha", "--grid", "1", "--seed", "1", "--mode", "homodyne"]).status.code(),
        Some(1)
    );
    assert_eq!(kennedy_tes(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_of_range_parameters_are_rejected() {
    let out = kennedy_tes(&["bounds", "--alpha-sq-grid", "-1"]);
    assert_ne!(out.status.code(), Some(0));
    let out = kennedy_tes(&[
        "sweep-alpha", "--grid", "1", "--seed", "1", "--trials", "10", "--visibility", "1.2",
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
}

#[test]
fn trace_flags_require_trace_mode() {
    let out = kennedy_tes(&[
        "sweep-alpha", "--grid", "1", "--seed", "1", "--trials", "10", "--noise-rms", "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let out = kennedy_tes(&[
        "sweep-alpha", "--grid", "1", "--seed", "1", "--trials", "100",
        "--out", "/nonexistent-dir/results.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_alpha_writes_one_row_per_point() {
    let out = kennedy_tes(&[
        "sweep-alpha", "--grid", "0,1,2", "--optimize", "--seed", "4", "--trials", "20000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "alpha_sq,alpha_sq_rescaled,beta_sq,p_err,p_err_stderr,p_sql,p_helstrom,improvement_db,trials,seed"
    );
    assert_eq!(lines.len(), 4);
    let seeds: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(seeds, vec!["4", "5", "6"]);
}

#[test]
fn json_format_follows_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = kennedy_tes(&[
        "sweep-beta", "--alpha-sq", "1.5", "--grid", "0.5,1", "--seed", "2", "--trials", "5000",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = value.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["trials"], 5000);
}

#[test]
fn simulate_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("point.csv");
    let hist = dir.path().join("hist.csv");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "mode = \"trace\"\nalpha_sq = 1.5\nbeta_sq = 1.51\nvisibility = 0.998\n\
             trials = 20000\nseed = 3\nsaturation = false\nout = {:?}\nhistogram_out = {:?}\n",
            results.to_str().unwrap(),
            hist.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = kennedy_tes(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(std::fs::read_to_string(&hist).unwrap().starts_with("bin_center,count_plus,count_minus"));
}

#[test]
fn simulate_rejects_unknown_keys_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "alpha_sq = 1.0\nseed = 1\ncolour = \"red\"\n").unwrap();
    assert_eq!(
        kennedy_tes(&["simulate", "--config", config.to_str().unwrap()]).status.code(),
        Some(1)
    );
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        kennedy_tes(&["simulate", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_rejects_trace_keys_in_ideal_mode() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mixed.toml");
    std::fs::write(&config, "mode = \"ideal\"\nalpha_sq = 1.0\nseed = 1\nnoise_rms = 4.0\n").unwrap();
    assert_eq!(
        kennedy_tes(&["simulate", "--config", config.to_str().unwrap()]).status.code(),
        Some(1)
    );
}
