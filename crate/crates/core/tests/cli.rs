//! End-to-end tests of the `lppl-zipf` binary: exit codes, file formats and
//! agreement with the library-level pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lppl_zipf::fit::{fit_window, FitConfig, FitWindow, ModelKind};
use lppl_zipf::market::{build_factor_series, index_price, write_factor_csv};
use lppl_zipf::synth::{generate_panel, generate_series, PanelSpec, SynthSpec, ZetaModel};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lppl-zipf")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn lppl-zipf")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(bin()).args(args).env(key, value).output().expect("spawn lppl-zipf")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn panel_spec(seed: u64) -> PanelSpec {
    PanelSpec {
        n_firms: 12,
        t0: 0,
        t2: 80,
        tail_exponent: 1.2,
        daily_vol: 0.02,
        size_drift: 0.004,
        seed,
        events: vec![],
    }
}

fn write_panel(dir: &Path, seed: u64) -> PathBuf {
    let panel = generate_panel(&panel_spec(seed)).unwrap();
    let path = dir.join("panel.csv");
    lppl_zipf::market::write_panel_csv(&panel, &path).unwrap();
    path
}

fn fit_factor_csv(dir: &Path, gamma: f64, noise: f64, seed: u64) -> PathBuf {
    let spec = SynthSpec {
        tc: 150.0,
        m: 0.6,
        omega: 9.0,
        phi: 1.2,
        gamma,
        a: 7.0,
        b: -0.8,
        c: 0.04,
        t1: 1,
        t2: 120,
        noise_sigma: noise,
        zeta: ZetaModel::LinearDrift { rate: 0.002 },
        seed,
    };
    let series = generate_series(&spec).unwrap();
    let path = dir.join("factor.csv");
    write_factor_csv(&series, &path).unwrap();
    path
}

#[test]
fn zipf_output_matches_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let panel_path = write_panel(dir.path(), 42);
    let out = dir.path().join("out");
    let output = run(&[
        "zipf",
        "--panel",
        panel_path.to_str().unwrap(),
        "--t1",
        "5",
        "--t2",
        "70",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    // same code path as the library: zeta columns agree bit for bit
    let panel = generate_panel(&panel_spec(42)).unwrap();
    let base = panel.total_cap(4).unwrap();
    let index = index_price(&panel, base, 100.0).unwrap();
    let series = build_factor_series(&panel, &index, 5, 70).unwrap();

    let text = read(&out.join("factor.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,date,ln_p,ln_pe,zeta");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "4");
    assert_eq!(first[4], "0");
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0].parse::<i64>().unwrap(), 5 + k as i64);
        let zeta: f64 = cells[4].parse().unwrap();
        assert_eq!(zeta, series.zeta()[k], "zeta row {k}");
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn zipf_symmetric_panel_gives_zero_zeta_column() {
    let dir = tempfile::tempdir().unwrap();
    // two firms with identical capitalization paths
    let mut csv = String::from("date,firm,cap,status\n");
    for i in 0..40i64 {
        let date = lppl_zipf::synth::synthetic_date(i);
        let cap = 100.0 * (0.01 * i as f64).exp();
        csv.push_str(&format!("{date},a,{cap},A\n"));
        csv.push_str(&format!("{date},b,{cap},A\n"));
    }
    let panel_path = dir.path().join("panel.csv");
    std::fs::write(&panel_path, csv).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "zipf",
        "--panel",
        panel_path.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "39",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for line in read(&out.join("factor.csv")).lines().skip(1) {
        let zeta: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(zeta.abs() < 1e-12, "zeta = {zeta}");
    }
}

#[test]
fn malformed_panel_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let panel_path = dir.path().join("bad.csv");
    std::fs::write(
        &panel_path,
        "date,firm,cap,status\n2015-01-05,a,100,A\n2015-01-06,a,notanumber,A\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "zipf",
        "--panel",
        panel_path.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn fit_recovers_synthetic_truth_and_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 55);
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "n_starts = 14\nlocal_moves = 8\nseed = 12\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "120",
        "--model",
        "both",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let ens: serde_json::Value =
        serde_json::from_str(&read(&out.join("ensemble_zipf.json"))).unwrap();
    let best = &ens["fits"][0];
    assert!((best["tc"].as_f64().unwrap() - 150.0).abs() < 0.5);
    assert!((best["m"].as_f64().unwrap() - 0.6).abs() < 0.01);
    assert!((best["gamma"].as_f64().unwrap() - 0.4).abs() < 0.05);

    // plot data: keep_best curves per model, sampled at every window day
    let plot = read(&out.join("plot.csv"));
    let mut lines = plot.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let n_jls = header.iter().filter(|h| h.starts_with("jls_fit_")).count();
    let n_zipf = header.iter().filter(|h| h.starts_with("zipf_fit_")).count();
    let jls_kept = serde_json::from_str::<serde_json::Value>(&read(&out.join("ensemble_jls.json")))
        .unwrap()["fits"]
        .as_array()
        .unwrap()
        .len();
    assert_eq!(n_jls, jls_kept);
    assert_eq!(n_zipf, ens["fits"].as_array().unwrap().len());
    assert_eq!(lines.count(), 120, "one row per window day");

    for name in ["wilks_single.json", "wilks_pooled.json"] {
        let report: serde_json::Value = serde_json::from_str(&read(&out.join(name))).unwrap();
        assert!(report["W"].is_number());
        assert_eq!(report["dof"], 1);
    }
}

#[test]
fn fit_on_strong_factor_signal_rejects_null() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 33);
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "n_starts = 20\nlocal_moves = 10\nseed = 6\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "120",
        "--model",
        "both",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let single: serde_json::Value =
        serde_json::from_str(&read(&out.join("wilks_single.json"))).unwrap();
    assert_eq!(single["reject_at_5pct"], true);
}

#[test]
fn fit_refuses_short_window() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 4);
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "50",
        "--t2",
        "70",
        "--model",
        "zipf",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("below the minimum"));
}

#[test]
fn fit_zero_zeta_in_zipf_mode_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.0, 1e-3, 9);
    // rewrite with a zero zeta column: ln_pe = ln_p
    let text = read(&factor);
    let mut out_text = String::from("t,date,ln_p,ln_pe,zeta\n");
    for line in text.lines().skip(1) {
        let c: Vec<&str> = line.split(',').collect();
        out_text.push_str(&format!("{},{},{},{},0\n", c[0], c[1], c[2], c[2]));
    }
    std::fs::write(&factor, out_text).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "120",
        "--model",
        "zipf",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn strict_escalates_statistical_warnings() {
    let dir = tempfile::tempdir().unwrap();
    // noiseless gamma = 0 series: both models fit exactly, an exact-fit corner
    let factor = fit_factor_csv(dir.path(), 0.0, 0.0, 5);
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "n_starts = 12\nlocal_moves = 8\nseed = 3\n").unwrap();
    let base_args = |out: &Path| {
        vec![
            "fit".to_string(),
            "--factor".into(),
            factor.to_str().unwrap().into(),
            "--t1".into(),
            "1".into(),
            "--t2".into(),
            "120".into(),
            "--model".into(),
            "both".into(),
            "--config".into(),
            config.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let out1 = dir.path().join("relaxed");
    let args: Vec<String> = base_args(&out1);
    let output = Command::new(bin()).args(&args).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stderr).contains("warning"));

    let out2 = dir.path().join("strict");
    let mut args: Vec<String> = base_args(&out2);
    args.push("--strict".into());
    let output = Command::new(bin()).args(&args).output().unwrap();
    assert_eq!(output.status.code(), Some(4), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn scan_grid_counts_match_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 55);
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "n_starts = 32\nlocal_moves = 10\nseed = 4\nkeep_best = 5\n")
        .unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "scan",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "110",
        "--n-t1",
        "2",
        "--n-t2",
        "2",
        "--step",
        "3",
        "--config",
        config.to_str().unwrap(),
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let rows: Vec<Vec<String>> = read(&out.join("scan_fits.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let windows: std::collections::BTreeSet<(String, String)> =
        rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(windows.len(), 4);
    // windows x keep_best rows per model
    let per_model = |kind: &str| rows.iter().filter(|r| r[2] == kind).count();
    assert_eq!(per_model("jls"), 20);
    assert_eq!(per_model("zipf"), 20);
    // every row carries a calendar date for the predicted critical time
    assert!(rows.iter().all(|r| r[5].len() == 10 && r[5].contains('-')));
}

#[test]
fn synth_is_reproducible_and_validates_specs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "kind": "series",
        "tc": 150.0, "m": 0.6, "omega": 9.0, "phi": 1.2, "gamma": 0.4,
        "A": 7.0, "B": -0.8, "C": 0.04,
        "t1": 1, "t2": 120, "noise_sigma": 0.001,
        "zeta": {"model": "linear-drift", "rate": 0.002},
        "seed": 77
    });
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();

    let outs: Vec<PathBuf> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("out{k}"));
            let output =
                run(&["synth", "--spec", spec_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
            out
        })
        .collect();
    assert_eq!(
        std::fs::read(outs[0].join("factor.csv")).unwrap(),
        std::fs::read(outs[1].join("factor.csv")).unwrap(),
        "same seed must give identical bytes"
    );

    // invalid spec: window end beyond the critical time
    let bad = serde_json::json!({
        "kind": "series",
        "tc": 100.0, "m": 0.6, "omega": 9.0, "phi": 1.2, "gamma": 0.4,
        "A": 7.0, "B": -0.8, "C": 0.04,
        "t1": 1, "t2": 120, "noise_sigma": 0.001,
        "zeta": {"model": "zero"},
        "seed": 77
    });
    std::fs::write(&spec_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = dir.path().join("bad");
    let output = run(&["synth", "--spec", spec_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn synthetic_factor_round_trips_through_fit() {
    // synth -> fit, asserting the file-based path agrees with the library path
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 55);
    let cfg = FitConfig { n_starts: 14, local_moves: 8, seed: 12, ..FitConfig::default() };
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "n_starts = 14\nlocal_moves = 8\nseed = 12\n").unwrap();

    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--factor",
        factor.to_str().unwrap(),
        "--t1",
        "1",
        "--t2",
        "120",
        "--model",
        "zipf",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let spec = SynthSpec {
        tc: 150.0,
        m: 0.6,
        omega: 9.0,
        phi: 1.2,
        gamma: 0.4,
        a: 7.0,
        b: -0.8,
        c: 0.04,
        t1: 1,
        t2: 120,
        noise_sigma: 1e-3,
        zeta: ZetaModel::LinearDrift { rate: 0.002 },
        seed: 55,
    };
    let series = generate_series(&spec).unwrap();
    let window = FitWindow::new(&series, 1, 120, cfg.min_window).unwrap();
    let direct = fit_window(&window, &cfg, ModelKind::Zipf).unwrap();

    let ens: serde_json::Value =
        serde_json::from_str(&read(&out.join("ensemble_zipf.json"))).unwrap();
    assert_eq!(ens["fits"].as_array().unwrap().len(), direct.results.len());
    let best = &ens["fits"][0];
    // the factor CSV stores shortest-round-trip floats, so the file path sees
    // the same inputs; codegen differences between the two binaries leave at
    // most rounding-level slack
    let tc = best["tc"].as_f64().unwrap();
    assert!((tc - direct.best().nl.tc).abs() <= 1e-9 * direct.best().nl.tc, "tc {tc}");
    let rss = best["rss"].as_f64().unwrap();
    assert!((rss - direct.best().rss).abs() <= 1e-6 * direct.best().rss, "rss {rss}");
}

#[test]
fn env_var_supplies_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let factor = fit_factor_csv(dir.path(), 0.4, 1e-3, 60);
    let config = dir.path().join("env_cfg.toml");
    std::fs::write(&config, "n_starts = 12\nlocal_moves = 8\nseed = 2\nkeep_best = 2\n").unwrap();
    let out = dir.path().join("out");
    let output = run_env(
        &[
            "fit",
            "--factor",
            factor.to_str().unwrap(),
            "--t1",
            "1",
            "--t2",
            "120",
            "--model",
            "zipf",
            "--out",
            out.to_str().unwrap(),
        ],
        "LPPL_ZIPF_CONFIG",
        config.to_str().unwrap(),
    );
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let ens: serde_json::Value =
        serde_json::from_str(&read(&out.join("ensemble_zipf.json"))).unwrap();
    assert_eq!(ens["fits"].as_array().unwrap().len(), 2, "keep_best from the env config");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["keep_best"], 2);
    assert_eq!(manifest["seed"], 2);
}
