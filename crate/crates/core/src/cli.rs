//! Command-line front end: ingestion, factor construction, fitting, scanning
//! and synthetic-data generation, orchestrated through one thin binary.
//!
//! Every command writes its outputs plus a `manifest.json` recording the tool
//! version, the command, the master seed, the resolved configuration and the
//! SHA-256 digests of all inputs. Two runs with equal manifests produce
//! byte-identical outputs, regardless of `--jobs`.
//!
//! Exit codes: 0 ok, 2 input error, 3 numerical failure, 4 statistical
//! warning escalated by `--strict`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{fit_window, FitConfig, FitEnsemble, FitWindow, ModelKind, CONFIG_ENV};
use crate::market::{
    build_factor_series, index_price, load_panel, read_factor_csv, read_index_csv,
    write_factor_csv, write_panel_csv, FactorSeries, PanelFormat,
};
use crate::stats::{pooled_wilks, scan_windows, wilks_statistic, ScanResult, WilksReport};
use crate::synth::{generate_panel, generate_series, PanelSpec, SynthSpec};

#[derive(Debug, Parser)]
#[command(
    name = "lppl-zipf",
    version,
    about = "Bubble-model calibration with a Zipf diversification-risk factor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the integrated Zipf factor series from a constituent panel.
    Zipf(ZipfArgs),
    /// Calibrate the nested models on one window of a factor series.
    Fit(FitArgs),
    /// Fit a grid of windows and aggregate critical-time forecasts.
    Scan(ScanArgs),
    /// Generate synthetic data from a spec file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct CommonFitOpts {
    /// TOML config file (defaults to $LPPL_ZIPF_CONFIG, then built-ins).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Fits retained per window, overriding the config value.
    #[arg(long)]
    keep_best: Option<usize>,
    /// Worker threads for window fits (default: one).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Escalate statistical warnings to a nonzero exit code.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ZipfArgs {
    /// Constituent panel CSV (date,firm,cap,status).
    #[arg(long)]
    panel: PathBuf,
    /// First fitted trading day (the factor is normalized at t1 - 1).
    #[arg(long)]
    t1: usize,
    /// Last fitted trading day.
    #[arg(long)]
    t2: usize,
    /// Index price CSV (date,close); computed from the panel when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Base capitalization of the index (default: day t1 - 1 total).
    #[arg(long)]
    base_cap: Option<f64>,
    /// Index base value.
    #[arg(long, default_value_t = 100.0)]
    base_value: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Factor series CSV (t,date,ln_p,ln_pe,zeta).
    #[arg(long)]
    factor: PathBuf,
    #[arg(long)]
    t1: i64,
    #[arg(long)]
    t2: i64,
    /// Model to calibrate: jls, zipf or both.
    #[arg(long, default_value = "both")]
    model: String,
    #[command(flatten)]
    common: CommonFitOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Factor series CSV (t,date,ln_p,ln_pe,zeta).
    #[arg(long)]
    factor: PathBuf,
    /// Base window start; shifted forward in steps.
    #[arg(long)]
    t1: i64,
    /// Base window end; shifted forward in steps.
    #[arg(long)]
    t2: i64,
    /// Number of window start values.
    #[arg(long, default_value_t = 15)]
    n_t1: usize,
    /// Number of window end values.
    #[arg(long, default_value_t = 15)]
    n_t2: usize,
    /// Shift step in trading days.
    #[arg(long, default_value_t = 3)]
    step: i64,
    /// Aggregate only bubble-qualified fits.
    #[arg(long)]
    qualified_only: bool,
    #[command(flatten)]
    common: CommonFitOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON spec: {"kind": "series", ...} or {"kind": "panel", ...}.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: u64,
    config: FitConfig,
    inputs: Vec<InputDigest>,
    params: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let hash = Sha256::digest(&bytes);
    Ok(InputDigest { path: path.display().to_string(), sha256: hex::encode(hash) })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serialization: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

/// Resolve the calibration config: explicit flag, then the environment
/// variable, then defaults; `--seed` and `--keep-best` override fields.
fn resolve_config(common: &CommonFitOpts) -> Result<FitConfig> {
    let mut cfg = match &common.config {
        Some(path) => FitConfig::load(path)?,
        None => match std::env::var_os(CONFIG_ENV) {
            Some(path) => FitConfig::load(Path::new(&path))?,
            None => FitConfig::default(),
        },
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(keep) = common.keep_best {
        cfg.keep_best = keep;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn parse_models(s: &str) -> Result<Vec<ModelKind>> {
    match s {
        "both" => Ok(vec![ModelKind::Jls, ModelKind::Zipf]),
        other => Ok(vec![other.parse()?]),
    }
}

// ---------------------------------------------------------------------------
// zipf
// ---------------------------------------------------------------------------

fn cmd_zipf(args: &ZipfArgs) -> Result<Vec<String>> {
    ensure_out_dir(&args.out)?;
    let panel = load_panel(&args.panel, PanelFormat::Csv)?;
    if args.t1 == 0 {
        return Err(Error::Validation(
            "t1 must be at least 1: the factor is normalized at t1 - 1".into(),
        ));
    }
    let t0 = args.t1 - 1;

    let mut inputs = vec![digest_file(&args.panel)?];
    let index: Vec<f64> = match &args.index {
        Some(index_path) => {
            inputs.push(digest_file(index_path)?);
            let by_date: BTreeMap<_, _> =
                read_index_csv(index_path)?.into_iter().collect();
            panel
                .dates()
                .iter()
                .map(|d| {
                    by_date.get(d).copied().ok_or_else(|| {
                        Error::Validation(format!(
                            "index file {} has no close for panel date {d}",
                            index_path.display()
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?
        }
        None => {
            let base_cap = match args.base_cap {
                Some(k) => k,
                None => panel.total_cap(t0)?,
            };
            index_price(&panel, base_cap, args.base_value)?
        }
    };

    let series = build_factor_series(&panel, &index, args.t1, args.t2)?;
    write_factor_csv(&series, &args.out.join("factor.csv"))?;

    let mut params = BTreeMap::new();
    params.insert("t1".into(), args.t1.to_string());
    params.insert("t2".into(), args.t2.to_string());
    params.insert("base_value".into(), format!("{}", args.base_value));
    if let Some(k) = args.base_cap {
        params.insert("base_cap".into(), format!("{k}"));
    }
    let manifest = RunManifest {
        command: "zipf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: 0,
        config: FitConfig::default(),
        inputs,
        params,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(Vec::new())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct EnsembleFile {
    t1: i64,
    t2: i64,
    model: ModelKind,
    fits: Vec<crate::fit::FitRecord>,
}

fn ensemble_json(ens: &FitEnsemble) -> EnsembleFile {
    EnsembleFile {
        t1: ens.t1,
        t2: ens.t2,
        model: ens.kind,
        fits: ens.results.iter().map(|r| r.record()).collect(),
    }
}

/// Plot-data CSV: observed log-price and zeta plus one expected-log-price
/// curve per retained fit, sampled at every window day.
fn write_plot_csv(
    path: &Path,
    window: &FitWindow,
    ensembles: &[&FitEnsemble],
) -> Result<()> {
    let series = window.series();
    let mut header = String::from("t,date,ln_p,zeta");
    for ens in ensembles {
        for rank in 1..=ens.results.len() {
            header.push_str(&format!(",{}_fit_{rank:02}", ens.kind));
        }
    }
    let mut buf = header;
    buf.push('\n');
    for k in 0..series.len() {
        let t = series.days()[k];
        buf.push_str(&format!(
            "{t},{},{},{}",
            series.dates()[k].format("%Y-%m-%d"),
            series.ln_p()[k],
            series.zeta()[k]
        ));
        for ens in ensembles {
            for fit in &ens.results {
                let expected = series.ln_p()[k] - fit.residuals[k];
                buf.push_str(&format!(",{expected}"));
            }
        }
        buf.push('\n');
    }
    write_text(path, &buf)
}

fn warn_of(report: &WilksReport, label: &str) -> Option<String> {
    report.warning.map(|w| format!("{label}: {w:?}"))
}

fn cmd_fit(args: &FitArgs) -> Result<Vec<String>> {
    ensure_out_dir(&args.out)?;
    let cfg = resolve_config(&args.common)?;
    let models = parse_models(&args.model)?;
    let series = read_factor_csv(&args.factor)?;
    let window = FitWindow::new(&series, args.t1, args.t2, cfg.min_window)?;

    let mut warnings = Vec::new();
    let ensembles: Vec<FitEnsemble> = with_pool(args.common.jobs, || {
        models.iter().map(|&kind| fit_window(&window, &cfg, kind)).collect()
    })?;

    for ens in &ensembles {
        let name = format!("ensemble_{}.json", ens.kind);
        write_json(&args.out.join(name), &ensemble_json(ens))?;
    }

    if let [jls, zipf] = ensembles.as_slice() {
        let (jls, zipf) = if jls.kind == ModelKind::Jls { (jls, zipf) } else { (zipf, jls) };
        let single = wilks_statistic(&jls.best().residuals, &zipf.best().residuals)?;
        if let Some(w) = warn_of(&single, "single-fit Wilks") {
            warnings.push(w);
        }
        write_json(&args.out.join("wilks_single.json"), &single)?;

        let common = jls.results.len().min(zipf.results.len());
        if common < jls.results.len() || common < zipf.results.len() {
            warnings.push(format!(
                "pooled Wilks uses the {common} best fits per model (ensembles kept {} and {})",
                jls.results.len(),
                zipf.results.len()
            ));
        }
        let mut jls_cut = jls.clone();
        jls_cut.results.truncate(common);
        let mut zipf_cut = zipf.clone();
        zipf_cut.results.truncate(common);
        let pooled = pooled_wilks(&jls_cut, &zipf_cut)?;
        if let Some(w) = warn_of(&pooled, "pooled Wilks") {
            warnings.push(w);
        }
        write_json(&args.out.join("wilks_pooled.json"), &pooled)?;
    }

    let ens_refs: Vec<&FitEnsemble> = ensembles.iter().collect();
    write_plot_csv(&args.out.join("plot.csv"), &window, &ens_refs)?;

    let mut params = BTreeMap::new();
    params.insert("t1".into(), args.t1.to_string());
    params.insert("t2".into(), args.t2.to_string());
    params.insert("model".into(), args.model.clone());
    let manifest = RunManifest {
        command: "fit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg,
        inputs: vec![digest_file(&args.factor)?],
        params,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(warnings)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

fn float_cell(v: f64) -> String {
    format!("{v}")
}

/// Per-fit CSV rows of a scan, in canonical (window, model, rank) order.
fn write_scan_fits_csv(path: &Path, scan: &ScanResult, series: &FactorSeries) -> Result<()> {
    let mut buf =
        String::from("t1,t2,model,rank,tc,tc_date,m,omega,phi,gamma,A,B,C,rss,qualified\n");
    for ens in &scan.ensembles {
        for (rank, fit) in ens.results.iter().enumerate() {
            buf.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                ens.t1,
                ens.t2,
                ens.kind,
                rank + 1,
                float_cell(fit.nl.tc),
                series.date_for_day(fit.nl.tc).format("%Y-%m-%d"),
                float_cell(fit.nl.m),
                float_cell(fit.nl.omega),
                float_cell(fit.nl.phi),
                float_cell(fit.lin.gamma),
                float_cell(fit.lin.a),
                float_cell(fit.lin.b),
                float_cell(fit.lin.c),
                float_cell(fit.rss),
                fit.flags.is_bubble(),
            ));
        }
    }
    write_text(path, &buf)
}

fn write_scan_summary_csv(
    path: &Path,
    scan: &ScanResult,
    series: &FactorSeries,
    qualified_only: bool,
) -> Result<()> {
    let mut buf = String::from(
        "model,fits,failures,tc_mean,tc_std,tc_mean_date,gamma_mean,gamma_median,gamma_std\n",
    );
    for kind in [ModelKind::Jls, ModelKind::Zipf] {
        let tcs = scan.tc_values(kind, qualified_only);
        let failures = scan.failures.iter().filter(|f| f.kind == kind).count();
        if tcs.is_empty() {
            buf.push_str(&format!("{kind},0,{failures},,,,,,\n"));
            continue;
        }
        let tc = scan.tc_stats(kind, qualified_only)?;
        let date = series.date_for_day(tc.mean).format("%Y-%m-%d").to_string();
        let gamma = match kind {
            ModelKind::Zipf => {
                let g = scan.gamma_stats(qualified_only)?;
                format!("{},{},{}", float_cell(g.mean), float_cell(g.median), float_cell(g.std))
            }
            ModelKind::Jls => ",,".to_string(),
        };
        buf.push_str(&format!(
            "{kind},{},{failures},{},{},{date},{gamma}\n",
            tcs.len(),
            float_cell(tc.mean),
            float_cell(tc.std),
        ));
    }
    write_text(path, &buf)
}

fn cmd_scan(args: &ScanArgs) -> Result<Vec<String>> {
    ensure_out_dir(&args.out)?;
    let cfg = resolve_config(&args.common)?;
    let series = read_factor_csv(&args.factor)?;

    let scan = with_pool(args.common.jobs, || {
        scan_windows(&series, args.t1, args.t2, args.n_t1, args.n_t2, args.step, &cfg)
    })?;

    let mut warnings = Vec::new();
    if !scan.failures.is_empty() {
        warnings.push(format!("{} window fits failed and were excluded", scan.failures.len()));
    }

    write_scan_fits_csv(&args.out.join("scan_fits.csv"), &scan, &series)?;
    write_scan_summary_csv(&args.out.join("scan_summary.csv"), &scan, &series, args.qualified_only)?;

    let mut params = BTreeMap::new();
    params.insert("t1".into(), args.t1.to_string());
    params.insert("t2".into(), args.t2.to_string());
    params.insert("n_t1".into(), args.n_t1.to_string());
    params.insert("n_t2".into(), args.n_t2.to_string());
    params.insert("step".into(), args.step.to_string());
    params.insert("qualified_only".into(), args.qualified_only.to_string());
    let manifest = RunManifest {
        command: "scan".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg,
        inputs: vec![digest_file(&args.factor)?],
        params,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(warnings)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Debug, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SynthFile {
    Series(SynthSpec),
    Panel(PanelSpec),
}

fn cmd_synth(args: &SynthArgs) -> Result<Vec<String>> {
    ensure_out_dir(&args.out)?;
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Error::Io { path: args.spec.clone(), source: e })?;
    let spec: SynthFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse {
            path: args.spec.display().to_string(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;

    let (seed, kind) = match &spec {
        SynthFile::Series(s) => {
            let series = generate_series(s)?;
            write_factor_csv(&series, &args.out.join("factor.csv"))?;
            (s.seed, "series")
        }
        SynthFile::Panel(p) => {
            let panel = generate_panel(p)?;
            write_panel_csv(&panel, &args.out.join("panel.csv"))?;
            (p.seed, "panel")
        }
    };

    let mut params = BTreeMap::new();
    params.insert("kind".into(), kind.to_string());
    let manifest = RunManifest {
        command: "synth".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config: FitConfig::default(),
        inputs: vec![digest_file(&args.spec)?],
        params,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(Vec::new())
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

/// Parse argv, run the command, report warnings, and map the outcome to the
/// documented exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let (result, strict) = match &cli.command {
        Command::Zipf(a) => (cmd_zipf(a), false),
        Command::Fit(a) => (cmd_fit(a), a.common.strict),
        Command::Scan(a) => (cmd_scan(a), a.common.strict),
        Command::Synth(a) => (cmd_synth(a), false),
    };
    match result {
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            if strict && !warnings.is_empty() {
                eprintln!("error: statistical warnings escalated by --strict");
                4
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
