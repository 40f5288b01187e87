//! The batch run: ingest, estimate per period and per window, write the
//! report bundle.

use std::path::{Path, PathBuf};
use std::time::Instant;

use emission_dynamics::convergence::{bootstrap_se, fit_lad, BootstrapResult, ConvergenceError, ConvergenceFit, LadOptions};
use emission_dynamics::distributions::{fit_mle, AepFit, FitOptions, PARAM_NAMES as AEP_PARAMS};
use emission_dynamics::panel::{build_panel, GrowthPanel, PanelError, PeriodDefinition, RegionYearObservation, Variable};
use emission_dynamics::scaling::{binned_volatility, fit_scaling, Pooling, ScalingFit};
use emission_dynamics::windows::{run_moving_windows, window_bounds, WindowError, WindowOptions, WindowSeries, PHASE_MARKERS};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Inputs, OutputFormat, RunConfig};
use crate::format::{dec3, num, num6, stars};
use crate::ingest::{read_combined, read_pair, IngestError};
use crate::output::{write_atomic, DirLock};

pub const MANIFEST: &str = "manifest.json";
pub const ERROR_MANIFEST: &str = "error_manifest.json";
pub const REPORT: &str = "report.json";

const VARIABLES: [Variable; 2] = [Variable::Gdp, Variable::Emissions];

/// Errors that stop a run before any estimate is written.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Ingest(_) => "ingest",
            RunError::Panel(_) => "panel",
            RunError::Window(_) => "windows",
            RunError::Io { .. } => "io",
        }
    }
}

/// An estimation that did not converge or failed outright. The run goes on
/// and reports it.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug)]
pub struct RunSummary {
    /// Output files written, in order.
    pub files: Vec<String>,
    pub failures: Vec<Failure>,
}

impl RunSummary {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Seed for one stochastic step, derived from the master seed and a label
/// (FNV-1a of the label, then a SplitMix64 finalizer).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Phase label of a year, by the phase marker years.
pub fn phase_of(year: i32) -> &'static str {
    match year {
        y if y < PHASE_MARKERS[0] => "pre-ETS",
        y if y < PHASE_MARKERS[1] => "ETS-1",
        y if y < PHASE_MARKERS[2] => "ETS-2",
        y if y < PHASE_MARKERS[3] => "ETS-3",
        _ => "ETS-4",
    }
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self(w)
    }

    fn row<I: IntoIterator<Item = S>, S: AsRef<[u8]>>(&mut self, fields: I) {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> Vec<u8> {
        self.0.into_inner().expect("in-memory flush")
    }
}

fn aep_table(fit: &AepFit) -> Vec<u8> {
    let mut t = Csv::new(&["parameter", "estimate", "std_error", "display"]);
    let est = fit.params.to_array();
    for k in 0..5 {
        t.row([
            AEP_PARAMS[k].to_string(),
            num(est[k]),
            num(fit.std_errors[k]),
            format!("{} ({})", dec3(est[k]), dec3(fit.std_errors[k])),
        ]);
    }
    t.row(["log_likelihood".to_string(), num(fit.log_likelihood), String::new(), String::new()]);
    t.row(["n".to_string(), fit.n.to_string(), String::new(), String::new()]);
    t.row(["converged".to_string(), fit.converged.to_string(), String::new(), String::new()]);
    t.finish()
}

fn aep_json(fit: &AepFit) -> Value {
    let est = fit.params.to_array();
    let mut params = serde_json::Map::new();
    for k in 0..5 {
        params.insert(
            AEP_PARAMS[k].into(),
            json!({"estimate": num6(est[k]), "std_error": num6(fit.std_errors[k])}),
        );
    }
    json!({
        "params": params,
        "std_error_method": fit.std_error_method,
        "log_likelihood": num6(fit.log_likelihood),
        "n": fit.n,
        "converged": fit.converged,
    })
}

fn scaling_table(fit: &ScalingFit) -> Vec<u8> {
    let mut t = Csv::new(&["bin", "bin_center", "sigma", "count", "ln_sigma", "fitted_ln_sigma"]);
    for (k, b) in fit.bins.iter().enumerate() {
        t.row([
            k.to_string(),
            num(b.bin_center),
            num(b.sigma),
            b.count.to_string(),
            num(b.sigma.ln()),
            num(fit.intercept + fit.beta * b.bin_center),
        ]);
    }
    t.finish()
}

fn scaling_json(fit: &ScalingFit) -> Value {
    json!({
        "beta": num6(fit.beta),
        "beta_se": num6(fit.beta_se),
        "intercept": num6(fit.intercept),
        "r_squared": num6(fit.r_squared),
        "bins": fit.bins.iter().map(|b| json!({
            "bin_center": num6(b.bin_center), "sigma": num6(b.sigma), "count": b.count
        })).collect::<Vec<_>>(),
    })
}

fn convergence_table(fit: &ConvergenceFit, boot: Option<&BootstrapResult>) -> Vec<u8> {
    let mut t = Csv::new(&["parameter", "estimate", "std_error", "p_value", "stars", "display"]);
    let est = fit.estimates();
    let p = boot.map(|b| b.p_values());
    for (k, name) in emission_dynamics::convergence::PARAM_NAMES.iter().enumerate() {
        let (se, pv, st) = match (boot, p) {
            (Some(b), Some(p)) => (num(b.std_errors[k]), num(p[k]), stars(p[k])),
            _ => (String::new(), String::new(), ""),
        };
        let display = match boot {
            Some(b) => format!("{}{st} ({})", dec3(est[k]), dec3(b.std_errors[k])),
            None => dec3(est[k]),
        };
        t.row([name.to_string(), num(est[k]), se, pv, st.to_string(), display]);
    }
    let blank = || String::new();
    t.row(["n_obs".into(), fit.n_obs.to_string(), blank(), blank(), blank(), blank()]);
    t.row(["objective".into(), num(fit.objective), blank(), blank(), blank(), blank()]);
    t.row(["converged".into(), fit.converged.to_string(), blank(), blank(), blank(), blank()]);
    if let Some(b) = boot {
        t.row(["bootstrap_replicates".into(), b.replicates.len().to_string(), blank(), blank(), blank(), blank()]);
        t.row(["bootstrap_failed".into(), b.failed.to_string(), blank(), blank(), blank(), blank()]);
    }
    t.finish()
}

fn convergence_json(fit: &ConvergenceFit, boot: Option<&BootstrapResult>) -> Value {
    let est = fit.estimates();
    let p = boot.map(|b| b.p_values());
    let mut params = serde_json::Map::new();
    for (k, name) in emission_dynamics::convergence::PARAM_NAMES.iter().enumerate() {
        params.insert(
            name.to_string(),
            json!({
                "estimate": num6(est[k]),
                "std_error": boot.map(|b| num6(b.std_errors[k])),
                "p_value": p.map(|p| num6(p[k])),
                "stars": p.map(|p| stars(p[k])),
            }),
        );
    }
    json!({
        "params": params,
        "n_obs": fit.n_obs,
        "objective": num6(fit.objective),
        "converged": fit.converged,
        "bootstrap_replicates": boot.map(|b| b.replicates.len()),
        "bootstrap_failed": boot.map(|b| b.failed),
    })
}

fn residual_table(panel: &GrowthPanel, fit: &ConvergenceFit) -> Vec<u8> {
    let mut t = Csv::new(&["region_id", "year", "residual"]);
    for (&(region, year), &e) in fit.residual_keys.iter().zip(&fit.residuals) {
        t.row([panel.regions()[region].clone(), year.to_string(), num(e)]);
    }
    t.finish()
}

fn windows_table(series: &WindowSeries) -> Vec<u8> {
    let mut header = vec![
        "start_year", "end_year", "label", "phase", "status", "n_obs", "alpha", "alpha_se", "phi", "phi_se", "beta",
        "beta_se",
    ];
    let aep_cols: Vec<String> = AEP_PARAMS.iter().flat_map(|p| [format!("aep_{p}"), format!("aep_{p}_se")]).collect();
    header.extend(aep_cols.iter().map(String::as_str));
    header.extend(["aep_converged", "error"]);
    let mut t = Csv::new(&header);
    for e in &series.entries {
        let mut row = vec![
            e.start_year.to_string(),
            e.end_year.to_string(),
            e.label(),
            phase_of(e.end_year).to_string(),
        ];
        match &e.outcome {
            Ok(w) => {
                let c = &w.convergence;
                let se = c.std_errors.unwrap_or([f64::NAN; 3]);
                let status = if c.converged && w.residual_aep.converged { "ok" } else { "not_converged" };
                row.extend([status.to_string(), c.n_obs.to_string()]);
                for k in 0..3 {
                    row.extend([num(c.estimates()[k]), num(se[k])]);
                }
                let est = w.residual_aep.params.to_array();
                for k in 0..5 {
                    row.extend([num(est[k]), num(w.residual_aep.std_errors[k])]);
                }
                row.extend([w.residual_aep.converged.to_string(), String::new()]);
            }
            Err(err) => {
                row.extend(["failed".to_string()]);
                row.extend(std::iter::repeat_n(String::new(), 1 + 6 + 10 + 1));
                row.push(err.to_string());
            }
        }
        t.row(row);
    }
    t.finish()
}

fn windows_json(series: &WindowSeries) -> Value {
    json!({
        "window_length": series.window_length,
        "phase_markers": series.phase_markers,
        "entries": series.entries.iter().map(|e| match &e.outcome {
            Ok(w) => json!({
                "start_year": e.start_year,
                "end_year": e.end_year,
                "convergence": convergence_json(&w.convergence, w.bootstrap.as_ref()),
                "residual_aep": aep_json(&w.residual_aep),
            }),
            Err(err) => json!({
                "start_year": e.start_year,
                "end_year": e.end_year,
                "error": err.to_string(),
            }),
        }).collect::<Vec<_>>(),
    })
}

fn period_averages_table(panel: &GrowthPanel, periods: &[PeriodDefinition; 2]) -> Result<Vec<u8>, PanelError> {
    let means: Vec<Vec<(f64, f64)>> = periods
        .iter()
        .map(|p| panel.restrict(p).map(|v| v.mean_growth_by_region()))
        .collect::<Result<_, _>>()?;
    let mut header = vec!["region_id".to_string(), "dev_class".to_string()];
    for p in periods {
        header.push(format!("mean_g_{}", p.name));
        header.push(format!("mean_r_{}", p.name));
    }
    let mut t = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, id) in panel.regions().iter().enumerate() {
        let mut row = vec![id.clone(), panel.dev_class(i).unwrap_or("").to_string()];
        for m in &means {
            row.push(num(m[i].0));
            row.push(num(m[i].1));
        }
        t.row(row);
    }
    Ok(t.finish())
}

fn load_observations(inputs: &Inputs) -> Result<Vec<RegionYearObservation>, IngestError> {
    match inputs {
        Inputs::Separate { emissions, gdp } => read_pair(emissions, gdp),
        Inputs::Combined(path) => read_combined(path),
    }
}

/// Writes `error_manifest.json` into `dir`.
pub fn write_error_manifest(dir: &Path, errors: &[Failure]) -> std::io::Result<()> {
    let doc = json!({
        "status": "failed",
        "errors": errors.iter().map(|f| json!({"stage": f.stage, "message": f.message})).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&doc).expect("json serializes") + "\n";
    write_atomic(dir, ERROR_MANIFEST, text.as_bytes())
}

/// Executes a run. Estimation failures are collected in the summary (and in
/// `error_manifest.json`); input, panel and window-length problems abort the
/// run with an error instead.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    let out = config.out.as_path();
    let _lock = DirLock::acquire(out).map_err(io_err(out))?;
    match execute(config, started) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            let failure = Failure {
                stage: e.kind().into(),
                message: e.to_string(),
            };
            write_error_manifest(out, &[failure]).map_err(io_err(out))?;
            Err(e)
        }
    }
}

fn execute(config: &RunConfig, started: Instant) -> Result<RunSummary, RunError> {
    let out = config.out.as_path();
    let mut inputs_meta = Vec::new();
    for (role, path) in config.inputs.files() {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        inputs_meta.push(json!({
            "role": role,
            "path": path.display().to_string(),
            "sha256": sha256_hex(&bytes),
            "bytes": bytes.len(),
        }));
    }
    let observations = load_observations(&config.inputs)?;
    let (first, last) = match config.years {
        Some(y) => (y.start, y.end),
        None => observations
            .iter()
            .fold((i32::MAX, i32::MIN), |(lo, hi), o| (lo.min(o.year), hi.max(o.year))),
    };
    let panel = build_panel(&observations, first..=last)?;
    // Fail fast on configuration that cannot be honored.
    for p in config.periods.iter().chain(&config.average_periods) {
        panel.restrict(p)?;
    }
    window_bounds(&panel, config.window_length)?;

    let tables = config.wants(OutputFormat::Table);
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut failures = Vec::new();
    let mut period_reports = Vec::new();
    let lad = LadOptions::default();

    for period in &config.periods {
        let view = panel.restrict(period)?;
        let name = &period.name;
        let mut report = serde_json::Map::new();
        report.insert("name".into(), json!(name));
        report.insert("start_year".into(), json!(period.start_year));
        report.insert("end_year".into(), json!(period.end_year));

        let mut aep_reports = serde_json::Map::new();
        let mut scaling_reports = serde_json::Map::new();
        for var in VARIABLES {
            let label = var.label();
            let opts = FitOptions {
                seed: derive_seed(config.seed, &format!("aep/{label}/{name}")),
                ..FitOptions::default()
            };
            match fit_mle(&view.growth_rates(var), &opts) {
                Ok(fit) => {
                    if !fit.converged {
                        failures.push(Failure {
                            stage: format!("aep/{label}/{name}"),
                            message: "AEP fit did not converge (iteration cap or indefinite information matrix)".into(),
                        });
                    }
                    if tables {
                        files.push((format!("aep_{label}_{name}.csv"), aep_table(&fit)));
                    }
                    aep_reports.insert(label.into(), aep_json(&fit));
                }
                Err(e) => failures.push(Failure {
                    stage: format!("aep/{label}/{name}"),
                    message: e.to_string(),
                }),
            }
            match binned_volatility(&view, var, config.n_bins, Pooling::RegionYears).and_then(|b| fit_scaling(&b)) {
                Ok(fit) => {
                    if tables {
                        files.push((format!("scaling_{label}_{name}.csv"), scaling_table(&fit)));
                    }
                    scaling_reports.insert(label.into(), scaling_json(&fit));
                }
                Err(e) => failures.push(Failure {
                    stage: format!("scaling/{label}/{name}"),
                    message: e.to_string(),
                }),
            }
        }
        report.insert("aep".into(), Value::Object(aep_reports));
        report.insert("scaling".into(), Value::Object(scaling_reports));

        let stage = format!("convergence/{name}");
        let fit = match fit_lad(&view, &lad) {
            Ok(fit) => Some(fit),
            Err(ConvergenceError::NoConvergence { partial }) => {
                failures.push(Failure {
                    stage: stage.clone(),
                    message: "did not converge; partial estimates reported with converged=false".to_string(),
                });
                Some(*partial)
            }
            Err(e) => {
                failures.push(Failure {
                    stage: stage.clone(),
                    message: e.to_string(),
                });
                None
            }
        };
        if let Some(mut fit) = fit {
            let boot = match bootstrap_se(&view, &fit, config.bootstrap, derive_seed(config.seed, &stage), &lad) {
                Ok(b) => {
                    fit.std_errors = Some(b.std_errors);
                    Some(b)
                }
                Err(e) => {
                    failures.push(Failure {
                        stage: format!("{stage}/bootstrap"),
                        message: e.to_string(),
                    });
                    None
                }
            };
            if tables {
                files.push((format!("convergence_{name}.csv"), convergence_table(&fit, boot.as_ref())));
                files.push((format!("residuals_{name}.csv"), residual_table(&panel, &fit)));
            }
            report.insert("convergence".into(), convergence_json(&fit, boot.as_ref()));
        }
        period_reports.push(Value::Object(report));
    }

    let window_opts = WindowOptions {
        window_length: config.window_length,
        lad,
        bootstrap_replicates: Some(config.window_bootstrap),
        seed: derive_seed(config.seed, "windows"),
        aep: FitOptions::default(),
    };
    let series = run_moving_windows(&panel, &window_opts)?;
    for e in &series.entries {
        let stage = format!("windows/{}", e.label());
        match &e.outcome {
            Ok(w) => {
                if !w.residual_aep.converged {
                    failures.push(Failure {
                        stage: stage.clone(),
                        message: "residual AEP fit did not converge".into(),
                    });
                }
                if tables {
                    files.push((format!("residuals_window_{}.csv", e.label()), residual_table(&panel, &w.convergence)));
                }
            }
            Err(err) => failures.push(Failure {
                stage,
                message: err.to_string(),
            }),
        }
    }
    if tables {
        files.push(("windows.csv".into(), windows_table(&series)));
        files.push(("period_averages.csv".into(), period_averages_table(&panel, &config.average_periods)?));
    }
    if config.wants(OutputFormat::Json) {
        let report = json!({
            "regions": panel.n_regions(),
            "years": [panel.first_year(), panel.last_year()],
            "periods": period_reports,
            "windows": windows_json(&series),
        });
        files.push((REPORT.into(), (serde_json::to_string_pretty(&report).expect("json serializes") + "\n").into_bytes()));
    }

    for (name, bytes) in &files {
        write_atomic(out, name, bytes).map_err(io_err(out))?;
    }
    if failures.is_empty() {
        match std::fs::remove_file(out.join(ERROR_MANIFEST)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io_err(out)(e)),
            _ => {}
        }
    } else {
        write_error_manifest(out, &failures).map_err(io_err(out))?;
    }

    let manifest = json!({
        "tool": "emission-dynamics",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": emission_dynamics::VERSION,
        "status": if failures.is_empty() { "ok" } else { "failed" },
        "seed": config.seed,
        "inputs": inputs_meta,
        "config": {
            "years": [panel.first_year(), panel.last_year()],
            "periods": config.periods.iter().map(|p| json!({"name": p.name, "start": p.start_year, "end": p.end_year})).collect::<Vec<_>>(),
            "window_length": config.window_length,
            "bins": config.n_bins,
            "bootstrap": config.bootstrap,
            "window_bootstrap": config.window_bootstrap,
            "average_periods": config.average_periods.iter().map(|p| &p.name).collect::<Vec<_>>(),
        },
        "outputs": files.iter().map(|(name, bytes)| json!({"file": name, "sha256": sha256_hex(bytes)})).collect::<Vec<_>>(),
        "failures": failures.len(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("json serializes") + "\n";
    write_atomic(out, MANIFEST, text.as_bytes()).map_err(io_err(out))?;

    let mut names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    names.push(MANIFEST.into());
    Ok(RunSummary { files: names, failures })
}
