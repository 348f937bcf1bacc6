//! File-level commands behind the `semiquantum` binary.
//!
//! Every command writes a `manifest.json` into its output directory listing
//! the configuration used, every file produced and how the run ended.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{load_scenario, load_sweep, scenario_to_text, SweepAxis};
use crate::diagnostics::{self, log_log_slope, lyapunov_max, DiagnosticsReport};
use crate::dynamics::{integrate, ScenarioConfig, Trajectory};
use crate::error::{Error, Result};
use crate::output::{format_float, read_records_file, write_json, write_records_file};
use crate::plot::{write_plot, PlotKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const CSV_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "diagnostics.json";
pub const OVERLAY_FILE: &str = "number_overlay.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Sweep legs shorter than this get no Lyapunov estimate.
pub const MIN_LYAPUNOV_HORIZON: f64 = 10.0;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Usage(_) | Error::Domain(_) | Error::Validation(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::Singularity { .. } | Error::StepUnderflow { .. } | Error::NonFinite { .. } | Error::Diagnostic(_) => {
            EXIT_RUNTIME
        }
    }
}

/// What a command did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: Option<ScenarioConfig>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    /// `completed`, `aborted-singularity` or `aborted-stepfail`.
    pub status: String,
    pub detail: Option<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config: Option<ScenarioConfig>) -> Self {
        RunManifest {
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            artifacts: Vec::new(),
            wall_clock_seconds: 0.0,
            status: "completed".into(),
            detail: None,
            warnings: Vec::new(),
        }
    }

    /// Exit code implied by the status.
    pub fn exit_code(&self) -> i32 {
        if self.status == "completed" {
            EXIT_OK
        } else {
            EXIT_RUNTIME
        }
    }

    fn finish(mut self, out_dir: &Path, started: Instant) -> Result<Self> {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        let path = out_dir.join(MANIFEST_FILE);
        self.artifacts.push(path.clone());
        write_json(&path, &self)?;
        Ok(self)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn record_termination(manifest: &mut RunManifest, tr: &Trajectory) {
    manifest.status = tr.termination.status().to_string();
    if let crate::dynamics::Termination::Aborted { detail, .. } = &tr.termination {
        manifest.detail = Some(detail.clone());
    }
}

/// Writes the time series, the report and the number overlay for one run.
fn write_run_outputs(
    cfg: &ScenarioConfig,
    tr: &Trajectory,
    report: &DiagnosticsReport,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let csv = out_dir.join(CSV_FILE);
    write_records_file(&csv, &tr.records)?;
    manifest.artifacts.push(csv);
    let json = out_dir.join(REPORT_FILE);
    write_json(&json, report)?;
    manifest.artifacts.push(json);
    let svg = out_dir.join(OVERLAY_FILE);
    write_plot(&tr.records, PlotKind::NumberOverlay, &cfg.name, &svg)?;
    manifest.artifacts.push(svg);
    Ok(())
}

/// `simulate`: integrate one scenario and write CSV, report and overlay plot.
/// An aborted run still writes its partial outputs.
pub fn run_scenario(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = load_scenario(config_path)?;
    create_dir(out_dir)?;
    let tr = integrate(&cfg)?;
    let report = DiagnosticsReport::from_run(&cfg, &tr.records, &tr.termination);
    let mut manifest = RunManifest::new("simulate", Some(cfg.clone()));
    record_termination(&mut manifest, &tr);
    write_run_outputs(&cfg, &tr, &report, out_dir, &mut manifest)?;
    manifest.finish(out_dir, started)
}

/// `diagnose`: as `simulate`, with the full diagnostics report and all plots.
pub fn run_diagnose(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = load_scenario(config_path)?;
    create_dir(out_dir)?;
    let (tr, report) = diagnostics::diagnose(&cfg)?;
    let mut manifest = RunManifest::new("diagnose", Some(cfg.clone()));
    record_termination(&mut manifest, &tr);
    manifest.warnings.extend(report.notes.iter().cloned());
    write_run_outputs(&cfg, &tr, &report, out_dir, &mut manifest)?;
    if !tr.records.is_empty() {
        for kind in [PlotKind::NumberDifference, PlotKind::Energy, PlotKind::PhaseA] {
            let path = out_dir.join(format!("{}.svg", kind.as_str().replace('-', "_").to_lowercase()));
            write_plot(&tr.records, kind, &cfg.name, &path)?;
            manifest.artifacts.push(path);
        }
    }
    manifest.finish(out_dir, started)
}

/// `plot`: render one plot kind from a time-series CSV.
pub fn plot_csv(csv_path: &Path, kind: PlotKind, out_path: &Path) -> Result<()> {
    let records = read_records_file(csv_path)?;
    let title = csv_path
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();
    write_plot(&records, kind, &title, out_path)
}

/// One row of a sweep's aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLeg {
    pub leg: String,
    pub value: f64,
    pub status: String,
    pub max_discrepancy: Option<f64>,
    pub max_remainder: Option<f64>,
    pub energy_drift: Option<f64>,
    pub lyapunov: Option<f64>,
    pub extrema_ours: Option<usize>,
    pub extrema_cdms: Option<usize>,
}

/// Sweep-level summary written to `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: String,
    pub legs: Vec<SweepLeg>,
    pub discrepancy_power: Option<f64>,
    pub note: Option<String>,
}

/// A finished leg: its table row, the files it wrote and its warnings.
type LegOutcome = (SweepLeg, Vec<PathBuf>, Vec<String>);

fn run_leg(cfg: &ScenarioConfig, value: f64, dir: &Path) -> Result<LegOutcome> {
    create_dir(dir)?;
    let cfg_path = dir.join("config.cfg");
    std::fs::write(&cfg_path, scenario_to_text(cfg)).map_err(|e| Error::Io(format!("{}: {e}", cfg_path.display())))?;
    let mut warnings = Vec::new();
    let tr = integrate(cfg)?;
    let mut report = DiagnosticsReport::from_run(cfg, &tr.records, &tr.termination);
    if cfg.t_end >= MIN_LYAPUNOV_HORIZON {
        match lyapunov_max(cfg, 1.0, cfg.t_end) {
            Ok(l) => report.lyapunov = Some(l),
            Err(e) => report.notes.push(format!("lyapunov: {e}")),
        }
    } else {
        report
            .notes
            .push(format!("lyapunov: horizon shorter than {MIN_LYAPUNOV_HORIZON}"));
    }
    let mut manifest = RunManifest::new("sweep-leg", Some(cfg.clone()));
    record_termination(&mut manifest, &tr);
    manifest.artifacts.push(cfg_path);
    write_run_outputs(cfg, &tr, &report, dir, &mut manifest)?;
    if !tr.termination.is_completed() {
        warnings.push(format!(
            "leg {} {}: {}",
            cfg.name,
            manifest.status,
            manifest.detail.clone().unwrap_or_default()
        ));
    }
    let (amp, rem) = tr.records.iter().fold((None::<f64>, None::<f64>), |(a, r), rec| {
        let d = rec.n_ours - rec.n_cdms;
        (
            Some(a.unwrap_or(0.0).max(d.abs())),
            Some(r.unwrap_or(0.0).max((d - rec.dn_leading).abs())),
        )
    });
    let leg = SweepLeg {
        leg: cfg.name.clone(),
        value,
        status: manifest.status.clone(),
        max_discrepancy: amp,
        max_remainder: rem,
        energy_drift: report.energy_drift,
        lyapunov: report.lyapunov.as_ref().map(|l| l.lambda),
        extrema_ours: report.extrema_ours,
        extrema_cdms: report.extrema_cdms,
    };
    Ok((leg, manifest.artifacts, warnings))
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// `sweep`: run every leg (concurrently) into its own subdirectory, then
/// write the aggregate table and the discrepancy fit.
pub fn run_sweep(sweep_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let spec = load_sweep(sweep_path)?;
    create_dir(out_dir)?;
    let legs = spec.legs();
    let results: Vec<Result<LegOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = legs
            .iter()
            .zip(&spec.values)
            .map(|(cfg, &v)| {
                let dir = out_dir.join(&cfg.name);
                scope.spawn(move || run_leg(cfg, v, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep leg panicked"))
            .collect()
    });

    let mut manifest = RunManifest::new("sweep", Some(spec.base.clone()));
    let mut rows = Vec::new();
    for ((cfg, &value), result) in legs.iter().zip(&spec.values).zip(results) {
        match result {
            Ok((leg, artifacts, warnings)) => {
                manifest.artifacts.extend(artifacts);
                manifest.warnings.extend(warnings);
                rows.push(leg);
            }
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => {
                manifest.warnings.push(format!("leg {} failed: {e}", cfg.name));
                rows.push(SweepLeg {
                    leg: cfg.name.clone(),
                    value,
                    status: "failed".into(),
                    max_discrepancy: None,
                    max_remainder: None,
                    energy_drift: None,
                    lyapunov: None,
                    extrema_ours: None,
                    extrema_cdms: None,
                });
            }
        }
    }

    let (power, note) = if spec.axis != SweepAxis::Coupling {
        (
            None,
            Some(format!("no discrepancy fit: axis is {}, not e", spec.axis.key())),
        )
    } else {
        let usable: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.status == "completed")
            .filter_map(|r| {
                r.max_discrepancy
                    .filter(|a| *a > 0.0 && r.value > 0.0)
                    .map(|a| (r.value, a))
            })
            .collect();
        if usable.len() < 3 {
            (
                None,
                Some(format!(
                    "insufficient legs for a power fit ({} usable, need 3)",
                    usable.len()
                )),
            )
        } else {
            let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
            (Some(log_log_slope(&xs, &ys)), None)
        }
    };

    let aggregate = out_dir.join("aggregate.csv");
    {
        let mut w =
            csv::Writer::from_path(&aggregate).map_err(|e| Error::Io(format!("{}: {e}", aggregate.display())))?;
        w.write_record([
            "leg",
            spec.axis.key(),
            "status",
            "max_discrepancy",
            "max_remainder",
            "energy_drift",
            "lyapunov",
            "extrema_ours",
            "extrema_cdms",
        ])?;
        for r in &rows {
            w.write_record([
                r.leg.clone(),
                format_float(r.value),
                r.status.clone(),
                opt(r.max_discrepancy),
                opt(r.max_remainder),
                opt(r.energy_drift),
                opt(r.lyapunov),
                r.extrema_ours.map(|v| v.to_string()).unwrap_or_default(),
                r.extrema_cdms.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    manifest.artifacts.push(aggregate);
    let summary = SweepSummary {
        axis: spec.axis.key().to_string(),
        legs: rows,
        discrepancy_power: power,
        note: note.clone(),
    };
    let summary_path = out_dir.join("sweep.json");
    write_json(&summary_path, &summary)?;
    manifest.artifacts.push(summary_path);
    if let Some(n) = note {
        manifest.warnings.push(n);
    }
    manifest.finish(out_dir, started)
}
