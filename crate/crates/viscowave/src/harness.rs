//! Command-line front end: single runs, parameter sweeps, the canned
//! verification suite, and config validation.
//!
//! Outputs per run: `energy.csv` (one row per diagnostic sample, fixed
//! column order, 17-significant-digit reals) and `summary.json` (run
//! summary, validation findings, decay fit, and the full resolved spec).
//! Sweeps add one subdirectory per grid point plus `sweep_summary.csv`.
//!
//! Exit codes: 0 on completion, 2 on config/validation failure (including
//! sweep caps), 3 on blow-up without `allow_unstable`.

use crate::config::{self, ConfigError, ProblemSpec, ValidationReport};
use crate::diagnostics::{self, DecayFit, LyapunovConfig};
use crate::integrator::{RunSummary, Simulation};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Io(String),
    Manifest(String),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "config: {e}"),
            HarnessError::Io(msg) => write!(f, "io: {msg}"),
            HarnessError::Manifest(msg) => write!(f, "manifest: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

fn io_err<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Default, Clone)]
pub struct RunFlags {
    pub allow_unstable: bool,
    pub stride: Option<usize>,
}

/// Artifacts of one completed run.
#[derive(Debug)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub validation: ValidationReport,
    pub fit: Option<DecayFit>,
    pub exit: i32,
}

const CSV_COLUMNS: &[&str] = &[
    "t",
    "kinetic_u",
    "kinetic_v",
    "elastic_u",
    "elastic_v",
    "memory_u",
    "memory_v",
    "delay_u",
    "delay_v",
    "potential",
    "total",
    "stability_i",
    "stability_j",
    "psi",
    "phi",
    "delay_weighted",
    "lyapunov",
];

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Execute a resolved spec, writing `energy.csv` and `summary.json` into
/// `out_dir`. Validation failures return early with exit 2.
pub fn run_spec(spec: &ProblemSpec, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let validation = config::validate(spec);
    if !validation.passed() {
        return Ok(RunArtifacts {
            summary: RunSummary {
                final_t: 0.0,
                steps: 0,
                overflow: false,
                final_energy: f64::NAN,
            },
            validation,
            fit: None,
            exit: EXIT_VALIDATION,
        });
    }

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join("energy.csv");
    let file = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut csv = std::io::BufWriter::new(file);
    writeln!(csv, "{}", CSV_COLUMNS.join(",")).map_err(io_err(&csv_path))?;

    let mut sim = Simulation::new(spec).expect("validated spec initializes");
    let mut series: Vec<(f64, f64)> = Vec::new();
    let lyap_cfg = LyapunovConfig::default();
    let mut sink_err: Option<String> = None;
    let summary = sim.run(|t, state| {
        match diagnostics::sample_row(state, spec, lyap_cfg) {
            Ok(row) => {
                series.push((t, row.energy.total));
                let e = &row.energy;
                let cols = [
                    e.t,
                    e.kinetic_u,
                    e.kinetic_v,
                    e.elastic_u,
                    e.elastic_v,
                    e.memory_u,
                    e.memory_v,
                    e.delay_u,
                    e.delay_v,
                    e.potential,
                    e.total,
                    row.stability_i,
                    row.stability_j,
                    row.psi,
                    row.phi,
                    row.delay_weighted,
                    row.lyapunov,
                ];
                let line: Vec<String> = cols.iter().map(|&x| fmt_real(x)).collect();
                let _ = writeln!(csv, "{}", line.join(","));
            }
            Err(e) => sink_err = Some(e.to_string()),
        }
    });
    csv.flush().map_err(io_err(&csv_path))?;
    if let Some(e) = sink_err {
        return Err(HarnessError::Io(format!("diagnostics failed mid-run: {e}")));
    }

    let fit = if series.len() >= 2 {
        let e0 = series[0].1;
        diagnostics::fit_decay(
            &series,
            &spec.kernel_u,
            diagnostics::default_fit_start(spec),
            1e-14 * e0,
        )
        .ok()
    } else {
        None
    };

    let alpha = diagnostics::alpha_condition(spec, series.first().map_or(0.0, |s| s.1), spec.constants.rho)
        .ok();
    let summary_json = serde_json::json!({
        "summary": summary,
        "validation": validation,
        "decay_fit": fit,
        "alpha_condition": alpha,
        "lyapunov_config": lyap_cfg,
        "spec": spec.dump(),
    });
    let json_path = out_dir.join("summary.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&summary_json).expect("serializable"),
    )
    .map_err(io_err(&json_path))?;

    let exit = if summary.overflow && !spec.allow_unstable {
        EXIT_OVERFLOW
    } else {
        EXIT_OK
    };
    Ok(RunArtifacts {
        summary,
        validation,
        fit,
        exit,
    })
}

/// `viscowave run`: load, validate, integrate, emit artifacts.
pub fn cmd_run(config_path: &Path, out_dir: &Path, flags: &RunFlags) -> Result<i32, HarnessError> {
    let mut spec = config::load(config_path)?;
    if flags.allow_unstable {
        spec.allow_unstable = true;
    }
    if let Some(stride) = flags.stride {
        spec.time.stride = stride.max(1);
    }
    let artifacts = run_spec(&spec, out_dir)?;
    if artifacts.exit == EXIT_VALIDATION {
        println!("validation failed:");
        print!("{}", artifacts.validation);
        return Ok(EXIT_VALIDATION);
    }
    println!(
        "run complete: t = {:.4}, steps = {}, E(T) = {:.6e}, overflow = {}",
        artifacts.summary.final_t,
        artifacts.summary.steps,
        artifacts.summary.final_energy,
        artifacts.summary.overflow
    );
    if let Some(fit) = &artifacts.fit {
        println!(
            "decay fit ({}): K = {:.4e}, alpha = {:.4}, residual = {:.2e}",
            fit.family, fit.k, fit.alpha, fit.residual
        );
    }
    Ok(artifacts.exit)
}

/// `viscowave validate`: print the findings, exit 0 iff no failures.
pub fn cmd_validate(config_path: &Path) -> Result<i32, HarnessError> {
    let spec = config::load(config_path)?;
    let report = config::validate(&spec);
    print!("{report}");
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

/// `viscowave verify`: run the acceptance checks, one line each.
pub fn cmd_verify(filter: Option<&str>) -> i32 {
    let results = crate::acceptance::run_all(filter);
    if results.is_empty() {
        println!("no criteria match the filter");
        return EXIT_VALIDATION;
    }
    let mut all_pass = true;
    for r in &results {
        println!("{r}");
        all_pass &= r.pass;
    }
    println!(
        "{} of {} criteria passed",
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    if all_pass {
        EXIT_OK
    } else {
        1
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps

/// Sweep description: a base config plus one value list per dotted
/// parameter path; the run set is the cross product.
#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub name: String,
    /// Path to the base config, relative to the manifest file.
    pub config: String,
    /// Output directory, relative to the manifest file.
    pub output: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Cross-product size cap.
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub axes: toml::map::Map<String, toml::Value>,
}

fn default_cap() -> usize {
    256
}

#[derive(Debug, Clone)]
struct SweepPoint {
    index: usize,
    assignments: Vec<(String, toml::Value)>,
}

#[derive(Debug)]
struct SweepRow {
    point: usize,
    values: Vec<String>,
    final_t: f64,
    final_energy: f64,
    overflow: bool,
    margin_u: f64,
    alpha: f64,
    exit: i32,
}

/// `viscowave sweep`: run every grid point, in parallel up to the worker
/// cap, and write `sweep_summary.csv`.
pub fn cmd_sweep(manifest_path: &Path, workers: Option<usize>) -> Result<i32, HarnessError> {
    let text = std::fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: ExperimentManifest =
        toml::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));

    let config_path = base_dir.join(&manifest.config);
    let base_text = std::fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
    let base_value: toml::Value =
        toml::from_str(&base_text).map_err(|e| HarnessError::Manifest(e.to_string()))?;

    // deterministic axis order
    let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
    let mut keys: Vec<&String> = manifest.axes.keys().collect();
    keys.sort();
    for key in keys {
        match &manifest.axes[key.as_str()] {
            toml::Value::Array(vals) if !vals.is_empty() => {
                axes.push((key.clone(), vals.clone()));
            }
            _ => {
                return Err(HarnessError::Manifest(format!(
                    "axis `{key}` must be a non-empty array"
                )))
            }
        }
    }

    let total: usize = axes.iter().map(|(_, v)| v.len()).product::<usize>().max(1);
    if total > manifest.cap {
        println!(
            "sweep `{}` has {total} points, over the cap of {}",
            manifest.name, manifest.cap
        );
        return Ok(EXIT_VALIDATION);
    }

    let points: Vec<SweepPoint> = (0..total)
        .map(|index| {
            let mut rem = index;
            let mut assignments = Vec::new();
            for (key, vals) in &axes {
                let pick = rem % vals.len();
                rem /= vals.len();
                assignments.push((key.clone(), vals[pick].clone()));
            }
            SweepPoint { index, assignments }
        })
        .collect();

    let out_root = base_dir.join(&manifest.output);
    std::fs::create_dir_all(&out_root).map_err(io_err(&out_root))?;

    let workers = worker_cap(workers).min(points.len().max(1));
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<SweepRow>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    let base_dir_owned = base_dir.to_path_buf();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let row = run_sweep_point(
                    &base_value,
                    &points[i],
                    &out_root,
                    &base_dir_owned,
                );
                rows.lock().unwrap()[i] = Some(row);
            });
        }
    });

    let rows = rows.into_inner().unwrap();
    let summary_path = out_root.join("sweep_summary.csv");
    let file = std::fs::File::create(&summary_path).map_err(io_err(&summary_path))?;
    let mut w = std::io::BufWriter::new(file);
    let axis_names: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
    writeln!(
        w,
        "point,{}{}final_t,final_energy,overflow,margin_u,alpha,exit",
        axis_names.join(","),
        if axis_names.is_empty() { "" } else { "," }
    )
    .map_err(io_err(&summary_path))?;
    let mut worst_exit = EXIT_OK;
    for row in rows.into_iter().flatten() {
        worst_exit = worst_exit.max(row.exit);
        writeln!(
            w,
            "{},{}{}{},{},{},{},{},{}",
            row.point,
            row.values.join(","),
            if row.values.is_empty() { "" } else { "," },
            fmt_real(row.final_t),
            fmt_real(row.final_energy),
            row.overflow,
            fmt_real(row.margin_u),
            fmt_real(row.alpha),
            row.exit
        )
        .map_err(io_err(&summary_path))?;
    }
    w.flush().map_err(io_err(&summary_path))?;

    let manifest_json = serde_json::json!({
        "name": manifest.name,
        "config": manifest.config,
        "seed": manifest.seed,
        "points": points.len(),
        "workers": workers,
    });
    std::fs::write(
        out_root.join("sweep_manifest.json"),
        serde_json::to_string_pretty(&manifest_json).expect("serializable"),
    )
    .map_err(io_err(&out_root))?;

    println!(
        "sweep `{}`: {} points into {}",
        manifest.name,
        points.len(),
        out_root.display()
    );
    Ok(worst_exit)
}

fn run_sweep_point(
    base: &toml::Value,
    point: &SweepPoint,
    out_root: &Path,
    base_dir: &Path,
) -> SweepRow {
    let values: Vec<String> = point
        .assignments
        .iter()
        .map(|(_, v)| toml_scalar_string(v))
        .collect();
    let mut doc = base.clone();
    for (path, value) in &point.assignments {
        set_by_path(&mut doc, path, value.clone());
    }
    let out_dir = out_root.join(format!("point_{:03}", point.index));
    let failed = |detail: String| {
        eprintln!("sweep point {} failed: {detail}", point.index);
        SweepRow {
            point: point.index,
            values: values.clone(),
            final_t: f64::NAN,
            final_energy: f64::NAN,
            overflow: false,
            margin_u: f64::NAN,
            alpha: f64::NAN,
            exit: EXIT_VALIDATION,
        }
    };
    let text = match toml::to_string(&doc) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let spec = match config::from_toml_str(&text, base_dir) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    match run_spec(&spec, &out_dir) {
        Ok(artifacts) => SweepRow {
            point: point.index,
            values,
            final_t: artifacts.summary.final_t,
            final_energy: artifacts.summary.final_energy,
            overflow: artifacts.summary.overflow,
            margin_u: spec.delay_u.stability_margin(spec.damping_u),
            alpha: artifacts.fit.map_or(f64::NAN, |f| f.alpha),
            exit: artifacts.exit,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn toml_scalar_string(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(x) => format!("{x}"),
        toml::Value::Integer(x) => format!("{x}"),
        toml::Value::Boolean(x) => format!("{x}"),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Assign into a nested TOML document by dotted path, creating tables.
fn set_by_path(doc: &mut toml::Value, path: &str, value: toml::Value) {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            if let toml::Value::Table(t) = cur {
                t.insert(part.to_string(), value);
            }
            return;
        }
        if let toml::Value::Table(t) = cur {
            cur = t
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        } else {
            return;
        }
    }
}

fn worker_cap(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("VISCOWAVE_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get().min(8))
            .unwrap_or(4)
    })
    .max(1)
}

/// Convenience used by tests and examples: run a spec into a fresh
/// temporary-ish directory under `root`.
pub fn out_dir_for(root: &Path, name: &str) -> PathBuf {
    root.join(name)
}
