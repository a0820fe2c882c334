//! Problem description: loading, defaults, derived quantities, and the
//! structural-assumption validator.
//!
//! Config files are TOML with one section per ingredient:
//!
//! ```text
//! [grid]       x_lo, x_hi, n_interior
//! [operator_u] constant, ramp              (a(x) = constant + ramp (x - x_lo)/(x_hi - x_lo))
//! [kernel_u]   family = "exp"|"poly"|"stretched_exp"|"log_power"|"zero", a, b, nu
//! [damping]    mu_u, mu_v
//! [delay_u]    mu, tau1, tau2   or   csv = "table.csv"
//! [source]     a, b, p, enabled
//! [initial]    u0 = { profile = "sine", mode, amplitude } ...
//! [history]    phi0 = { profile = "zero" | "hold" | "damped_hold", rate } ...
//! [time]       dt (optional; CFL-derived when absent), t_end, stride, cfl_factor
//! [constants]  rho, c_s
//! [numerics]   blow_up_threshold, g_floor_rel
//! ```
//!
//! `load` only parses and fills defaults; admissibility lives in
//! [`validate`], which returns one finding per assumption so intentionally
//! destabilized configs can still run under `allow_unstable`.

use crate::delay::{DelayKernel, SpaceTimeFn};
use crate::kernel::{KernelError, RelaxationKernel};
use crate::operator::CoefficientField;
use crate::source::SourceParams;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_interior: usize,
}

impl GridSpec {
    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n_interior + 1) as f64
    }

    /// Interior node coordinates (Dirichlet endpoints excluded).
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (1..=self.n_interior).map(|j| self.x_lo + j as f64 * h).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_lo: 0.0,
            x_hi: 1.0,
            n_interior: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostic sampling stride in steps.
    pub stride: usize,
    pub cfl_factor: f64,
    /// Whether dt came from the file rather than the CFL rule.
    pub dt_explicit: bool,
}

/// Closed-form initial profiles; `Custom` carries arbitrary code-supplied
/// data (used by the manufactured-solution harness).
#[derive(Clone)]
pub enum InitialProfile {
    Zero,
    Sine { mode: u32, amplitude: f64 },
    Gaussian { center: f64, width: f64, amplitude: f64 },
    Parabola { amplitude: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialProfile::Zero => write!(f, "Zero"),
            InitialProfile::Sine { mode, amplitude } => {
                write!(f, "Sine(mode={mode}, amp={amplitude})")
            }
            InitialProfile::Gaussian { center, width, amplitude } => {
                write!(f, "Gaussian(center={center}, width={width}, amp={amplitude})")
            }
            InitialProfile::Parabola { amplitude } => write!(f, "Parabola(amp={amplitude})"),
            InitialProfile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl InitialProfile {
    pub fn eval(&self, x: f64, grid: &GridSpec) -> f64 {
        let len = grid.x_hi - grid.x_lo;
        let xi = (x - grid.x_lo) / len;
        match self {
            InitialProfile::Zero => 0.0,
            InitialProfile::Sine { mode, amplitude } => {
                amplitude * (*mode as f64 * std::f64::consts::PI * xi).sin()
            }
            InitialProfile::Gaussian { center, width, amplitude } => {
                let d = (xi - center) / width;
                amplitude * (-0.5 * d * d).exp()
            }
            InitialProfile::Parabola { amplitude } => amplitude * 4.0 * xi * (1.0 - xi),
            InitialProfile::Custom(f) => f(x),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x, grid)).collect()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InitialProfile::Zero)
    }

    fn dump(&self) -> serde_json::Value {
        match self {
            InitialProfile::Zero => serde_json::json!({"profile": "zero"}),
            InitialProfile::Sine { mode, amplitude } => {
                serde_json::json!({"profile": "sine", "mode": mode, "amplitude": amplitude})
            }
            InitialProfile::Gaussian { center, width, amplitude } => serde_json::json!({
                "profile": "gaussian", "center": center, "width": width, "amplitude": amplitude
            }),
            InitialProfile::Parabola { amplitude } => {
                serde_json::json!({"profile": "parabola", "amplitude": amplitude})
            }
            InitialProfile::Custom(_) => serde_json::json!({"profile": "custom"}),
        }
    }
}

/// Velocity prehistory phi(x, r) for r in (0, tau2].
#[derive(Clone)]
pub enum HistoryProfile {
    Zero,
    /// phi(x, r) = u1(x): holds the initial velocity backwards in time.
    Hold,
    /// phi(x, r) = u1(x) e^{-rate r}.
    DampedHold { rate: f64 },
    Custom(SpaceTimeFn),
}

impl std::fmt::Debug for HistoryProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HistoryProfile::Zero => write!(f, "Zero"),
            HistoryProfile::Hold => write!(f, "Hold"),
            HistoryProfile::DampedHold { rate } => write!(f, "DampedHold(rate={rate})"),
            HistoryProfile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl HistoryProfile {
    /// Bind the profile to its initial-velocity profile, producing the
    /// concrete phi(x, r).
    pub fn resolve(&self, u1: &InitialProfile, grid: &GridSpec) -> SpaceTimeFn {
        match self {
            HistoryProfile::Zero => Arc::new(|_, _| 0.0),
            HistoryProfile::Hold => {
                let u1 = u1.clone();
                let grid = *grid;
                Arc::new(move |x, _| u1.eval(x, &grid))
            }
            HistoryProfile::DampedHold { rate } => {
                let u1 = u1.clone();
                let grid = *grid;
                let rate = *rate;
                Arc::new(move |x, r| u1.eval(x, &grid) * (-rate * r).exp())
            }
            HistoryProfile::Custom(f) => f.clone(),
        }
    }

    fn dump(&self) -> serde_json::Value {
        match self {
            HistoryProfile::Zero => serde_json::json!({"profile": "zero"}),
            HistoryProfile::Hold => serde_json::json!({"profile": "hold"}),
            HistoryProfile::DampedHold { rate } => {
                serde_json::json!({"profile": "damped_hold", "rate": rate})
            }
            HistoryProfile::Custom(_) => serde_json::json!({"profile": "custom"}),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: InitialProfile,
    pub v0: InitialProfile,
    pub u1: InitialProfile,
    pub v1: InitialProfile,
}

#[derive(Debug, Clone)]
pub struct HistoryData {
    pub phi0: HistoryProfile,
    pub phi1: HistoryProfile,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Estimates {
    /// Constant of the Sobolev product bound used by the smallness
    /// gauge; not derivable from the problem data, supplied as an
    /// estimate.
    pub rho: f64,
    /// Embedding constant; 1/pi is sharp for the unit interval.
    pub c_s: f64,
}

impl Default for Estimates {
    fn default() -> Self {
        Self {
            rho: 1.0,
            c_s: 1.0 / std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub blow_up_threshold: f64,
    /// Memory convolution truncation floor, relative to g(0).
    pub g_floor_rel: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            blow_up_threshold: 1e12,
            g_floor_rel: 1e-14,
        }
    }
}

/// Fully resolved description of one simulation.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub coeff_u: CoefficientField,
    pub coeff_v: CoefficientField,
    pub kernel_u: RelaxationKernel,
    pub kernel_v: RelaxationKernel,
    pub damping_u: f64,
    pub damping_v: f64,
    pub delay_u: DelayKernel,
    pub delay_v: DelayKernel,
    pub source: SourceParams,
    pub initial: InitialData,
    pub history: HistoryData,
    pub time: TimeSpec,
    pub constants: Estimates,
    pub numerics: Numerics,
    pub allow_unstable: bool,
}

impl ProblemSpec {
    /// Absolute truncation floor for the memory convolution of `kernel`.
    pub fn g_floor(&self, kernel: &RelaxationKernel) -> f64 {
        if kernel.is_zero() {
            0.0
        } else {
            self.numerics.g_floor_rel * kernel.at_origin()
        }
    }

    pub fn n_steps(&self) -> usize {
        if self.time.t_end <= 0.0 {
            0
        } else {
            (self.time.t_end / self.time.dt - 1e-9).ceil() as usize
        }
    }

    /// JSON image of the resolved spec, embedded in run summaries.
    pub fn dump(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "h": self.grid.h(),
            "operator_u": {"samples": self.coeff_u.samples(), "coercivity": self.coeff_u.coercivity()},
            "operator_v": {"samples": self.coeff_v.samples(), "coercivity": self.coeff_v.coercivity()},
            "kernel_u": kernel_dump(&self.kernel_u),
            "kernel_v": kernel_dump(&self.kernel_v),
            "damping": {"mu_u": self.damping_u, "mu_v": self.damping_v},
            "delay_u": delay_dump(&self.delay_u, self.damping_u),
            "delay_v": delay_dump(&self.delay_v, self.damping_v),
            "source": self.source,
            "initial": {
                "u0": self.initial.u0.dump(), "v0": self.initial.v0.dump(),
                "u1": self.initial.u1.dump(), "v1": self.initial.v1.dump(),
            },
            "history": {"phi0": self.history.phi0.dump(), "phi1": self.history.phi1.dump()},
            "time": self.time,
            "constants": self.constants,
            "numerics": self.numerics,
            "allow_unstable": self.allow_unstable,
        })
    }
}

fn kernel_dump(k: &RelaxationKernel) -> serde_json::Value {
    let mut v = serde_json::to_value(k).unwrap();
    if let (Ok(mass), serde_json::Value::Object(map)) = (k.tail_mass(), &mut v) {
        map.insert("tail_mass".into(), serde_json::json!(mass));
        map.insert("retained_fraction".into(), serde_json::json!(1.0 - mass));
    }
    v
}

fn delay_dump(d: &DelayKernel, mu_damp: f64) -> serde_json::Value {
    let (tau1, tau2) = d.window();
    serde_json::json!({
        "tau1": tau1,
        "tau2": tau2,
        "abs_mass": d.abs_mass(),
        "first_moment": d.first_moment(),
        "stability_margin": d.stability_margin(mu_damp),
    })
}

// ---------------------------------------------------------------------------
// Raw file schema

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    allow_unstable: bool,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    operator_u: RawOperator,
    #[serde(default)]
    operator_v: RawOperator,
    #[serde(default)]
    kernel_u: Option<RawKernel>,
    #[serde(default)]
    kernel_v: Option<RawKernel>,
    #[serde(default)]
    damping: RawDamping,
    #[serde(default)]
    delay_u: Option<RawDelay>,
    #[serde(default)]
    delay_v: Option<RawDelay>,
    #[serde(default)]
    source: Option<RawSource>,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    history: RawHistory,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    constants: Estimates,
    #[serde(default)]
    numerics: Numerics,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOperator {
    constant: f64,
    ramp: f64,
}

impl Default for RawOperator {
    fn default() -> Self {
        Self {
            constant: 1.0,
            ramp: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: String,
    a: Option<f64>,
    b: Option<f64>,
    nu: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDamping {
    mu_u: f64,
    mu_v: f64,
}

impl Default for RawDamping {
    fn default() -> Self {
        Self {
            mu_u: 1.0,
            mu_v: 1.0,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelay {
    mu: Option<f64>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    csv: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSource {
    a: f64,
    b: f64,
    p: f64,
    enabled: bool,
}

impl Default for RawSource {
    fn default() -> Self {
        let d = SourceParams::default();
        Self {
            a: d.a,
            b: d.b,
            p: d.p,
            enabled: d.enabled,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    u0: Option<RawProfile>,
    v0: Option<RawProfile>,
    u1: Option<RawProfile>,
    v1: Option<RawProfile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    phi0: Option<RawProfile>,
    phi1: Option<RawProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    profile: String,
    mode: Option<u32>,
    amplitude: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    t_end: Option<f64>,
    stride: Option<usize>,
    cfl_factor: Option<f64>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    MissingKey { section: String, key: String },
    InvalidValue { what: String, detail: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "io: {msg}"),
            ConfigError::Parse(msg) => write!(f, "parse: {msg}"),
            ConfigError::MissingKey { section, key } => {
                write!(f, "missing key `{key}` in [{section}]")
            }
            ConfigError::InvalidValue { what, detail } => write!(f, "invalid {what}: {detail}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parse and resolve a config file. Derived quantities (h, dt, tail
/// masses) are computed; assumption checks are deferred to [`validate`].
pub fn load(path: &Path) -> Result<ProblemSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Resolve a config from TOML text; `base_dir` anchors relative CSV paths.
pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<ProblemSpec, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(raw, base_dir)
}

fn resolve(raw: RawConfig, base_dir: &Path) -> Result<ProblemSpec, ConfigError> {
    let grid = raw.grid.unwrap_or_default();
    let coeff_u = resolve_operator(&raw.operator_u, &grid);
    let coeff_v = resolve_operator(&raw.operator_v, &grid);

    let default_kernel = RelaxationKernel::Exp { a: 0.25, b: 1.0 };
    let kernel_u = match &raw.kernel_u {
        Some(k) => resolve_kernel(k, "kernel_u")?,
        None => default_kernel,
    };
    let kernel_v = match &raw.kernel_v {
        Some(k) => resolve_kernel(k, "kernel_v")?,
        None => default_kernel,
    };

    let delay_u = resolve_delay(raw.delay_u.as_ref(), base_dir, "delay_u")?;
    let delay_v = resolve_delay(raw.delay_v.as_ref(), base_dir, "delay_v")?;

    let s = raw.source.unwrap_or_default();
    let source = SourceParams {
        a: s.a,
        b: s.b,
        p: s.p,
        enabled: s.enabled,
    };

    let initial = InitialData {
        u0: resolve_initial(raw.initial.u0.as_ref(), "initial.u0")?
            .unwrap_or(InitialProfile::Sine { mode: 1, amplitude: 0.04 }),
        v0: resolve_initial(raw.initial.v0.as_ref(), "initial.v0")?
            .unwrap_or(InitialProfile::Sine { mode: 2, amplitude: 0.02 }),
        u1: resolve_initial(raw.initial.u1.as_ref(), "initial.u1")?
            .unwrap_or(InitialProfile::Zero),
        v1: resolve_initial(raw.initial.v1.as_ref(), "initial.v1")?
            .unwrap_or(InitialProfile::Zero),
    };
    let history = HistoryData {
        phi0: resolve_history(raw.history.phi0.as_ref(), "history.phi0")?
            .unwrap_or(HistoryProfile::Zero),
        phi1: resolve_history(raw.history.phi1.as_ref(), "history.phi1")?
            .unwrap_or(HistoryProfile::Zero),
    };

    let t_end = raw.time.t_end.unwrap_or(20.0);
    let cfl_factor = raw.time.cfl_factor.unwrap_or(0.9);
    let max_coeff = coeff_u.max_coefficient().max(coeff_v.max_coefficient());
    let (dt, dt_explicit) = match raw.time.dt {
        Some(dt) => (dt, true),
        None => {
            let mut dt = cfl_factor * grid.h() / max_coeff.max(1e-300).sqrt();
            if t_end > 0.0 {
                // land the final step exactly on t_end
                let steps = (t_end / dt).ceil();
                dt = t_end / steps;
            }
            (dt, false)
        }
    };
    let stride = raw
        .time
        .stride
        .unwrap_or_else(|| ((0.05 / dt).round() as usize).max(1));
    let time = TimeSpec {
        dt,
        t_end,
        stride,
        cfl_factor,
        dt_explicit,
    };

    Ok(ProblemSpec {
        grid,
        coeff_u,
        coeff_v,
        kernel_u,
        kernel_v,
        damping_u: raw.damping.mu_u,
        damping_v: raw.damping.mu_v,
        delay_u,
        delay_v,
        source,
        initial,
        history,
        time,
        constants: raw.constants,
        numerics: raw.numerics,
        allow_unstable: raw.allow_unstable,
    })
}

fn resolve_operator(raw: &RawOperator, grid: &GridSpec) -> CoefficientField {
    let (c, r) = (raw.constant, raw.ramp);
    let (lo, len) = (grid.x_lo, grid.x_hi - grid.x_lo);
    CoefficientField::from_fn(grid, move |x| c + r * (x - lo) / len)
}

fn resolve_kernel(raw: &RawKernel, section: &str) -> Result<RelaxationKernel, ConfigError> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| ConfigError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })
    };
    match raw.family.as_str() {
        "zero" => Ok(RelaxationKernel::Zero),
        "exp" => Ok(RelaxationKernel::Exp {
            a: need(raw.a, "a")?,
            b: need(raw.b, "b")?,
        }),
        "poly" => Ok(RelaxationKernel::Poly {
            a: need(raw.a, "a")?,
            nu: need(raw.nu, "nu")?,
        }),
        "stretched_exp" => Ok(RelaxationKernel::StretchedExp {
            a: need(raw.a, "a")?,
            nu: need(raw.nu, "nu")?,
        }),
        "log_power" => Ok(RelaxationKernel::LogPower {
            a: need(raw.a, "a")?,
            nu: need(raw.nu, "nu")?,
        }),
        other => Err(ConfigError::InvalidValue {
            what: format!("{section}.family"),
            detail: format!("unknown kernel family `{other}`"),
        }),
    }
}

fn resolve_delay(
    raw: Option<&RawDelay>,
    base_dir: &Path,
    section: &str,
) -> Result<DelayKernel, ConfigError> {
    let Some(raw) = raw else {
        return Ok(DelayKernel::constant(0.25, 0.0, 1.0));
    };
    if let Some(csv) = &raw.csv {
        if raw.mu.is_some() || raw.tau1.is_some() || raw.tau2.is_some() {
            return Err(ConfigError::InvalidValue {
                what: format!("[{section}]"),
                detail: "csv and mu/tau keys are mutually exclusive".into(),
            });
        }
        let path = base_dir.join(csv);
        return DelayKernel::from_csv(&path).map_err(|e| ConfigError::InvalidValue {
            what: format!("{section}.csv"),
            detail: e.to_string(),
        });
    }
    let mu = raw.mu.unwrap_or(0.25);
    let tau1 = raw.tau1.unwrap_or(0.0);
    let tau2 = raw.tau2.unwrap_or(1.0);
    Ok(DelayKernel::constant(mu, tau1, tau2))
}

fn resolve_initial(
    raw: Option<&RawProfile>,
    what: &str,
) -> Result<Option<InitialProfile>, ConfigError> {
    let Some(raw) = raw else { return Ok(None) };
    let p = match raw.profile.as_str() {
        "zero" => InitialProfile::Zero,
        "sine" => InitialProfile::Sine {
            mode: raw.mode.unwrap_or(1),
            amplitude: raw.amplitude.unwrap_or(1.0),
        },
        "gaussian" => InitialProfile::Gaussian {
            center: raw.center.unwrap_or(0.5),
            width: raw.width.unwrap_or(0.1),
            amplitude: raw.amplitude.unwrap_or(1.0),
        },
        "parabola" => InitialProfile::Parabola {
            amplitude: raw.amplitude.unwrap_or(1.0),
        },
        other => {
            return Err(ConfigError::InvalidValue {
                what: what.to_string(),
                detail: format!("unknown profile `{other}`"),
            })
        }
    };
    Ok(Some(p))
}

fn resolve_history(
    raw: Option<&RawProfile>,
    what: &str,
) -> Result<Option<HistoryProfile>, ConfigError> {
    let Some(raw) = raw else { return Ok(None) };
    let p = match raw.profile.as_str() {
        "zero" => HistoryProfile::Zero,
        "hold" => HistoryProfile::Hold,
        "damped_hold" => HistoryProfile::DampedHold {
            rate: raw.rate.unwrap_or(1.0),
        },
        other => {
            return Err(ConfigError::InvalidValue {
                what: what.to_string(),
                detail: format!("unknown history profile `{other}`"),
            })
        }
    };
    Ok(Some(p))
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warning,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// True when no finding failed (warnings allowed).
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.status != Status::Fail)
    }

    pub fn has_warnings(&self) -> bool {
        self.findings.iter().any(|f| f.status == Status::Warning)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.status == Status::Fail)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for finding in &self.findings {
            let tag = match finding.status {
                Status::Pass => "PASS",
                Status::Warning => "WARN",
                Status::Fail => "FAIL",
            };
            writeln!(f, "[{tag}] {:<28} {}", finding.name, finding.detail)?;
        }
        Ok(())
    }
}

/// Number of points at which the kernel inequalities are sampled.
const ASSUMPTION_SAMPLES: usize = 1024;
/// Sampling tolerance for compatibility of prehistory with initial velocity.
const COMPAT_TOL: f64 = 1e-8;

/// Check every structural assumption and return one finding per item.
/// Deterministic and side-effect free.
pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |name: &str, status: Status, detail: String| {
        findings.push(Finding {
            name: name.to_string(),
            status,
            detail,
        });
    };

    // grid & time
    {
        let ok = spec.grid.x_hi > spec.grid.x_lo && spec.grid.n_interior >= 2;
        push(
            "grid",
            if ok { Status::Pass } else { Status::Fail },
            format!(
                "x in ({}, {}), n_interior = {}, h = {:.6e}",
                spec.grid.x_lo,
                spec.grid.x_hi,
                spec.grid.n_interior,
                spec.grid.h()
            ),
        );
        let t = &spec.time;
        let ok = t.dt > 0.0 && t.t_end >= 0.0 && t.stride >= 1 && t.cfl_factor <= 1.0;
        push(
            "time",
            if ok { Status::Pass } else { Status::Fail },
            format!("dt = {:.6e}, t_end = {}, stride = {}", t.dt, t.t_end, t.stride),
        );
        let max_coeff = spec
            .coeff_u
            .max_coefficient()
            .max(spec.coeff_v.max_coefficient());
        let dt_max = t.cfl_factor * spec.grid.h() / max_coeff.sqrt();
        let ok = t.dt <= dt_max * (1.0 + 1e-12);
        push(
            "cfl",
            downgrade(ok, spec.allow_unstable),
            format!("dt = {:.6e}, cfl bound = {:.6e}", t.dt, dt_max),
        );
    }

    // operator coercivity
    for (tag, coeff) in [("u", &spec.coeff_u), ("v", &spec.coeff_v)] {
        let a0 = coeff.coercivity();
        push(
            &format!("operator coercivity ({tag})"),
            if a0 > 0.0 { Status::Pass } else { Status::Fail },
            format!("a0 = {a0:.6e}"),
        );
    }

    // relaxation kernels
    let horizon = spec.time.t_end + spec.delay_u.window().1.max(spec.delay_v.window().1);
    for (tag, k) in [("u", &spec.kernel_u), ("v", &spec.kernel_v)] {
        validate_kernel(k, horizon, tag, &mut findings);
    }

    // delay windows, boundedness, margins
    for (tag, d, damp) in [
        ("u", &spec.delay_u, spec.damping_u),
        ("v", &spec.delay_v, spec.damping_v),
    ] {
        let (tau1, tau2) = d.window();
        let ok = tau1 >= 0.0 && tau2 > tau1;
        findings.push(Finding {
            name: format!("delay window ({tag})"),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: format!("tau1 = {tau1}, tau2 = {tau2}"),
        });
        let margin = d.stability_margin(damp);
        findings.push(Finding {
            name: format!("delay margin ({tag})"),
            status: downgrade(margin > 0.0, spec.allow_unstable),
            detail: format!(
                "mu_damp = {damp}, integral |mu| = {:.6e}, margin = {margin:.6e}",
                d.abs_mass()
            ),
        });
    }

    // source restrictions (1D build: p >= 3)
    {
        let s = &spec.source;
        let (ok, detail) = if !s.enabled {
            (true, "sources disabled".to_string())
        } else {
            (
                s.a > 0.0 && s.b > 0.0 && s.p >= 3.0,
                format!("a = {}, b = {}, p = {}", s.a, s.b, s.p),
            )
        };
        findings.push(Finding {
            name: "source exponent".into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        });
    }

    // compatibility phi(., 0) = initial velocity
    for (tag, phi, u1) in [
        ("u", &spec.history.phi0, &spec.initial.u1),
        ("v", &spec.history.phi1, &spec.initial.v1),
    ] {
        let f = phi.resolve(u1, &spec.grid);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for &x in &spec.grid.nodes() {
            let a = f(x, 0.0);
            let b = u1.eval(x, &spec.grid);
            worst = worst.max((a - b).abs());
            scale = scale.max(b.abs());
        }
        let ok = worst <= COMPAT_TOL * (1.0 + scale);
        findings.push(Finding {
            name: format!("compatibility ({tag})"),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: format!("max |phi(.,0) - v_init| = {worst:.3e}"),
        });
    }

    ValidationReport { findings }
}

fn downgrade(ok: bool, allow_unstable: bool) -> Status {
    if ok {
        Status::Pass
    } else if allow_unstable {
        Status::Warning
    } else {
        Status::Fail
    }
}

fn validate_kernel(k: &RelaxationKernel, horizon: f64, tag: &str, findings: &mut Vec<Finding>) {
    if k.is_zero() {
        findings.push(Finding {
            name: format!("kernel tail ({tag})"),
            status: Status::Pass,
            detail: "zero kernel: l = 1".into(),
        });
        findings.push(Finding {
            name: format!("kernel rate ({tag})"),
            status: Status::Pass,
            detail: "zero kernel: vacuous".into(),
        });
        return;
    }

    // g(0) > 0 and l > 0
    let g0 = k.at_origin();
    match k.retained_fraction() {
        Err(KernelError::DivergentTail { nu }) => findings.push(Finding {
            name: format!("kernel tail ({tag})"),
            status: Status::Fail,
            detail: format!("tail mass infinite (nu = {nu})"),
        }),
        Err(e) => findings.push(Finding {
            name: format!("kernel tail ({tag})"),
            status: Status::Fail,
            detail: e.to_string(),
        }),
        Ok(l) => findings.push(Finding {
            name: format!("kernel tail ({tag})"),
            status: if l > 0.0 && g0 > 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
            detail: format!("g(0) = {g0:.6e}, l = {l:.6e}"),
        }),
    }

    // sampled rate inequality g' <= -zeta g, and zeta >= 0 nonincreasing
    let tol = 1e-9 * g0.max(1e-300);
    let mut worst_ineq = f64::NEG_INFINITY;
    let mut zeta_prev = f64::INFINITY;
    let mut t_prev = 0.0f64;
    let mut rises_after_peak = false;
    let mut rises_in_ramp = false;
    let mut zeta_negative = false;
    let peak = k.zeta_peak_time();
    for i in 0..=ASSUMPTION_SAMPLES {
        let t = horizon * i as f64 / ASSUMPTION_SAMPLES as f64;
        let z = match k.zeta(t) {
            Ok(z) => z,
            Err(_) => continue,
        };
        if z < 0.0 {
            zeta_negative = true;
        }
        worst_ineq = worst_ineq.max(k.derivative(t) + z * k.eval(t));
        if z > zeta_prev + 1e-12 {
            // classify by the interval start: an interval straddling the
            // peak still belongs to the ramp
            if t_prev < peak {
                rises_in_ramp = true;
            } else {
                rises_after_peak = true;
            }
        }
        zeta_prev = z;
        t_prev = t;
    }
    let ineq_ok = worst_ineq <= tol && !zeta_negative;
    let status = if !ineq_ok || rises_after_peak {
        Status::Fail
    } else if rises_in_ramp {
        // the log-power rate rises on its built-in ramp before decaying;
        // the differential inequality still holds there
        Status::Warning
    } else {
        Status::Pass
    };
    let detail = if rises_in_ramp && status == Status::Warning {
        format!(
            "g' + zeta g <= {worst_ineq:.3e}; rate rises on its ramp t < {peak:.3} before decaying"
        )
    } else {
        format!("max (g' + zeta g) = {worst_ineq:.3e} over [0, {horizon:.2}]")
    };
    findings.push(Finding {
        name: format!("kernel rate ({tag})"),
        status,
        detail,
    });
}
