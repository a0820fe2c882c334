//! The canned verification experiments bundled behind `viscowave verify`
//! and the `acceptance` integration test. Each check runs a short desk-
//! scale experiment and reports pass/fail with the measured numbers.

use crate::config::{GridSpec, ProblemSpec};
use crate::diagnostics::{
    self, alpha_condition, equivalence_check, fit_decay, monotonicity_check, LyapunovConfig,
    SampleRow,
};
use crate::integrator::{mms, RunSummary, Simulation};
use crate::kernel::RelaxationKernel;
use crate::operator::norm_sq_h;
use rand::{Rng, SeedableRng};
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {:<22} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// The stable baseline used throughout, parameterized by resolution,
/// horizon, and kernel family. Matches `configs/c1.toml` at
/// `(128, 20.0, exp)`.
pub fn baseline_spec(n: usize, t_end: f64, kernel: RelaxationKernel) -> ProblemSpec {
    let text = include_str!("../configs/c1.toml");
    let mut spec =
        crate::config::from_toml_str(text, std::path::Path::new(".")).expect("baseline parses");
    if spec.grid.n_interior != n {
        let grid = GridSpec {
            n_interior: n,
            ..spec.grid
        };
        spec.grid = grid;
        spec.coeff_u = crate::operator::CoefficientField::constant(1.0, n);
        spec.coeff_v = crate::operator::CoefficientField::constant(1.0, n);
    }
    spec.kernel_u = kernel;
    spec.kernel_v = kernel;
    // re-derive dt and stride for the possibly new grid/horizon
    let mut dt = 0.9 * spec.grid.h();
    let steps = (t_end / dt).ceil();
    dt = t_end / steps;
    spec.time.dt = dt;
    spec.time.t_end = t_end;
    spec.time.stride = ((0.05 / dt).round() as usize).max(1);
    spec.time.dt_explicit = false;
    spec
}

fn c1() -> ProblemSpec {
    baseline_spec(128, 20.0, RelaxationKernel::Exp { a: 0.25, b: 1.0 })
}

/// Run a spec collecting one diagnostics row per sample.
pub fn collect_rows(spec: &ProblemSpec) -> (Vec<SampleRow>, RunSummary) {
    let mut sim = Simulation::new(spec).expect("spec validates");
    let mut rows = Vec::new();
    let spec_ref = spec;
    let summary = sim.run(|_, state| {
        rows.push(
            diagnostics::sample_row(state, spec_ref, LyapunovConfig::default())
                .expect("diagnostics evaluate"),
        );
    });
    (rows, summary)
}

/// The shared C1 run (several criteria read the same trajectory).
fn c1_rows() -> &'static (Vec<SampleRow>, RunSummary) {
    static ROWS: OnceLock<(Vec<SampleRow>, RunSummary)> = OnceLock::new();
    ROWS.get_or_init(|| collect_rows(&c1()))
}

fn energy_series(rows: &[SampleRow]) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.energy.t, r.energy.total)).collect()
}

// ---------------------------------------------------------------------------
// 1. energy monotonicity

pub fn energy_monotonicity() -> CriterionResult {
    let (rows, summary) = c1_rows();
    let series = energy_series(rows);
    let report = monotonicity_check(&series, 0.0, 1e-8);
    let pass = report.pass && !summary.overflow;
    let worst = report
        .upticks
        .iter()
        .map(|u| u.jump)
        .fold(0.0f64, f64::max);
    CriterionResult {
        id: 1,
        name: "energy-monotonicity",
        pass,
        detail: format!(
            "{} samples over T = 20, E(0) = {:.4e}, E(T) = {:.4e}, upticks = {} (worst {:.2e})",
            series.len(),
            series[0].1,
            series.last().unwrap().1,
            report.upticks.len(),
            worst
        ),
    }
}

// ---------------------------------------------------------------------------
// 2. decay envelopes per kernel family

pub fn decay_envelopes() -> CriterionResult {
    let t_end = 40.0;
    let families = [
        ("exp", RelaxationKernel::Exp { a: 0.25, b: 1.0 }),
        ("poly", RelaxationKernel::Poly { a: 0.25, nu: 2.0 }),
        ("log_power", RelaxationKernel::LogPower { a: 0.25, nu: 2.0 }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut alpha_exp_128 = 0.0;
    for (name, kernel) in families {
        let spec = baseline_spec(128, t_end, kernel);
        let (rows, _) = collect_rows(&spec);
        let series = energy_series(&rows);
        let e0 = series[0].1;
        let t0 = diagnostics::default_fit_start(&spec);
        match fit_decay(&series, &kernel, t0, 1e-14 * e0) {
            Ok(fit) => {
                let ok = fit.alpha > 0.0 && fit.residual <= 0.05 * fit.log_range;
                if name == "exp" {
                    alpha_exp_128 = fit.alpha;
                }
                pass &= ok;
                parts.push(format!(
                    "{name}: alpha = {:.3}, residual = {:.1}% of range{}",
                    fit.alpha,
                    100.0 * fit.residual / fit.log_range,
                    if ok { "" } else { " (!)" }
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: fit failed ({e})"));
            }
        }
    }
    // grid consistency of the exponential-family rate
    let spec = baseline_spec(256, t_end, RelaxationKernel::Exp { a: 0.25, b: 1.0 });
    let (rows, _) = collect_rows(&spec);
    let series = energy_series(&rows);
    let t0 = diagnostics::default_fit_start(&spec);
    match fit_decay(
        &series,
        &RelaxationKernel::Exp { a: 0.25, b: 1.0 },
        t0,
        1e-14 * series[0].1,
    ) {
        Ok(fit) => {
            let rel = (fit.alpha - alpha_exp_128).abs() / alpha_exp_128.abs().max(1e-300);
            let ok = rel <= 0.2;
            pass &= ok;
            parts.push(format!(
                "exp n=256: alpha = {:.3} ({:.1}% off n=128){}",
                fit.alpha,
                100.0 * rel,
                if ok { "" } else { " (!)" }
            ));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("exp n=256: fit failed ({e})"));
        }
    }
    CriterionResult {
        id: 2,
        name: "decay-envelopes",
        pass,
        detail: parts.join("; "),
    }
}

// ---------------------------------------------------------------------------
// 3. delay-driven instability

/// The destabilized spec of `configs/unstable_delay.toml`: no memory, no
/// sources, delay mass 2 against friction 1 with the window tuned to half
/// the fundamental period.
pub fn unstable_spec() -> ProblemSpec {
    let text = include_str!("../configs/unstable_delay.toml");
    crate::config::from_toml_str(text, std::path::Path::new(".")).expect("unstable spec parses")
}

pub fn delay_instability() -> CriterionResult {
    let spec = unstable_spec();
    let (rows, summary) = collect_rows(&spec);
    let series = energy_series(&rows);
    let report = monotonicity_check(&series, 0.0, 1e-8);
    let growth = series.last().unwrap().1 / series[0].1;
    let pass = !report.pass;
    CriterionResult {
        id: 3,
        name: "delay-instability",
        pass,
        detail: format!(
            "margin = {:.1}, upticks = {}, E(T)/E(0) = {:.3e}, overflow = {}",
            spec.delay_u.stability_margin(spec.damping_u),
            report.upticks.len(),
            growth,
            summary.overflow
        ),
    }
}

// ---------------------------------------------------------------------------
// 4. source identities

pub fn source_identities() -> CriterionResult {
    let spec = c1();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let samples: Vec<(f64, f64)> = (0..10_000)
        .map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)))
        .collect();
    let euler = spec.source.euler_residual(&samples);
    let (grad, excluded) = spec.source.gradient_residual(&samples, 1e-3);
    let pass = euler <= 1e-9 && grad <= 1e-5;
    CriterionResult {
        id: 4,
        name: "source-identities",
        pass,
        detail: format!(
            "euler residual = {euler:.2e} (<= 1e-9), gradient residual = {grad:.2e} (<= 1e-5), {excluded} near-axis samples excluded"
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. energy decomposition identity

pub fn energy_decomposition() -> CriterionResult {
    let (rows, _) = c1_rows();
    let mut worst = 0.0f64;
    for r in rows {
        let e = r.energy.total;
        let residual = (e - r.energy.kinetic_u - r.energy.kinetic_v - r.stability_j).abs();
        let bound = 1e-10 * (1.0 + e);
        worst = worst.max(residual / bound);
    }
    CriterionResult {
        id: 5,
        name: "energy-decomposition",
        pass: worst <= 1.0,
        detail: format!(
            "max |E - kinetic - J| at {:.3e} of the 1e-10 (1+E) budget over {} samples",
            worst,
            rows.len()
        ),
    }
}

// ---------------------------------------------------------------------------
// 6. positivity of the boundedness functional

pub fn i_positivity() -> CriterionResult {
    let spec = c1();
    let (rows, _) = c1_rows();
    let e0 = rows[0].energy.total;
    let alpha = alpha_condition(&spec, e0, spec.constants.rho).expect("p > 1");
    let i0 = rows[0].stability_i;
    let min_i = rows.iter().map(|r| r.stability_i).fold(f64::INFINITY, f64::min);
    let pass = alpha < 1.0 && i0 > 0.0 && min_i > 0.0;
    CriterionResult {
        id: 6,
        name: "i-positivity",
        pass,
        detail: format!(
            "alpha = {alpha:.4} (< 1), I(0) = {i0:.4e}, min I over run = {min_i:.4e}"
        ),
    }
}

// ---------------------------------------------------------------------------
// 7. Lyapunov equivalence

pub fn lyapunov_equivalence() -> CriterionResult {
    let (rows, _) = c1_rows();
    let e0 = rows[0].energy.total;
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.energy.total, r.lyapunov)).collect();
    match equivalence_check(&samples, 1e-14 * e0) {
        Ok((lo, hi)) => CriterionResult {
            id: 7,
            name: "lyapunov-equivalence",
            pass: lo > 0.0 && hi.is_finite() && lo <= hi,
            detail: format!("L/E in [{lo:.3}, {hi:.3}] with M = 100, eps = 0.01"),
        },
        Err(e) => CriterionResult {
            id: 7,
            name: "lyapunov-equivalence",
            pass: false,
            detail: format!("no samples above floor: {e}"),
        },
    }
}

// ---------------------------------------------------------------------------
// 8. manufactured-solution convergence

pub fn mms_convergence() -> CriterionResult {
    let ns = [32, 64, 128, 256];
    let clean = mms::ladder(&ns, RelaxationKernel::Zero, 2.0);
    let order_clean = mms::observed_order(&clean);
    let memory = mms::ladder(&ns, RelaxationKernel::Exp { a: 0.25, b: 1.0 }, 2.0);
    let order_memory = mms::observed_order(&memory);
    let pass = order_clean >= 1.9 && order_memory >= 1.5;
    CriterionResult {
        id: 8,
        name: "mms-convergence",
        pass,
        detail: format!(
            "spatial order {order_clean:.2} without memory (>= 1.9), {order_memory:.2} with exp memory (>= 1.5)"
        ),
    }
}

// ---------------------------------------------------------------------------
// 9. decay-fit oracle on synthetic envelopes

pub fn decay_fit_oracle() -> CriterionResult {
    let exp_series: Vec<(f64, f64)> = (0..=400)
        .map(|k| {
            let t = 0.05 * k as f64;
            (t, 2.0 * (-0.3 * t).exp())
        })
        .collect();
    let fit_e = fit_decay(
        &exp_series,
        &RelaxationKernel::Exp { a: 0.5, b: 1.0 },
        0.0,
        0.0,
    )
    .expect("enough samples");
    let poly_series: Vec<(f64, f64)> = (0..=400)
        .map(|k| {
            let t = 0.05 * k as f64;
            (t, 5.0 * (1.0 + t).powi(-2))
        })
        .collect();
    let fit_p = fit_decay(
        &poly_series,
        &RelaxationKernel::Poly { a: 1.0, nu: 2.0 },
        0.0,
        0.0,
    )
    .expect("enough samples");
    let errs = [
        (fit_e.alpha - 0.3).abs() / 0.3,
        (fit_e.k - 2.0).abs() / 2.0,
        (fit_p.alpha - 2.0).abs() / 2.0,
        (fit_p.k - 5.0).abs() / 5.0,
    ];
    let worst = errs.iter().cloned().fold(0.0f64, f64::max);
    CriterionResult {
        id: 9,
        name: "decay-fit-oracle",
        pass: worst <= 1e-6,
        detail: format!(
            "exp: (K, alpha) = ({:.8}, {:.8}); poly: ({:.8}, {:.8}); worst relative error {worst:.2e}",
            fit_e.k, fit_e.alpha, fit_p.k, fit_p.alpha
        ),
    }
}

// ---------------------------------------------------------------------------
// 10. twin-run continuous dependence

pub fn twin_run_dependence() -> CriterionResult {
    let spec = c1();
    let base = trajectory(&spec);
    let mut deviations = Vec::new();
    for eps in [1e-3, 1e-4, 1e-5] {
        let mut perturbed = c1();
        perturbed.initial.u0 = crate::config::InitialProfile::Sine {
            mode: 1,
            amplitude: 0.04 + eps,
        };
        let other = trajectory(&perturbed);
        let h = spec.grid.h();
        let mut worst = 0.0f64;
        for (a, b) in base.iter().zip(&other) {
            let d = norm_sq_h(&diff(&a.0, &b.0), h)
                + norm_sq_h(&diff(&a.1, &b.1), h)
                + norm_sq_h(&diff(&a.2, &b.2), h)
                + norm_sq_h(&diff(&a.3, &b.3), h);
            worst = worst.max(d.sqrt());
        }
        deviations.push(worst);
    }
    let r1 = deviations[0] / deviations[1];
    let r2 = deviations[1] / deviations[2];
    let pass = (8.0..=12.0).contains(&r1) && (8.0..=12.0).contains(&r2);
    CriterionResult {
        id: 10,
        name: "twin-run-dependence",
        pass,
        detail: format!(
            "deviation ladder {:.3e} / {:.3e} / {:.3e}, ratios {r1:.2} and {r2:.2} (expect ~10)",
            deviations[0], deviations[1], deviations[2]
        ),
    }
}

type Snapshot = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn trajectory(spec: &ProblemSpec) -> Vec<Snapshot> {
    let mut sim = Simulation::new(spec).expect("spec validates");
    let mut out = Vec::new();
    sim.run(|_, s| {
        out.push((s.u.clone(), s.v.clone(), s.u_t.clone(), s.v_t.clone()));
    });
    out
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

// ---------------------------------------------------------------------------

type Criterion = (&'static str, fn() -> CriterionResult);

/// Run every criterion (or those whose name contains `filter`), in order.
pub fn run_all(filter: Option<&str>) -> Vec<CriterionResult> {
    let checks: Vec<Criterion> = vec![
        ("energy-monotonicity", energy_monotonicity),
        ("decay-envelopes", decay_envelopes),
        ("delay-instability", delay_instability),
        ("source-identities", source_identities),
        ("energy-decomposition", energy_decomposition),
        ("i-positivity", i_positivity),
        ("lyapunov-equivalence", lyapunov_equivalence),
        ("mms-convergence", mms_convergence),
        ("decay-fit-oracle", decay_fit_oracle),
        ("twin-run-dependence", twin_run_dependence),
    ];
    checks
        .into_iter()
        .filter(|(name, _)| filter.is_none_or(|f| name.contains(f)))
        .map(|(_, run)| run())
        .collect()
}
