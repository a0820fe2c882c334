//! Explicit leapfrog time stepping for the coupled system
//!
//! ```text
//! u_tt = -L1 u + integral_0^t g1(t-s) L1 u(s) ds - mu1 u_t
//!        - integral_tau1^tau2 mu2(s) u_t(t-s) ds - f1(u, v)    (+ forcing)
//! ```
//!
//! and its v twin. The damping is folded in semi-implicitly,
//!
//! ```text
//! u^{n+1} = [2 u^n - (1 - mu dt/2) u^{n-1} + dt^2 acc^n] / (1 + mu dt/2),
//! ```
//!
//! with memory, delay, and source evaluated explicitly at t^n. Velocities
//! are centered differences, so the state exposed to diagnostics is the
//! synchronous triple (t, fields, centered velocities) one level behind
//! the newest displacement. The first level is bootstrapped by a Taylor
//! step to keep second order.

use crate::config::{validate, ProblemSpec, ValidationReport};
use crate::delay::VelocityHistory;
use crate::kernel::FieldHistory;
use crate::operator::{DiscreteOperator, OperatorError};
use std::sync::Arc;
use std::time::Instant;

/// Residual forcing (x, t) -> (R_u, R_v), used by the manufactured-solution
/// harness; absent in production runs.
pub type Forcing = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Synchronous simulation state at sample time `t`.
#[derive(Debug)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub u_t: Vec<f64>,
    pub v_t: Vec<f64>,
    /// Displacements one level ahead (already computed by the scheme).
    u_next: Vec<f64>,
    v_next: Vec<f64>,
    pub hist_u: FieldHistory,
    pub hist_v: FieldHistory,
    pub vel_u: VelocityHistory,
    pub vel_v: VelocityHistory,
    pub op_u: DiscreteOperator,
    pub op_v: DiscreteOperator,
    pub overflow: bool,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub max_field: f64,
    pub max_velocity: f64,
    pub overflow: bool,
    pub wall: std::time::Duration,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RunSummary {
    pub final_t: f64,
    pub steps: usize,
    pub overflow: bool,
    pub final_energy: f64,
}

#[derive(Debug)]
pub enum InitError {
    /// Validation failed (hard findings remain after `allow_unstable`).
    Validation(ValidationReport),
    Operator(OperatorError),
}

impl std::fmt::Display for InitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitError::Validation(report) => {
                writeln!(f, "spec validation failed:")?;
                write!(f, "{report}")
            }
            InitError::Operator(e) => write!(f, "operator assembly: {e}"),
        }
    }
}

impl std::error::Error for InitError {}

impl From<OperatorError> for InitError {
    fn from(e: OperatorError) -> Self {
        InitError::Operator(e)
    }
}

/// One simulation owning its state; parameter sweeps run many of these
/// in parallel with nothing shared but the spec.
pub struct Simulation<'a> {
    pub spec: &'a ProblemSpec,
    pub state: SimState,
    forcing: Option<Forcing>,
}

impl<'a> Simulation<'a> {
    /// Validate the spec, sample initial data, bind prehistories, and
    /// bootstrap the first displacement level.
    pub fn new(spec: &'a ProblemSpec) -> Result<Self, InitError> {
        Self::with_forcing(spec, None)
    }

    pub fn with_forcing(spec: &'a ProblemSpec, forcing: Option<Forcing>) -> Result<Self, InitError> {
        let report = validate(spec);
        if !report.passed() {
            return Err(InitError::Validation(report));
        }

        let op_u = DiscreteOperator::assemble(&spec.grid, &spec.coeff_u)?;
        let op_v = DiscreteOperator::assemble(&spec.grid, &spec.coeff_v)?;
        let xs = spec.grid.nodes();
        let dt = spec.time.dt;

        let u = spec.initial.u0.sample(&spec.grid);
        let v = spec.initial.v0.sample(&spec.grid);
        let u_t = spec.initial.u1.sample(&spec.grid);
        let v_t = spec.initial.v1.sample(&spec.grid);

        let mut vel_u = VelocityHistory::new(
            dt,
            spec.delay_u.window().1,
            xs.clone(),
            spec.history.phi0.resolve(&spec.initial.u1, &spec.grid),
        );
        let mut vel_v = VelocityHistory::new(
            dt,
            spec.delay_v.window().1,
            xs,
            spec.history.phi1.resolve(&spec.initial.v1, &spec.grid),
        );
        vel_u.push(0.0, u_t.clone());
        vel_v.push(0.0, v_t.clone());

        let mut hist_u = FieldHistory::new(dt);
        let mut hist_v = FieldHistory::new(dt);
        hist_u.push(u.clone(), &op_u);
        hist_v.push(v.clone(), &op_v);

        let state = SimState {
            t: 0.0,
            step: 0,
            u,
            v,
            u_t,
            v_t,
            u_next: Vec::new(),
            v_next: Vec::new(),
            hist_u,
            hist_v,
            vel_u,
            vel_v,
            op_u,
            op_v,
            overflow: false,
        };

        let mut sim = Simulation {
            spec,
            state,
            forcing,
        };

        // Taylor bootstrap: u^1 = u^0 + dt u1 + dt^2/2 (acc^0 - mu u1)
        let (acc_u, acc_v) = sim.acceleration(0.0, &sim.state.u.clone(), &sim.state.v.clone());
        let s = &mut sim.state;
        let half = 0.5 * dt * dt;
        s.u_next = (0..s.u.len())
            .map(|j| s.u[j] + dt * s.u_t[j] + half * (acc_u[j] - spec.damping_u * s.u_t[j]))
            .collect();
        s.v_next = (0..s.v.len())
            .map(|j| s.v[j] + dt * s.v_t[j] + half * (acc_v[j] - spec.damping_v * s.v_t[j]))
            .collect();
        let (u_next, v_next) = (s.u_next.clone(), s.v_next.clone());
        s.hist_u.push(u_next, &s.op_u);
        s.hist_v.push(v_next, &s.op_v);

        Ok(sim)
    }

    /// Acceleration without the damping term, at time `t` with fields (wu, wv).
    fn acceleration(&self, t: f64, wu: &[f64], wv: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let spec = self.spec;
        let st = &self.state;
        let n = wu.len();

        let mut acc_u = st.op_u.apply(wu).expect("field length");
        let mut acc_v = st.op_v.apply(wv).expect("field length");
        for a in acc_u.iter_mut().chain(acc_v.iter_mut()) {
            *a = -*a;
        }

        if !spec.kernel_u.is_zero() {
            let mem = st
                .hist_u
                .memory_term(&spec.kernel_u, spec.g_floor(&spec.kernel_u), t)
                .expect("memory history covers [0, t]");
            for (a, m) in acc_u.iter_mut().zip(&mem) {
                *a += m;
            }
        }
        if !spec.kernel_v.is_zero() {
            let mem = st
                .hist_v
                .memory_term(&spec.kernel_v, spec.g_floor(&spec.kernel_v), t)
                .expect("memory history covers [0, t]");
            for (a, m) in acc_v.iter_mut().zip(&mem) {
                *a += m;
            }
        }

        if !spec.delay_u.is_off() {
            let d = spec
                .delay_u
                .delay_integral(&st.vel_u, t)
                .expect("velocity history covers the delay window");
            for (a, di) in acc_u.iter_mut().zip(&d) {
                *a -= di;
            }
        }
        if !spec.delay_v.is_off() {
            let d = spec
                .delay_v
                .delay_integral(&st.vel_v, t)
                .expect("velocity history covers the delay window");
            for (a, di) in acc_v.iter_mut().zip(&d) {
                *a -= di;
            }
        }

        if spec.source.enabled {
            for j in 0..n {
                acc_u[j] -= spec.source.f1(wu[j], wv[j]);
                acc_v[j] -= spec.source.f2(wu[j], wv[j]);
            }
        }

        if let Some(forcing) = &self.forcing {
            let xs = spec.grid.nodes();
            for j in 0..n {
                let (ru, rv) = forcing(xs[j], t);
                acc_u[j] += ru;
                acc_v[j] += rv;
            }
        }

        (acc_u, acc_v)
    }

    /// Advance one step; the exposed sample moves from t^n to t^{n+1}.
    pub fn step(&mut self) -> StepReport {
        assert!(!self.state.overflow, "stepping a blown-up state");
        let start = Instant::now();
        let spec = self.spec;
        let dt = spec.time.dt;
        // stamp from the step counter so t never drifts off the grid
        let t_ahead = (self.state.step + 1) as f64 * dt;

        let (acc_u, acc_v) = {
            let wu = self.state.u_next.clone();
            let wv = self.state.v_next.clone();
            self.acceleration(t_ahead, &wu, &wv)
        };

        let st = &mut self.state;
        let new_u = leapfrog_update(&st.u_next, &st.u, &acc_u, spec.damping_u, dt);
        let new_v = leapfrog_update(&st.v_next, &st.v, &acc_v, spec.damping_v, dt);

        // center velocities at t_ahead
        let inv2dt = 1.0 / (2.0 * dt);
        let u_t: Vec<f64> = new_u
            .iter()
            .zip(&st.u)
            .map(|(a, b)| (a - b) * inv2dt)
            .collect();
        let v_t: Vec<f64> = new_v
            .iter()
            .zip(&st.v)
            .map(|(a, b)| (a - b) * inv2dt)
            .collect();

        st.vel_u.push(t_ahead, u_t.clone());
        st.vel_v.push(t_ahead, v_t.clone());
        st.hist_u.push(new_u.clone(), &st.op_u);
        st.hist_v.push(new_v.clone(), &st.op_v);

        st.u = std::mem::replace(&mut st.u_next, new_u);
        st.v = std::mem::replace(&mut st.v_next, new_v);
        st.u_t = u_t;
        st.v_t = v_t;
        st.t = t_ahead;
        st.step += 1;

        let max_field = max_abs(&st.u).max(max_abs(&st.v)).max(max_abs(&st.u_next));
        let max_velocity = max_abs(&st.u_t).max(max_abs(&st.v_t));
        let finite = st.u_next.iter().chain(st.v_next.iter()).all(|x| x.is_finite());
        if max_field > spec.numerics.blow_up_threshold || !finite {
            st.overflow = true;
        }

        StepReport {
            max_field,
            max_velocity,
            overflow: st.overflow,
            wall: start.elapsed(),
        }
    }

    /// Step until `t >= t_end` or blow-up, invoking `sink` at t = 0, every
    /// `stride` steps, and at the final step. Blow-up is a reported
    /// outcome, not an error.
    pub fn run<F: FnMut(f64, &SimState)>(&mut self, mut sink: F) -> RunSummary {
        let stride = self.spec.time.stride.max(1);
        let n_steps = self.spec.n_steps();
        sink(0.0, &self.state);
        for n in 1..=n_steps {
            let report = self.step();
            if report.overflow {
                break;
            }
            if n % stride == 0 || n == n_steps {
                sink(self.state.t, &self.state);
            }
        }
        let final_energy = crate::diagnostics::energy(&self.state, self.spec)
            .map(|e| e.total)
            .unwrap_or(f64::NAN);
        RunSummary {
            final_t: self.state.t,
            steps: self.state.step,
            overflow: self.state.overflow,
            final_energy,
        }
    }
}

/// The damped three-level update; `kappa = mu dt / 2`.
fn leapfrog_update(cur: &[f64], prev: &[f64], acc: &[f64], mu: f64, dt: f64) -> Vec<f64> {
    let kappa = 0.5 * mu * dt;
    let denom = 1.0 + kappa;
    let retain = 1.0 - kappa;
    let dt2 = dt * dt;
    (0..cur.len())
        .map(|j| (2.0 * cur[j] - retain * prev[j] + dt2 * acc[j]) / denom)
        .collect()
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Manufactured-solution verification

/// Builds the forced problem whose exact solution is
/// `u* = v* = sin(pi x) sin(t)`, runs it on a grid ladder, and reports the
/// discrete L2 error at the final time for each resolution.
pub mod mms {
    use super::*;
    use crate::config::{
        Estimates, GridSpec, HistoryData, HistoryProfile, InitialData, InitialProfile, Numerics,
        TimeSpec,
    };
    use crate::delay::DelayKernel;
    use crate::kernel::RelaxationKernel;
    use crate::operator::CoefficientField;
    use crate::source::SourceParams;

    /// Closed-form memory convolution `integral_0^t g(t-s) sin(s) ds`.
    fn sine_convolution(kernel: &RelaxationKernel, t: f64) -> f64 {
        match *kernel {
            RelaxationKernel::Zero => 0.0,
            RelaxationKernel::Exp { a, b } => {
                a * (b * t.sin() - t.cos() + (-b * t).exp()) / (1.0 + b * b)
            }
            _ => unimplemented!("manufactured forcing has closed forms for exp kernels only"),
        }
    }

    /// Spec for the manufactured run at resolution `n`.
    pub fn spec(n: usize, kernel: RelaxationKernel, t_end: f64) -> ProblemSpec {
        let grid = GridSpec {
            x_lo: 0.0,
            x_hi: 1.0,
            n_interior: n,
        };
        let h = grid.h();
        let dt0 = 0.45 * h;
        let steps = (t_end / dt0).ceil();
        let dt = t_end / steps;
        ProblemSpec {
            grid,
            coeff_u: CoefficientField::constant(1.0, n),
            coeff_v: CoefficientField::constant(1.0, n),
            kernel_u: kernel,
            kernel_v: kernel,
            damping_u: 1.0,
            damping_v: 1.0,
            delay_u: DelayKernel::off(),
            delay_v: DelayKernel::off(),
            source: SourceParams::default(),
            initial: InitialData {
                u0: InitialProfile::Zero,
                v0: InitialProfile::Zero,
                u1: InitialProfile::Sine { mode: 1, amplitude: 1.0 },
                v1: InitialProfile::Sine { mode: 1, amplitude: 1.0 },
            },
            history: HistoryData {
                phi0: HistoryProfile::Custom(Arc::new(|x: f64, r: f64| {
                    (std::f64::consts::PI * x).sin() * r.cos()
                })),
                phi1: HistoryProfile::Custom(Arc::new(|x: f64, r: f64| {
                    (std::f64::consts::PI * x).sin() * r.cos()
                })),
            },
            time: TimeSpec {
                dt,
                t_end,
                stride: usize::MAX, // only the endpoints matter here
                cfl_factor: 0.9,
                dt_explicit: true,
            },
            constants: Estimates::default(),
            numerics: Numerics::default(),
            allow_unstable: false,
        }
    }

    /// Residual forcing that makes `u* = v* = sin(pi x) sin(t)` exact.
    pub fn forcing(spec: &ProblemSpec) -> Forcing {
        let kernel = spec.kernel_u;
        let mu = spec.damping_u;
        let source = spec.source.clone();
        assert!(
            spec.delay_u.is_off() && spec.delay_v.is_off(),
            "manufactured forcing assumes the delay is off"
        );
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        Arc::new(move |x: f64, t: f64| {
            let shape = (std::f64::consts::PI * x).sin();
            let q = shape * t.sin();
            let conv = sine_convolution(&kernel, t);
            let r = shape * (-t.sin() + pi2 * t.sin() - pi2 * conv + mu * t.cos())
                + source.f1(q, q);
            (r, r)
        })
    }

    /// Run the ladder and return (h, L2 error at t_end) per resolution.
    pub fn ladder(ns: &[usize], kernel: RelaxationKernel, t_end: f64) -> Vec<(f64, f64)> {
        ns.iter()
            .map(|&n| {
                let spec = spec(n, kernel, t_end);
                let forcing = forcing(&spec);
                let mut sim =
                    Simulation::with_forcing(&spec, Some(forcing)).expect("mms spec validates");
                sim.run(|_, _| {});
                let state = &sim.state;
                let h = spec.grid.h();
                let exact: Vec<f64> = spec
                    .grid
                    .nodes()
                    .iter()
                    .map(|x| (std::f64::consts::PI * x).sin() * state.t.sin())
                    .collect();
                let err: f64 = state
                    .u
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                ((h), (h * err).sqrt())
            })
            .collect()
    }

    /// Least-squares slope of log(err) against log(h).
    pub fn observed_order(ladder: &[(f64, f64)]) -> f64 {
        let pts: Vec<(f64, f64)> = ladder
            .iter()
            .filter(|(_, e)| *e > 0.0)
            .map(|(h, e)| (h.ln(), e.ln()))
            .collect();
        if pts.len() < 2 {
            return f64::INFINITY; // all errors identically zero
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
