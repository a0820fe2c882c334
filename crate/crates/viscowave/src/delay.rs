//! Distributed delay machinery: the forcing
//! `integral_{tau1}^{tau2} mu(s) u_t(x, t-s) ds`, the velocity ring buffer
//! it reads from, and the delayed-energy moments built on the view
//! `z(x, k, s, t) = u_t(x, t - k s)`.
//!
//! The transport reformulation of z is not discretized separately; z is
//! obtained exactly by interpolated lookups into the velocity history,
//! with the prehistory function covering queries at t <= 0.

use crate::quad::gauss_legendre_on;
use std::sync::{Arc, OnceLock};

/// Quadrature order for smooth delay weights on [tau1, tau2].
const DELAY_NODES: usize = 32;
/// Quadrature order for the k in (0,1) direction of z-moments.
const K_NODES: usize = 16;

fn k_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_on(K_NODES, 0.0, 1.0))
}

/// Space-time scalar function used for velocity prehistory phi(x, r).
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone)]
enum MuShape {
    Constant(f64),
    Tabulated { s: Vec<f64>, mu: Vec<f64> },
}

/// Delay weight mu(s) on a window [tau1, tau2] with precomputed quadrature.
#[derive(Debug, Clone)]
pub struct DelayKernel {
    shape: MuShape,
    tau1: f64,
    tau2: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    abs_mass: f64,
    first_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayError {
    /// Query fell outside the covered window [t - tau2, t].
    WindowExceeded { t_query: f64, t_lo: f64, t_hi: f64 },
    /// Tabulated weights must have >= 2 strictly increasing finite rows.
    BadTable(String),
}

impl std::fmt::Display for DelayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DelayError::WindowExceeded { t_query, t_lo, t_hi } => write!(
                f,
                "velocity lookup at t = {t_query} outside covered window [{t_lo}, {t_hi}]"
            ),
            DelayError::BadTable(msg) => write!(f, "bad delay table: {msg}"),
        }
    }
}

impl std::error::Error for DelayError {}

impl DelayKernel {
    /// Constant weight on [tau1, tau2], Gauss–Legendre quadrature.
    ///
    /// A degenerate window (tau2 <= tau1) yields an empty rule with zero
    /// mass; validation reports it rather than this constructor.
    pub fn constant(mu: f64, tau1: f64, tau2: f64) -> Self {
        let (nodes, weights) = if tau2 > tau1 {
            gauss_legendre_on(DELAY_NODES, tau1, tau2)
        } else {
            (Vec::new(), Vec::new())
        };
        let mut k = Self {
            shape: MuShape::Constant(mu),
            tau1,
            tau2,
            nodes,
            weights,
            abs_mass: 0.0,
            first_moment: 0.0,
        };
        k.compute_moments();
        k
    }

    /// No delayed forcing at all.
    pub fn off() -> Self {
        Self::constant(0.0, 0.0, 1.0)
    }

    /// Tabulated weight; composite trapezoid on the table grid.
    pub fn from_table(s: Vec<f64>, mu: Vec<f64>) -> Result<Self, DelayError> {
        if s.len() < 2 || s.len() != mu.len() {
            return Err(DelayError::BadTable(format!(
                "need >= 2 rows of equal length, got {} and {}",
                s.len(),
                mu.len()
            )));
        }
        for w in s.windows(2) {
            if w[1] <= w[0] {
                return Err(DelayError::BadTable("s column must be strictly increasing".into()));
            }
        }
        if s.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
            return Err(DelayError::BadTable("non-finite entry".into()));
        }
        if s[0] < 0.0 {
            return Err(DelayError::BadTable("delays must be nonnegative".into()));
        }
        let mut weights = vec![0.0; s.len()];
        for i in 0..s.len() - 1 {
            let half = 0.5 * (s[i + 1] - s[i]);
            weights[i] += half;
            weights[i + 1] += half;
        }
        let mut k = Self {
            tau1: s[0],
            tau2: *s.last().unwrap(),
            nodes: s.clone(),
            weights,
            shape: MuShape::Tabulated { s, mu },
            abs_mass: 0.0,
            first_moment: 0.0,
        };
        k.compute_moments();
        Ok(k)
    }

    /// Load a two-column CSV of (s, mu(s)) rows; `#` lines and a
    /// non-numeric header row are skipped.
    pub fn from_csv(path: &std::path::Path) -> Result<Self, DelayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DelayError::BadTable(format!("{}: {e}", path.display())))?;
        let mut s = Vec::new();
        let mut mu = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (c0, c1) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
            match (c0.parse::<f64>(), c1.parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    s.push(a);
                    mu.push(b);
                }
                _ if s.is_empty() => continue, // header
                _ => return Err(DelayError::BadTable(format!("bad row: {line}"))),
            }
        }
        Self::from_table(s, mu)
    }

    fn compute_moments(&mut self) {
        let mut m = 0.0;
        let mut m1 = 0.0;
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            let mu = self.mu_at(s).abs();
            m += w * mu;
            m1 += w * s * mu;
        }
        self.abs_mass = m;
        self.first_moment = m1;
    }

    pub fn window(&self) -> (f64, f64) {
        (self.tau1, self.tau2)
    }

    /// mu(s); linear interpolation for tabulated weights.
    pub fn mu_at(&self, s: f64) -> f64 {
        match &self.shape {
            MuShape::Constant(c) => *c,
            MuShape::Tabulated { s: xs, mu } => {
                if s <= xs[0] {
                    return mu[0];
                }
                if s >= *xs.last().unwrap() {
                    return *mu.last().unwrap();
                }
                let i = xs.partition_point(|v| *v <= s) - 1;
                let f = (s - xs[i]) / (xs[i + 1] - xs[i]);
                mu[i] + f * (mu[i + 1] - mu[i])
            }
        }
    }

    /// `integral |mu|` over the window.
    pub fn abs_mass(&self) -> f64 {
        self.abs_mass
    }

    /// `integral s |mu(s)| ds` over the window.
    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    /// The frictional margin `mu_damp - integral |mu|`; positive is the
    /// regime where decay is guaranteed.
    pub fn stability_margin(&self, mu_damp: f64) -> f64 {
        mu_damp - self.abs_mass
    }

    pub fn is_off(&self) -> bool {
        self.abs_mass == 0.0
    }

    /// The delayed forcing field `integral mu(s) u_t(., t - s) ds`.
    pub fn delay_integral(
        &self,
        hist: &VelocityHistory,
        t: f64,
    ) -> Result<Vec<f64>, DelayError> {
        let n = hist.field_len();
        let mut out = vec![0.0; n];
        if self.is_off() {
            return Ok(out);
        }
        let mut z = vec![0.0; n];
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            let mu = self.mu_at(s);
            if mu == 0.0 {
                continue;
            }
            hist.sample_into(t - s, &mut z)?;
            let c = w * mu;
            for (o, zi) in out.iter_mut().zip(&z) {
                *o += c * zi;
            }
        }
        Ok(out)
    }

    /// Generic quadratic z-moment
    /// `integral_0^1 integral_tau1^tau2 W(k,s) ||z(., k, s, t)||^2 dk ds`
    /// with `W` assembled from the flags below. All the delayed energy
    /// functionals are instances of this.
    pub fn z_square_moment(
        &self,
        hist: &VelocityHistory,
        t: f64,
        h_space: f64,
        weight: ZWeight,
    ) -> Result<f64, DelayError> {
        if self.is_off() {
            return Ok(0.0);
        }
        let (knodes, kweights) = k_rule();
        let mut z = vec![0.0; hist.field_len()];
        let mut acc = 0.0;
        for (&s, &ws) in self.nodes.iter().zip(&self.weights) {
            let mu = self.mu_at(s);
            let mu = if weight.abs_mu { mu.abs() } else { mu };
            if mu == 0.0 {
                continue;
            }
            let s_fac = if weight.s_factor { s } else { 1.0 };
            for (&k, &wk) in knodes.iter().zip(kweights) {
                hist.sample_into(t - k * s, &mut z)?;
                let norm: f64 = h_space * z.iter().map(|v| v * v).sum::<f64>();
                let e_fac = if weight.exp_sk { (-s * k).exp() } else { 1.0 };
                acc += ws * wk * mu * s_fac * e_fac * norm;
            }
        }
        Ok(acc)
    }

    /// The energy's delayed store `1/2 integral s |mu| z^2` (optionally
    /// carrying the `e^{-sk}` taper).
    pub fn delay_energy(
        &self,
        hist: &VelocityHistory,
        t: f64,
        h_space: f64,
        weighted: bool,
    ) -> Result<f64, DelayError> {
        Ok(0.5
            * self.z_square_moment(
                hist,
                t,
                h_space,
                ZWeight {
                    s_factor: true,
                    abs_mu: true,
                    exp_sk: weighted,
                },
            )?)
    }
}

/// Weight selection for [`DelayKernel::z_square_moment`].
#[derive(Debug, Clone, Copy)]
pub struct ZWeight {
    /// Multiply by s.
    pub s_factor: bool,
    /// Use |mu(s)| rather than the signed weight.
    pub abs_mu: bool,
    /// Multiply by e^{-sk}.
    pub exp_sk: bool,
}

/// Ring buffer of velocity snapshots on the step grid plus the prehistory
/// function for queries at t <= 0. Lookups interpolate linearly in time;
/// queries up to one step past the newest snapshot extrapolate from the
/// last two entries.
pub struct VelocityHistory {
    dt: f64,
    xs: Vec<f64>,
    prehistory: SpaceTimeFn,
    entries: std::collections::VecDeque<Vec<f64>>,
    /// time of entries.back()
    t_newest: f64,
    capacity: usize,
}

impl std::fmt::Debug for VelocityHistory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityHistory")
            .field("dt", &self.dt)
            .field("entries", &self.entries.len())
            .field("t_newest", &self.t_newest)
            .finish()
    }
}

impl VelocityHistory {
    pub fn new(dt: f64, tau2: f64, xs: Vec<f64>, prehistory: SpaceTimeFn) -> Self {
        assert!(dt > 0.0);
        let capacity = (tau2.max(0.0) / dt).ceil() as usize + 3;
        Self {
            dt,
            xs,
            prehistory,
            entries: std::collections::VecDeque::with_capacity(capacity),
            t_newest: 0.0,
            capacity,
        }
    }

    pub fn field_len(&self) -> usize {
        self.xs.len()
    }

    pub fn newest_time(&self) -> f64 {
        self.t_newest
    }

    /// Append the snapshot at `t`; `t` must advance by one step.
    pub fn push(&mut self, t: f64, field: Vec<f64>) {
        debug_assert_eq!(field.len(), self.xs.len());
        if !self.entries.is_empty() {
            debug_assert!((t - self.t_newest - self.dt).abs() < 1e-9 * (1.0 + t.abs()));
        }
        self.entries.push_back(field);
        self.t_newest = t;
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    fn t_oldest(&self) -> f64 {
        self.t_newest - (self.entries.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Interpolated velocity at `t_query`, written into `out`.
    ///
    /// Queries at t <= 0 evaluate the prehistory phi(x, -t); queries in
    /// (t_newest, t_newest + dt] extrapolate.
    pub fn sample_into(&self, t_query: f64, out: &mut [f64]) -> Result<(), DelayError> {
        debug_assert_eq!(out.len(), self.xs.len());
        if t_query <= 0.0 {
            let r = -t_query;
            for (o, &x) in out.iter_mut().zip(&self.xs) {
                *o = (self.prehistory)(x, r);
            }
            return Ok(());
        }
        let slack = 1e-9 * (1.0 + t_query.abs());
        let t_old = self.t_oldest();
        if self.entries.is_empty() || t_query < t_old - slack {
            return Err(DelayError::WindowExceeded {
                t_query,
                t_lo: t_old,
                t_hi: self.t_newest,
            });
        }
        if t_query > self.t_newest + self.dt + slack {
            return Err(DelayError::WindowExceeded {
                t_query,
                t_lo: t_old,
                t_hi: self.t_newest,
            });
        }
        if self.entries.len() == 1 {
            out.copy_from_slice(&self.entries[0]);
            return Ok(());
        }
        let pos = (t_query - t_old) / self.dt;
        let last = self.entries.len() - 1;
        // clamp so queries past the newest entry extrapolate from the
        // final pair (f may exceed 1 there)
        let i = (pos.floor().max(0.0) as usize).min(last - 1);
        let f = pos - i as f64;
        let lo = &self.entries[i];
        let hi = &self.entries[i + 1];
        for (j, o) in out.iter_mut().enumerate() {
            *o = lo[j] + f * (hi[j] - lo[j]);
        }
        Ok(())
    }

    /// Allocating variant of [`Self::sample_into`].
    pub fn sample(&self, t_query: f64) -> Result<Vec<f64>, DelayError> {
        let mut out = vec![0.0; self.xs.len()];
        self.sample_into(t_query, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize) -> Vec<f64> {
        let h = 1.0 / (n + 1) as f64;
        (1..=n).map(|j| j as f64 * h).collect()
    }

    fn zero_prehistory() -> SpaceTimeFn {
        Arc::new(|_, _| 0.0)
    }

    #[test]
    fn prehistory_lookup_and_interpolation() {
        let n = 8;
        let mut hist = VelocityHistory::new(0.1, 1.0, xs(n), Arc::new(|_, _| 1.0));
        let ones = hist.sample(-0.3).unwrap();
        assert!(ones.iter().all(|v| (*v - 1.0).abs() < 1e-15));

        hist.push(0.0, vec![0.0; n]);
        let w: Vec<f64> = (0..n).map(|j| j as f64).collect();
        hist.push(0.1, w.clone());
        let mid = hist.sample(0.05).unwrap();
        for (m, wj) in mid.iter().zip(&w) {
            assert!((m - 0.5 * wj).abs() < 1e-12);
        }
    }

    #[test]
    fn window_violations_are_reported() {
        let n = 4;
        let mut hist = VelocityHistory::new(0.1, 0.5, xs(n), zero_prehistory());
        for k in 0..40 {
            hist.push(k as f64 * 0.1, vec![k as f64; n]);
        }
        // t_newest = 3.9, capacity covers ~0.8 back
        assert!(hist.sample(3.9).is_ok());
        assert!(hist.sample(4.0).is_ok()); // one-step extrapolation
        assert!(hist.sample(4.2).is_err());
        assert!(hist.sample(3.9 - 0.5 - 0.2 - 0.1).is_err());
    }

    #[test]
    fn extrapolation_is_linear_from_last_pair() {
        let n = 3;
        let mut hist = VelocityHistory::new(0.1, 1.0, xs(n), zero_prehistory());
        hist.push(0.0, vec![0.0; n]);
        hist.push(0.1, vec![1.0; n]);
        hist.push(0.2, vec![2.0; n]);
        let v = hist.sample(0.25).unwrap();
        assert!(v.iter().all(|x| (x - 2.5).abs() < 1e-12));
    }

    #[test]
    fn constant_weight_constant_velocity_is_exact() {
        let n = 6;
        let k = DelayKernel::constant(0.7, 0.25, 1.0);
        let mut hist = VelocityHistory::new(0.05, 1.0, xs(n), Arc::new(|_, _| 3.0));
        for i in 0..=40 {
            hist.push(i as f64 * 0.05, vec![3.0; n]);
        }
        let f = k.delay_integral(&hist, 2.0).unwrap();
        let exact = 3.0 * 0.7 * 0.75;
        for v in f {
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_scalar_mode_hand_integral() {
        // u_t(x, t) = t, mu = 1 on [0,1], t = 2: integral (2 - s) ds = 1.5
        let n = 5;
        let k = DelayKernel::constant(1.0, 0.0, 1.0);
        let dt = 0.01;
        let mut hist = VelocityHistory::new(dt, 1.0, xs(n), Arc::new(|_, _| 0.0));
        for i in 0..=200 {
            let t = i as f64 * dt;
            hist.push(t, vec![t; n]);
        }
        let f = k.delay_integral(&hist, 2.0).unwrap();
        for v in f {
            assert!((v - 1.5).abs() < 1e-10, "got {v}");
        }
    }

    #[test]
    fn zero_weight_gives_zero_field() {
        let n = 4;
        let k = DelayKernel::constant(0.0, 0.0, 1.0);
        let mut hist = VelocityHistory::new(0.1, 1.0, xs(n), zero_prehistory());
        for i in 0..=20 {
            hist.push(i as f64 * 0.1, vec![5.0; n]);
        }
        assert!(k.delay_integral(&hist, 2.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn delay_integral_is_linear_in_the_history() {
        let n = 8;
        let k = DelayKernel::constant(0.7, 0.1, 0.8);
        let dt = 0.02;
        let build = |scale: f64| {
            let mut h = VelocityHistory::new(dt, 0.8, xs(n), Arc::new(move |x, r| scale * x * r));
            for i in 0..=100 {
                let t = i as f64 * dt;
                let v: Vec<f64> = xs(n).iter().map(|x| scale * x * (3.0 * t).sin()).collect();
                h.push(t, v);
            }
            h
        };
        let f1 = k.delay_integral(&build(1.0), 2.0).unwrap();
        let f3 = k.delay_integral(&build(3.5), 2.0).unwrap();
        for (a, b) in f1.iter().zip(&f3) {
            assert!((3.5 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn stability_margin_examples() {
        assert!((DelayKernel::constant(0.5, 0.0, 1.0).stability_margin(1.0) - 0.5).abs() < 1e-12);
        assert!((DelayKernel::constant(0.0, 0.0, 1.0).stability_margin(1.0) - 1.0).abs() < 1e-15);
        assert!((DelayKernel::constant(2.0, 0.0, 1.0).stability_margin(1.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_weight_masses() {
        // mu(s) = s on [0,1]: mass 1/2, first moment 1/3
        let s: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let mu = s.clone();
        let k = DelayKernel::from_table(s, mu).unwrap();
        assert!((k.abs_mass() - 0.5).abs() < 1e-4);
        assert!((k.first_moment() - 1.0 / 3.0).abs() < 1e-4);
        assert!(DelayKernel::from_table(vec![0.0], vec![1.0]).is_err());
        assert!(DelayKernel::from_table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    fn unit_norm_history(n: usize, dt: f64, tau2: f64) -> VelocityHistory {
        // constant-in-time field with unit discrete L2 norm
        let h = 1.0 / (n + 1) as f64;
        let c = 1.0 / (h * n as f64).sqrt();
        let mut hist = VelocityHistory::new(dt, tau2, xs(n), Arc::new(move |_, _| c));
        let steps = (3.0 / dt) as usize;
        for i in 0..=steps {
            hist.push(i as f64 * dt, vec![c; n]);
        }
        hist
    }

    #[test]
    fn delay_energy_closed_forms() {
        let n = 64;
        let h = 1.0 / (n + 1) as f64;
        let k = DelayKernel::constant(1.0, 0.0, 1.0);
        let hist = unit_norm_history(n, 0.05, 1.0);
        let t = hist.newest_time(); // the ring only covers [t - tau2, t]
        // unweighted: 1/2 integral s ds = 0.25
        let e = k.delay_energy(&hist, t, h, false).unwrap();
        assert!((e - 0.25).abs() < 1e-12, "unweighted {e}");
        // weighted: 1/2 integral (1 - e^{-s}) ds = 1/(2e)
        let ew = k.delay_energy(&hist, t, h, true).unwrap();
        assert!((ew - 0.5 / std::f64::consts::E).abs() < 1e-12, "weighted {ew}");
        assert!(ew <= e);
        // zero velocities
        let mut quiet = VelocityHistory::new(0.05, 1.0, xs(n), zero_prehistory());
        for i in 0..=60 {
            quiet.push(i as f64 * 0.05, vec![0.0; n]);
        }
        assert_eq!(k.delay_energy(&quiet, 3.0, h, false).unwrap(), 0.0);
    }

    #[test]
    fn z_lookup_tracks_smooth_motion_to_second_order() {
        let n = 32;
        let tau2 = 1.0;
        let k = DelayKernel::constant(1.0, 0.0, tau2);
        let mut errs = Vec::new();
        for &dt in &[0.02, 0.01, 0.005] {
            let xsv = xs(n);
            let mut hist = VelocityHistory::new(
                dt,
                tau2,
                xsv.clone(),
                Arc::new(|x: f64, r: f64| (std::f64::consts::PI * x).sin() * (-r).cos()),
            );
            let steps = (2.0 / dt).round() as usize;
            for i in 0..=steps {
                let t = i as f64 * dt;
                let v: Vec<f64> = xsv
                    .iter()
                    .map(|x| (std::f64::consts::PI * x).sin() * t.cos())
                    .collect();
                hist.push(t, v);
            }
            let t = 2.0;
            let mut worst = 0.0f64;
            for &s in k.nodes.iter() {
                let z = hist.sample(t - s).unwrap();
                for (j, x) in xsv.iter().enumerate() {
                    let exact = (std::f64::consts::PI * x).sin() * (t - s).cos();
                    worst = worst.max((z[j] - exact).abs());
                }
            }
            errs.push(worst);
        }
        // halving dt should quarter the error; C dt^2 with C ~ 1/8 here
        assert!(errs[1] < 0.3 * errs[0], "{errs:?}");
        assert!(errs[2] < 0.3 * errs[1], "{errs:?}");
        assert!(errs[0] < 0.2 * 0.02 * 0.02, "{errs:?}");
    }
}
