//! Relaxation kernels g(t) with their decay-rate functions, and the
//! hereditary machinery built on them: the convolution
//! `integral_0^t g(t-s) L u(s) ds` and the quadratic history functional
//! `(g o u)(t) = integral_0^t g(t-s) a(u(t)-u(s), u(t)-u(s)) ds`.
//!
//! Four closed-form families are supported, each paired with the rate
//! function that satisfies `g'(t) <= -zeta(t) g(t)`:
//!
//! ```text
//! exp            g = a e^{-bt}              zeta = b
//! poly           g = a (1+t)^{-nu}          zeta = nu / (1+t)
//! stretched_exp  g = a e^{-(1+t)^nu}        zeta = nu (1+t)^{min(0, nu-1)}
//! log_power      g = a e^{-(ln(1+t))^nu}    zeta = nu (ln(1+t))^{nu-1} / (1+t)
//! ```
//!
//! For `log_power` the rate function rises from zero before decaying; its
//! peak sits at `t = e^{nu-1} - 1` (see [`RelaxationKernel::zeta_peak_time`]).

use crate::operator::DiscreteOperator;
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RelaxationKernel {
    /// No memory at all; the wave is purely elastic.
    Zero,
    Exp { a: f64, b: f64 },
    Poly { a: f64, nu: f64 },
    StretchedExp { a: f64, nu: f64 },
    LogPower { a: f64, nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    NegativeTime(f64),
    ZeroFamilyHasNoRate,
    /// `1 - integral g` would be -infinity; violates the tail-mass assumption.
    DivergentTail { nu: f64 },
}

impl std::fmt::Display for KernelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelError::NegativeTime(t) => write!(f, "kernel evaluated at negative time {t}"),
            KernelError::ZeroFamilyHasNoRate => write!(f, "zero kernel has no decay-rate function"),
            KernelError::DivergentTail { nu } => {
                write!(f, "tail mass infinite for nu = {nu}; violates the tail-mass assumption")
            }
        }
    }
}

impl std::error::Error for KernelError {}

impl RelaxationKernel {
    pub fn is_zero(&self) -> bool {
        matches!(self, RelaxationKernel::Zero)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            RelaxationKernel::Zero => "zero",
            RelaxationKernel::Exp { .. } => "exp",
            RelaxationKernel::Poly { .. } => "poly",
            RelaxationKernel::StretchedExp { .. } => "stretched_exp",
            RelaxationKernel::LogPower { .. } => "log_power",
        }
    }

    /// g(0); positive for every non-zero family.
    pub fn at_origin(&self) -> f64 {
        self.eval(0.0)
    }

    /// Evaluate g(t), t >= 0.
    pub fn eval(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "kernel evaluated at negative time {t}");
        match *self {
            RelaxationKernel::Zero => 0.0,
            RelaxationKernel::Exp { a, b } => a * (-b * t).exp(),
            RelaxationKernel::Poly { a, nu } => a * (1.0 + t).powf(-nu),
            RelaxationKernel::StretchedExp { a, nu } => a * (-(1.0 + t).powf(nu)).exp(),
            RelaxationKernel::LogPower { a, nu } => a * (-(1.0 + t).ln().powf(nu)).exp(),
        }
    }

    /// Analytic g'(t).
    pub fn derivative(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "kernel derivative at negative time {t}");
        match *self {
            RelaxationKernel::Zero => 0.0,
            RelaxationKernel::Exp { a, b } => -b * a * (-b * t).exp(),
            RelaxationKernel::Poly { a, nu } => -nu * a * (1.0 + t).powf(-nu - 1.0),
            RelaxationKernel::StretchedExp { nu, .. } => {
                -nu * (1.0 + t).powf(nu - 1.0) * self.eval(t)
            }
            RelaxationKernel::LogPower { nu, .. } => {
                let w = (1.0 + t).ln();
                if w == 0.0 {
                    0.0
                } else {
                    -nu * w.powf(nu - 1.0) / (1.0 + t) * self.eval(t)
                }
            }
        }
    }

    /// The decay-rate function zeta(t) paired with the family.
    pub fn zeta(&self, t: f64) -> Result<f64, KernelError> {
        if t < 0.0 {
            return Err(KernelError::NegativeTime(t));
        }
        match *self {
            RelaxationKernel::Zero => Err(KernelError::ZeroFamilyHasNoRate),
            RelaxationKernel::Exp { b, .. } => Ok(b),
            RelaxationKernel::Poly { nu, .. } => Ok(nu / (1.0 + t)),
            RelaxationKernel::StretchedExp { nu, .. } => {
                Ok(nu * (1.0 + t).powf((nu - 1.0).min(0.0)))
            }
            RelaxationKernel::LogPower { nu, .. } => {
                let w = (1.0 + t).ln();
                if w == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(nu * w.powf(nu - 1.0) / (1.0 + t))
                }
            }
        }
    }

    /// Where zeta stops rising. Zero for the monotone families; the
    /// log_power rate climbs until `e^{nu-1} - 1`.
    pub fn zeta_peak_time(&self) -> f64 {
        match *self {
            RelaxationKernel::LogPower { nu, .. } if nu > 1.0 => (nu - 1.0).exp() - 1.0,
            _ => 0.0,
        }
    }

    /// Total kernel mass `integral_0^inf g`.
    ///
    /// Closed form for exp and poly; adaptive quadrature (relative error
    /// <= 1e-8) for the stretched-exponential and log-power families.
    pub fn tail_mass(&self) -> Result<f64, KernelError> {
        match *self {
            RelaxationKernel::Zero => Ok(0.0),
            RelaxationKernel::Exp { a, b } => Ok(a / b),
            RelaxationKernel::Poly { a, nu } => {
                if nu <= 1.0 {
                    Err(KernelError::DivergentTail { nu })
                } else {
                    Ok(a / (nu - 1.0))
                }
            }
            RelaxationKernel::StretchedExp { a, nu } => {
                // substitute w = 1 + t
                let w_max = (700.0f64).powf(1.0 / nu).max(2.0);
                Ok(a * adaptive_simpson(&|w: f64| (-w.powf(nu)).exp(), 1.0, w_max, 1e-9))
            }
            RelaxationKernel::LogPower { a, nu } => {
                if nu <= 1.0 {
                    return Err(KernelError::DivergentTail { nu });
                }
                // substitute w = ln(1+t): integral of e^{w - w^nu}
                let w_max = log_power_cutoff(nu);
                Ok(a * adaptive_simpson(&|w: f64| (w - w.powf(nu)).exp(), 0.0, w_max, 1e-9))
            }
        }
    }

    /// Retained stiffness fraction `l = 1 - integral_0^inf g`.
    pub fn retained_fraction(&self) -> Result<f64, KernelError> {
        Ok(1.0 - self.tail_mass()?)
    }

    /// Running integral `integral_0^t g`.
    pub fn integral_to(&self, t: f64) -> f64 {
        assert!(t >= 0.0);
        match *self {
            RelaxationKernel::Zero => 0.0,
            RelaxationKernel::Exp { a, b } => a / b * (1.0 - (-b * t).exp()),
            RelaxationKernel::Poly { a, nu } => {
                if (nu - 1.0).abs() < 1e-12 {
                    a * (1.0 + t).ln()
                } else {
                    a * (1.0 - (1.0 + t).powf(1.0 - nu)) / (nu - 1.0)
                }
            }
            RelaxationKernel::StretchedExp { a, nu } => {
                if t == 0.0 {
                    0.0
                } else {
                    a * adaptive_simpson(&|w: f64| (-w.powf(nu)).exp(), 1.0, 1.0 + t, 1e-10)
                }
            }
            RelaxationKernel::LogPower { a, nu } => {
                if t == 0.0 {
                    0.0
                } else {
                    let w_hi = (1.0 + t).ln();
                    a * adaptive_simpson(&|w: f64| (w - w.powf(nu)).exp(), 0.0, w_hi, 1e-10)
                }
            }
        }
    }

    /// Time past which g stays below `floor` (for convolution truncation).
    pub fn support_horizon(&self, floor: f64) -> f64 {
        if floor <= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            RelaxationKernel::Zero => 0.0,
            RelaxationKernel::Exp { a, b } => {
                if a <= floor {
                    0.0
                } else {
                    (a / floor).ln() / b
                }
            }
            RelaxationKernel::Poly { a, nu } => {
                if a <= floor {
                    0.0
                } else {
                    (a / floor).powf(1.0 / nu) - 1.0
                }
            }
            RelaxationKernel::StretchedExp { a, nu } => {
                if a <= floor {
                    0.0
                } else {
                    (a / floor).ln().powf(1.0 / nu) - 1.0
                }
            }
            RelaxationKernel::LogPower { a, nu } => {
                if a <= floor {
                    0.0
                } else {
                    ((a / floor).ln().powf(1.0 / nu)).exp() - 1.0
                }
            }
        }
    }
}

fn log_power_cutoff(nu: f64) -> f64 {
    // w - w^nu < -750 terminates the integrand; bisect for the crossing
    let f = |w: f64| w - w.powf(nu) + 750.0;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq)]
pub enum HistoryError {
    /// Requested time is not on the stored step grid.
    Gap { t: f64, covered_to: f64 },
}

impl std::fmt::Display for HistoryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HistoryError::Gap { t, covered_to } => {
                write!(f, "history gap: t = {t} not covered (stored through {covered_to})")
            }
        }
    }
}

impl std::error::Error for HistoryError {}

/// Full time history of one displacement field on the step grid, with the
/// operator image cached at every snapshot.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    dt: f64,
    snapshots: Vec<Vec<f64>>,
    lu: Vec<Vec<f64>>,
}

impl FieldHistory {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0);
        Self {
            dt,
            snapshots: Vec::new(),
            lu: Vec::new(),
        }
    }

    pub fn push(&mut self, field: Vec<f64>, op: &DiscreteOperator) {
        let mut lu = vec![0.0; field.len()];
        op.apply_into(&field, &mut lu);
        self.snapshots.push(field);
        self.lu.push(lu);
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn snapshot(&self, k: usize) -> &[f64] {
        &self.snapshots[k]
    }

    fn step_index(&self, t: f64) -> Result<usize, HistoryError> {
        let covered_to = (self.snapshots.len().saturating_sub(1)) as f64 * self.dt;
        let k = (t / self.dt).round();
        if k < 0.0 || (t - k * self.dt).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(HistoryError::Gap { t, covered_to });
        }
        let k = k as usize;
        if k >= self.snapshots.len() {
            return Err(HistoryError::Gap { t, covered_to });
        }
        Ok(k)
    }

    /// Trapezoidal convolution `integral_0^t g(t-s) L u(s) ds`, truncated
    /// where `g(t-s) < g_floor`.
    pub fn memory_term(
        &self,
        kernel: &RelaxationKernel,
        g_floor: f64,
        t: f64,
    ) -> Result<Vec<f64>, HistoryError> {
        let it = self.step_index(t)?;
        let n = self.snapshots.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        if kernel.is_zero() || it == 0 {
            return Ok(out);
        }
        let horizon = kernel.support_horizon(g_floor);
        let k_start = if horizon.is_finite() && t - horizon > 0.0 {
            ((t - horizon) / self.dt).ceil() as usize
        } else {
            0
        };
        for k in k_start..=it {
            let w = if k == k_start || k == it { 0.5 } else { 1.0 };
            // clamp tiny negative lags from time-stamp rounding
            let g = kernel.eval((t - k as f64 * self.dt).max(0.0));
            let c = w * self.dt * g;
            for (o, l) in out.iter_mut().zip(&self.lu[k]) {
                *o += c * l;
            }
        }
        Ok(out)
    }

    /// The drift convolution `integral_0^t g(t-s) (u(t) - u(s)) ds`.
    pub fn displacement_drift(
        &self,
        kernel: &RelaxationKernel,
        g_floor: f64,
        t: f64,
    ) -> Result<Vec<f64>, HistoryError> {
        let it = self.step_index(t)?;
        let n = self.snapshots.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        if kernel.is_zero() || it == 0 {
            return Ok(out);
        }
        let horizon = kernel.support_horizon(g_floor);
        let k_start = if horizon.is_finite() && t - horizon > 0.0 {
            ((t - horizon) / self.dt).ceil() as usize
        } else {
            0
        };
        let current = &self.snapshots[it];
        for k in k_start..it {
            let w = if k == k_start { 0.5 } else { 1.0 };
            let g = kernel.eval((t - k as f64 * self.dt).max(0.0));
            let c = w * self.dt * g;
            let past = &self.snapshots[k];
            for j in 0..n {
                out[j] += c * (current[j] - past[j]);
            }
        }
        Ok(out)
    }

    /// The quadratic history functional
    /// `(g o u)(t) = integral_0^t g(t-s) a(u(t)-u(s), u(t)-u(s)) ds`.
    pub fn g_circ(
        &self,
        kernel: &RelaxationKernel,
        op: &DiscreteOperator,
        g_floor: f64,
        t: f64,
    ) -> Result<f64, HistoryError> {
        let it = self.step_index(t)?;
        if kernel.is_zero() || it == 0 {
            return Ok(0.0);
        }
        let horizon = kernel.support_horizon(g_floor);
        let k_start = if horizon.is_finite() && t - horizon > 0.0 {
            ((t - horizon) / self.dt).ceil() as usize
        } else {
            0
        };
        let current = &self.snapshots[it];
        let mut acc = 0.0;
        // the s = t endpoint contributes zero; loop stops one short
        for k in k_start..it {
            let w = if k == k_start { 0.5 } else { 1.0 };
            let g = kernel.eval((t - k as f64 * self.dt).max(0.0));
            acc += w * self.dt * g * op.form_of_difference(current, &self.snapshots[k]);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridSpec;
    use crate::operator::CoefficientField;

    fn exp_kernel(a: f64, b: f64) -> RelaxationKernel {
        RelaxationKernel::Exp { a, b }
    }

    #[test]
    fn family_point_values() {
        assert_eq!(exp_kernel(0.5, 1.0).eval(0.0), 0.5);
        let poly = RelaxationKernel::Poly { a: 2.0, nu: 2.0 };
        assert!((poly.eval(1.0) - 0.5).abs() < 1e-15);
        let lp = RelaxationKernel::LogPower { a: 1.0, nu: 2.0 };
        assert_eq!(lp.eval(0.0), 1.0);
        let se = RelaxationKernel::StretchedExp { a: 1.0, nu: 1.0 };
        assert!((se.eval(2.0) - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rate_function_point_values() {
        assert_eq!(exp_kernel(0.5, 1.0).zeta(3.7).unwrap(), 1.0);
        let poly = RelaxationKernel::Poly { a: 2.0, nu: 2.0 };
        assert!((poly.zeta(1.0).unwrap() - 1.0).abs() < 1e-15);
        let se = RelaxationKernel::StretchedExp { a: 1.0, nu: 0.5 };
        assert!((se.zeta(3.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(
            RelaxationKernel::Zero.zeta(1.0),
            Err(KernelError::ZeroFamilyHasNoRate)
        ));
        assert!(matches!(
            exp_kernel(1.0, 1.0).zeta(-1.0),
            Err(KernelError::NegativeTime(_))
        ));
    }

    #[test]
    fn rate_inequality_holds_for_all_families() {
        let kernels = [
            exp_kernel(0.5, 1.0),
            RelaxationKernel::Poly { a: 0.5, nu: 2.0 },
            RelaxationKernel::StretchedExp { a: 1.0, nu: 0.5 },
            RelaxationKernel::StretchedExp { a: 1.0, nu: 2.0 },
            RelaxationKernel::LogPower { a: 0.5, nu: 2.0 },
        ];
        for k in kernels {
            for i in 0..=1024 {
                let t = 40.0 * i as f64 / 1024.0;
                let lhs = k.derivative(t) + k.zeta(t).unwrap() * k.eval(t);
                assert!(
                    lhs <= 1e-12 * (1.0 + k.eval(t)),
                    "violated at t = {t} for {k:?}: {lhs}"
                );
            }
        }
        // equality for the pure exponential
        let e = exp_kernel(0.5, 2.0);
        for i in 0..=100 {
            let t = i as f64 * 0.1;
            let lhs = e.derivative(t) + e.zeta(t).unwrap() * e.eval(t);
            assert!(lhs.abs() < 1e-14);
        }
    }

    #[test]
    fn tail_masses() {
        assert!((exp_kernel(0.5, 1.0).tail_mass().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(RelaxationKernel::Zero.tail_mass().unwrap(), 0.0);
        assert!((RelaxationKernel::Poly { a: 1.0, nu: 2.0 }.tail_mass().unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            RelaxationKernel::Poly { a: 1.0, nu: 0.5 }.tail_mass(),
            Err(KernelError::DivergentTail { .. })
        ));
        assert!(matches!(
            RelaxationKernel::LogPower { a: 1.0, nu: 1.0 }.tail_mass(),
            Err(KernelError::DivergentTail { .. })
        ));
        // stretched_exp nu=1 has closed form a/e
        let se = RelaxationKernel::StretchedExp { a: 1.0, nu: 1.0 };
        assert!((se.tail_mass().unwrap() - (-1.0f64).exp()).abs() < 1e-8);
        // log_power nu=2: a e^{1/4} sqrt(pi)/2 (1 + erf(1/2))
        let lp = RelaxationKernel::LogPower { a: 1.0, nu: 2.0 };
        let m = lp.tail_mass().unwrap();
        assert!((m - 1.7302344337037).abs() < 1e-7, "log_power mass {m}");
    }

    #[test]
    fn running_integral_consistency() {
        let kernels = [
            exp_kernel(0.25, 1.0),
            RelaxationKernel::Poly { a: 0.25, nu: 2.0 },
            RelaxationKernel::StretchedExp { a: 0.5, nu: 2.0 },
            RelaxationKernel::LogPower { a: 0.25, nu: 2.0 },
        ];
        for k in kernels {
            let direct = adaptive_simpson(&|s| k.eval(s), 0.0, 5.0, 1e-10);
            assert!(
                (k.integral_to(5.0) - direct).abs() < 1e-7 * (1.0 + direct),
                "{k:?}"
            );
            assert_eq!(k.integral_to(0.0), 0.0);
        }
    }

    #[test]
    fn support_horizon_brackets_the_floor() {
        let kernels = [
            exp_kernel(0.25, 1.0),
            RelaxationKernel::Poly { a: 0.25, nu: 2.0 },
            RelaxationKernel::StretchedExp { a: 0.5, nu: 2.0 },
            RelaxationKernel::LogPower { a: 0.25, nu: 2.0 },
        ];
        for k in kernels {
            let floor = 1e-10 * k.at_origin();
            let t = k.support_horizon(floor);
            assert!(k.eval(t) <= floor * (1.0 + 1e-9), "{k:?}");
            assert!(k.eval(0.9 * t) > floor, "{k:?}");
        }
    }

    fn grid_and_op(n: usize) -> (GridSpec, DiscreteOperator) {
        let grid = GridSpec {
            x_lo: 0.0,
            x_hi: 1.0,
            n_interior: n,
        };
        let op = DiscreteOperator::assemble(&grid, &CoefficientField::constant(1.0, n)).unwrap();
        (grid, op)
    }

    #[test]
    fn memory_term_of_constant_history_matches_closed_form() {
        let (grid, op) = grid_and_op(32);
        let dt = 1e-3;
        let u0: Vec<f64> = grid.nodes().iter().map(|x| (std::f64::consts::PI * x).sin()).collect();
        let lu0 = op.apply(&u0).unwrap();
        let mut hist = FieldHistory::new(dt);
        let steps = 1000;
        for _ in 0..=steps {
            hist.push(u0.clone(), &op);
        }
        let t = steps as f64 * dt;
        let k = exp_kernel(0.5, 1.0);
        let m = hist.memory_term(&k, 0.0, t).unwrap();
        let factor = 0.5 * (1.0 - (-t).exp());
        for (mi, li) in m.iter().zip(&lu0) {
            assert!((mi - factor * li).abs() < 5.0 * dt * dt * li.abs().max(1.0));
        }
    }

    #[test]
    fn memory_term_trivial_cases() {
        let (grid, op) = grid_and_op(16);
        let u0: Vec<f64> = grid.nodes().iter().map(|x| x * (1.0 - x)).collect();
        let mut hist = FieldHistory::new(0.01);
        hist.push(u0, &op);
        // t = 0: empty integral
        let m = hist.memory_term(&exp_kernel(1.0, 1.0), 0.0, 0.0).unwrap();
        assert!(m.iter().all(|v| *v == 0.0));
        // zero kernel
        let m = hist.memory_term(&RelaxationKernel::Zero, 0.0, 0.0).unwrap();
        assert!(m.iter().all(|v| *v == 0.0));
        // uncovered time
        assert!(hist.memory_term(&exp_kernel(1.0, 1.0), 0.0, 0.5).is_err());
    }

    #[test]
    fn memory_term_is_linear_in_history() {
        let (grid, op) = grid_and_op(24);
        let dt = 0.01;
        let mut h1 = FieldHistory::new(dt);
        let mut h2 = FieldHistory::new(dt);
        for k in 0..=50 {
            let u: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|x| (std::f64::consts::PI * x).sin() * (0.3 + 0.1 * k as f64))
                .collect();
            let scaled: Vec<f64> = u.iter().map(|v| 3.5 * v).collect();
            h1.push(u, &op);
            h2.push(scaled, &op);
        }
        let k = exp_kernel(0.5, 1.0);
        let m1 = h1.memory_term(&k, 0.0, 0.5).unwrap();
        let m2 = h2.memory_term(&k, 0.0, 0.5).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            assert!((3.5 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn g_circ_closed_form_for_linear_motion() {
        // u(s) = s w, exp kernel a=b=1, t=1: (g o u)(1) = a(w,w) (2 - 5/e)
        let (grid, op) = grid_and_op(64);
        let w: Vec<f64> = grid.nodes().iter().map(|x| (std::f64::consts::PI * x).sin()).collect();
        let dt = 5e-4;
        let steps = 2000;
        let mut hist = FieldHistory::new(dt);
        for k in 0..=steps {
            let s = k as f64 * dt;
            hist.push(w.iter().map(|v| s * v).collect(), &op);
        }
        let gc = hist
            .g_circ(&exp_kernel(1.0, 1.0), &op, 0.0, 1.0)
            .unwrap();
        let aww = op.quadratic_form(&w, &w).unwrap();
        let exact = aww * (2.0 - 5.0 * (-1.0f64).exp());
        assert!(
            (gc - exact).abs() < 1e-4 * exact,
            "g_circ = {gc}, exact = {exact}"
        );
    }

    #[test]
    fn g_circ_vanishes_for_frozen_history_and_zero_kernel() {
        let (grid, op) = grid_and_op(16);
        let u: Vec<f64> = grid.nodes().iter().map(|x| x * (1.0 - x)).collect();
        let mut hist = FieldHistory::new(0.01);
        for _ in 0..=20 {
            hist.push(u.clone(), &op);
        }
        assert_eq!(hist.g_circ(&exp_kernel(1.0, 1.0), &op, 0.0, 0.2).unwrap(), 0.0);
        assert_eq!(hist.g_circ(&RelaxationKernel::Zero, &op, 0.0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn g_circ_is_nonnegative_for_wiggly_history() {
        let (grid, op) = grid_and_op(24);
        let mut hist = FieldHistory::new(0.01);
        for k in 0..=300 {
            let s = k as f64 * 0.01;
            let u: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|x| (3.0 * s).cos() * (std::f64::consts::PI * x).sin()
                    + 0.3 * (7.0 * s).sin() * (2.0 * std::f64::consts::PI * x).sin())
                .collect();
            hist.push(u, &op);
        }
        for k in [exp_kernel(0.5, 1.0), RelaxationKernel::Poly { a: 0.5, nu: 2.0 }] {
            let gc = hist.g_circ(&k, &op, 0.0, 3.0).unwrap();
            assert!(gc >= -1e-12, "{k:?}: {gc}");
        }
    }

    #[test]
    fn truncation_floor_is_consistent() {
        let (grid, op) = grid_and_op(16);
        let dt = 0.01;
        let mut hist = FieldHistory::new(dt);
        let mut max_lu: f64 = 0.0;
        for k in 0..=4000 {
            let s = k as f64 * dt;
            let u: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|x| (1.0 + (2.0 * s).sin()) * x * (1.0 - x))
                .collect();
            let lu = op.apply(&u).unwrap();
            max_lu = max_lu.max(lu.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            hist.push(u, &op);
        }
        let t = 40.0;
        let k = exp_kernel(0.5, 1.0);
        let floor = 1e-10;
        let full = hist.memory_term(&k, 0.5 * floor, t).unwrap();
        let truncated = hist.memory_term(&k, floor, t).unwrap();
        let diff = full
            .iter()
            .zip(&truncated)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff < 10.0 * floor * max_lu * t, "diff {diff}");
    }
}
