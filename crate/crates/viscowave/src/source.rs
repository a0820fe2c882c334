//! Coupled power-type sources and their potential.
//!
//! ```text
//! f1(u,v) = a |u+v|^(p-1) (u+v) + b |u|^((p-3)/2) |v|^((p+1)/2) u
//! f2(u,v) = a |u+v|^(p-1) (u+v) + b |v|^((p-3)/2) |u|^((p+1)/2) v
//! F(u,v)  = (a |u+v|^(p+1) + 2 b |uv|^((p+1)/2)) / (p+1)
//! ```
//!
//! These satisfy `u f1 + v f2 = (p+1) F` and `f1 = dF/du`, `f2 = dF/dv`;
//! both identities are checked numerically by [`SourceParams::euler_residual`]
//! and [`SourceParams::gradient_residual`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SourceParams {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    /// When false the sources evaluate to zero (decoupled waves).
    pub enabled: bool,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            p: 3.0,
            enabled: true,
        }
    }
}

impl SourceParams {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn f1(&self, u: f64, v: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let s = u + v;
        let lead = self.a * s.abs().powf(self.p - 1.0) * s;
        // the monomial factor multiplies u, so the whole term vanishes with u
        let cross = if u == 0.0 || v == 0.0 {
            0.0
        } else {
            self.b * u.abs().powf(0.5 * (self.p - 3.0)) * v.abs().powf(0.5 * (self.p + 1.0)) * u
        };
        lead + cross
    }

    pub fn f2(&self, u: f64, v: f64) -> f64 {
        self.f1(v, u)
    }

    /// The potential F(u, v) >= 0.
    pub fn potential(&self, u: f64, v: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let s = u + v;
        let q = 0.5 * (self.p + 1.0);
        (self.a * s.abs().powf(self.p + 1.0) + 2.0 * self.b * (u * v).abs().powf(q))
            / (self.p + 1.0)
    }

    /// Pointwise sources over fields of equal length.
    pub fn field(&self, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SourceError> {
        if u.len() != v.len() {
            return Err(SourceError::LengthMismatch {
                left: u.len(),
                right: v.len(),
            });
        }
        let fu = u.iter().zip(v).map(|(&x, &y)| self.f1(x, y)).collect();
        let fv = u.iter().zip(v).map(|(&x, &y)| self.f2(x, y)).collect();
        Ok((fu, fv))
    }

    /// Max normalized residual of `u f1 + v f2 - (p+1) F` over the samples.
    pub fn euler_residual(&self, samples: &[(f64, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(u, v)| {
                let lhs = u * self.f1(u, v) + v * self.f2(u, v);
                let rhs = (self.p + 1.0) * self.potential(u, v);
                (lhs - rhs).abs() / (1.0 + rhs.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Max relative mismatch between (f1, f2) and central differences of F.
    ///
    /// Samples within `margin` of the non-smooth axes u = 0 or v = 0 are
    /// skipped; the second value reports how many were excluded.
    pub fn gradient_residual(&self, samples: &[(f64, f64)], margin: f64) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut excluded = 0;
        for &(u, v) in samples {
            if u.abs() < margin || v.abs() < margin {
                excluded += 1;
                continue;
            }
            let scale = u.abs().max(v.abs()).max(1.0);
            let step = 1e-6 * scale;
            let du = (self.potential(u + step, v) - self.potential(u - step, v)) / (2.0 * step);
            let dv = (self.potential(u, v + step) - self.potential(u, v - step)) / (2.0 * step);
            let f1 = self.f1(u, v);
            let f2 = self.f2(u, v);
            let r1 = (du - f1).abs() / (1.0 + f1.abs());
            let r2 = (dv - f2).abs() / (1.0 + f2.abs());
            worst = worst.max(r1).max(r2);
        }
        (worst, excluded)
    }

    /// Numerical sandwich constants (c0, c1) with
    /// `c0 (|u|^{p+1} + |v|^{p+1}) <= F <= c1 (...)`, computed on the unit
    /// circle (F is homogeneous of degree p+1). A 4096-angle sweep locates
    /// the extrema; golden-section refinement sharpens them.
    pub fn sandwich_constants(&self) -> (f64, f64) {
        let ratio = |th: f64| {
            let (u, v) = (th.cos(), th.sin());
            let denom = u.abs().powf(self.p + 1.0) + v.abs().powf(self.p + 1.0);
            self.potential(u, v) / denom
        };
        let n = 4096;
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut arg_min = 0.0;
        let mut arg_max = 0.0;
        let mut c0 = f64::INFINITY;
        let mut c1 = 0.0f64;
        for k in 0..n {
            let th = (k as f64 + 0.5) * step;
            let r = ratio(th);
            if r < c0 {
                c0 = r;
                arg_min = th;
            }
            if r > c1 {
                c1 = r;
                arg_max = th;
            }
        }
        c0 = c0.min(golden_section(&ratio, arg_min - step, arg_min + step, true));
        c1 = c1.max(golden_section(&ratio, arg_max - step, arg_max + step, false));
        (c0, c1)
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, minimize: bool) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let sign = if minimize { 1.0 } else { -1.0 };
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = sign * f(a);
    let mut fb = sign * f(b);
    for _ in 0..120 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = sign * f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = sign * f(b);
        }
    }
    sign * fa.min(fb)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceError {
    LengthMismatch { left: usize, right: usize },
}

impl std::fmt::Display for SourceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceError::LengthMismatch { left, right } => {
                write!(f, "source fields differ in length: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for SourceError {}
