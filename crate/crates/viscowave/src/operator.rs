//! Variable-coefficient elliptic operator `L u = -(a(x) u_x)_x` on a uniform
//! 1D grid with homogeneous Dirichlet ends, plus its bilinear form.
//!
//! The coefficient is sampled at the n+1 cell interfaces, which keeps the
//! assembled matrix exactly symmetric and the discrete form
//!
//! ```text
//! a(u, w) = (1/h) * sum_j a_{j+1/2} (u_{j+1} - u_j)(w_{j+1} - w_j)
//! ```
//!
//! identical to `<L u, w>_h` by summation by parts.

use crate::config::GridSpec;

/// Coefficient samples at the cell interfaces of a grid.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    samples: Vec<f64>,
}

impl CoefficientField {
    /// Constant coefficient on a grid with `n_interior` nodes.
    pub fn constant(value: f64, n_interior: usize) -> Self {
        Self {
            samples: vec![value; n_interior + 1],
        }
    }

    /// Sample `a(x)` at the interfaces of `grid`.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &GridSpec, a: F) -> Self {
        let h = grid.h();
        let samples = (0..=grid.n_interior)
            .map(|j| a(grid.x_lo + (j as f64 + 0.5) * h))
            .collect();
        Self { samples }
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Ellipticity lower bound: the minimum interface sample.
    pub fn coercivity(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    /// Coefficient sample count does not match the grid interfaces.
    DimensionMismatch { expected: usize, got: usize },
    /// Field length does not match the operator's interior size.
    LengthMismatch { expected: usize, got: usize },
}

impl std::fmt::Display for OperatorError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorError::DimensionMismatch { expected, got } => {
                write!(f, "coefficient samples: expected {expected}, got {got}")
            }
            OperatorError::LengthMismatch { expected, got } => {
                write!(f, "field length: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for OperatorError {}

/// Assembled tridiagonal form of `L` at the interior nodes.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    /// Interface coefficients a_{j+1/2}, j = 0..n (length n+1).
    coeff: Vec<f64>,
    h: f64,
    n: usize,
}

impl DiscreteOperator {
    /// Assemble the operator for `grid` from interface samples.
    pub fn assemble(grid: &GridSpec, coeff: &CoefficientField) -> Result<Self, OperatorError> {
        let expected = grid.n_interior + 1;
        if coeff.samples.len() != expected {
            return Err(OperatorError::DimensionMismatch {
                expected,
                got: coeff.samples.len(),
            });
        }
        Ok(Self {
            coeff: coeff.samples.clone(),
            h: grid.h(),
            n: grid.n_interior,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Row `j` of the tridiagonal matrix as (sub, diag, super).
    pub fn stencil(&self, j: usize) -> (f64, f64, f64) {
        let h2 = self.h * self.h;
        let lo = self.coeff[j] / h2;
        let hi = self.coeff[j + 1] / h2;
        (-lo, lo + hi, -hi)
    }

    /// Apply `L` to a field of interior values (Dirichlet zero ghosts).
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if u.len() != self.n {
            return Err(OperatorError::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let h2 = self.h * self.h;
        for j in 0..self.n {
            let left = if j == 0 { 0.0 } else { u[j - 1] };
            let right = if j + 1 == self.n { 0.0 } else { u[j + 1] };
            out[j] = (self.coeff[j] * (u[j] - left) + self.coeff[j + 1] * (u[j] - right)) / h2;
        }
    }

    /// Discrete bilinear form `a(u, w)`; symmetric by construction.
    pub fn quadratic_form(&self, u: &[f64], w: &[f64]) -> Result<f64, OperatorError> {
        if u.len() != self.n || w.len() != self.n {
            return Err(OperatorError::LengthMismatch {
                expected: self.n,
                got: if u.len() != self.n { u.len() } else { w.len() },
            });
        }
        Ok(self.form_unchecked(u, w))
    }

    pub(crate) fn form_unchecked(&self, u: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut u_prev = 0.0;
        let mut w_prev = 0.0;
        for j in 0..self.n {
            acc += self.coeff[j] * (u[j] - u_prev) * (w[j] - w_prev);
            u_prev = u[j];
            w_prev = w[j];
        }
        // closing interface against the right boundary ghost
        acc += self.coeff[self.n] * u_prev * w_prev;
        acc / self.h
    }

    /// `a(u - u2, u - u2)` without materializing the difference.
    pub(crate) fn form_of_difference(&self, u: &[f64], u2: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        for j in 0..self.n {
            let d = u[j] - u2[j];
            acc += self.coeff[j] * (d - prev) * (d - prev);
            prev = d;
        }
        acc += self.coeff[self.n] * prev * prev;
        acc / self.h
    }

    /// Smallest eigenvalue of the constant-coefficient discrete Laplacian,
    /// scaled by the coercivity constant. Used as a spectral floor.
    pub fn spectral_floor(&self) -> f64 {
        let a0 = self.coeff.iter().cloned().fold(f64::INFINITY, f64::min);
        let theta = std::f64::consts::PI * self.h; // domain length (n+1) h
        let len = (self.n + 1) as f64 * self.h;
        let lam1 = (2.0 - 2.0 * (theta / len).cos()) / (self.h * self.h);
        a0 * lam1
    }
}

/// h-weighted discrete L2 inner product over interior nodes.
pub fn inner_h(u: &[f64], w: &[f64], h: f64) -> f64 {
    debug_assert_eq!(u.len(), w.len());
    h * u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
}

/// h-weighted discrete L2 norm squared.
pub fn norm_sq_h(u: &[f64], h: f64) -> f64 {
    h * u.iter().map(|a| a * a).sum::<f64>()
}
