//! Simulator and energy diagnostics for a pair of viscoelastic wave
//! equations coupled through power-type sources, with frictional damping
//! and a distributed delay acting on the velocities:
//!
//! ```text
//! u_tt + L1 u - integral_0^t g1(t-s) L1 u(s) ds + mu1 u_t
//!      + integral_tau1^tau2 mu2(s) u_t(t-s) ds + f1(u, v) = 0
//! v_tt + L2 v - integral_0^t g2(t-s) L2 v(s) ds + mu3 v_t
//!      + integral_tau1^tau2 mu4(s) v_t(t-s) ds + f2(u, v) = 0
//! ```
//!
//! on an interval with homogeneous Dirichlet ends, where
//! `L w = -(a(x) w_x)_x`. The crate integrates the system with an explicit
//! leapfrog scheme, evaluates the full energy budget (kinetic, elastic,
//! memory, delayed, potential stores), tracks the Lyapunov-type
//! functionals whose decay drives the stability theory, validates the
//! structural assumptions on the inputs, and fits decay envelopes matched
//! to the relaxation-kernel family.
//!
//! Start with the `examples/` directory; each example exercises one major
//! capability. The `viscowave` binary wraps the same machinery behind
//! `run`, `sweep`, `verify`, and `validate` subcommands.

pub mod acceptance;
pub mod config;
pub mod delay;
pub mod diagnostics;
pub mod harness;
pub mod integrator;
pub mod kernel;
pub mod operator;
pub mod quad;
pub mod source;

pub use config::{validate, GridSpec, ProblemSpec, ValidationReport};
pub use delay::{DelayKernel, VelocityHistory};
pub use diagnostics::{DecayFit, EnergyReport, LyapunovConfig};
pub use integrator::{RunSummary, SimState, Simulation};
pub use kernel::{FieldHistory, RelaxationKernel};
pub use operator::{CoefficientField, DiscreteOperator};
pub use source::SourceParams;
