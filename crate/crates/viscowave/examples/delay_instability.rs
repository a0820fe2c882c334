//! Delay-driven destabilization, side by side.
//!
//! With frictional damping mu and delayed velocity feedback of weight
//! mu2(s) on [tau1, tau2], decay is guaranteed when
//! `integral |mu2| < mu`. Violating that margin does not merely slow the
//! decay: a feedback window centered on half the fundamental period
//! pumps the first mode and the energy grows.

use viscowave::acceptance::unstable_spec;
use viscowave::config::validate;
use viscowave::diagnostics::{self, monotonicity_check};
use viscowave::Simulation;

fn main() {
    // the stable side: same geometry, delay mass 0.25 against friction 1
    let stable = viscowave::acceptance::baseline_spec(
        128,
        20.0,
        viscowave::RelaxationKernel::Zero,
    );
    // the violated side: mass 2 against friction 1, window [0.9, 1.1]
    let unstable = unstable_spec();

    for (tag, spec) in [("stable", &stable), ("destabilized", &unstable)] {
        let report = validate(spec);
        let margin = spec.delay_u.stability_margin(spec.damping_u);
        println!("== {tag}: delay margin {margin:+.2}");
        for finding in report.findings.iter().filter(|f| f.name.starts_with("delay")) {
            println!("   {:?} {} - {}", finding.status, finding.name, finding.detail);
        }

        let mut series = Vec::new();
        let mut sim = Simulation::new(spec).expect("spec accepted");
        let summary = sim.run(|t, state| {
            let e = diagnostics::energy(state, spec).expect("energy evaluates");
            series.push((t, e.total));
        });
        let mono = monotonicity_check(&series, 0.0, 1e-8);
        println!(
            "   E(0) = {:.3e}, E(T) = {:.3e}, upticks = {}, overflow = {}",
            series[0].1,
            series.last().unwrap().1,
            mono.upticks.len(),
            summary.overflow
        );
        if let Some(first) = mono.upticks.first() {
            println!(
                "   first energy increase at t = {:.3} (+{:.2e})",
                first.t, first.jump
            );
        }
        println!();
    }
}
