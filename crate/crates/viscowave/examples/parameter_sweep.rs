//! Parameter sweep through the manifest interface: scan the delay weight
//! from zero to the stability boundary and report the fitted decay rate
//! against the margin. Artifacts (per-point energy.csv + summary.json,
//! sweep_summary.csv) land under target/sweep_demo/.

use std::path::Path;
use viscowave::harness;

fn main() {
    let root = Path::new("target/sweep_demo");
    std::fs::create_dir_all(root).expect("create output root");

    let config = "\
[grid]
n_interior = 64
[time]
t_end = 12.0
[delay_u]
mu = 0.25
tau1 = 0.0
tau2 = 1.0
";
    std::fs::write(root.join("base.toml"), config).expect("write base config");

    let manifest = "\
name = \"delay-margin-scan\"
config = \"base.toml\"
output = \"scan\"
seed = 42

[axes]
\"delay_u.mu\" = [0.0, 0.25, 0.5, 0.75]
\"delay_v.mu\" = [0.25]
";
    let manifest_path = root.join("margin_scan.toml");
    std::fs::write(&manifest_path, manifest).expect("write manifest");

    let code = harness::cmd_sweep(&manifest_path, None).expect("sweep runs");
    assert_eq!(code, 0, "sweep should complete");

    println!("\nsweep_summary.csv:");
    let summary = std::fs::read_to_string(root.join("scan/sweep_summary.csv")).expect("summary");
    for line in summary.lines() {
        // trim the 17-digit reals for display
        let short: Vec<String> = line
            .split(',')
            .map(|f| match f.parse::<f64>() {
                Ok(x) if f.contains('.') || f.contains('e') => format!("{x:.4}"),
                _ => f.to_string(),
            })
            .collect();
        println!("  {}", short.join(", "));
    }
    println!("\nper-point artifacts under {}", root.join("scan").display());
}
