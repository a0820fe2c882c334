//! End-to-end checks of the harness layer: artifact files, exit codes,
//! sweep expansion, and the tabulated-delay CSV interface.

use std::path::Path;
use viscowave::harness::{self, RunFlags, EXIT_OK, EXIT_OVERFLOW, EXIT_VALIDATION};

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn quick_config() -> String {
    "[grid]\nn_interior = 24\n[time]\nt_end = 1.0\n".to_string()
}

#[test]
fn run_emits_csv_and_summary_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quick.toml");
    write(&cfg, &quick_config());
    let out = dir.path().join("out");
    let code = harness::cmd_run(&cfg, &out, &RunFlags::default()).unwrap();
    assert_eq!(code, EXIT_OK);

    let csv = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,kinetic_u,kinetic_v,elastic_u"));
    assert!(header.ends_with("psi,phi,delay_weighted,lyapunov"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 3);
    // rows parse back to finite reals losslessly
    for field in rows[0].split(',') {
        let x: f64 = field.parse().unwrap();
        assert!(x.is_finite());
    }

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["overflow"], serde_json::json!(false));
    assert!(summary["spec"]["grid"]["n_interior"] == serde_json::json!(24));
    assert!(summary["validation"]["findings"].as_array().unwrap().len() > 5);
}

#[test]
fn invalid_delay_window_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad_tau.toml");
    write(
        &cfg,
        "[delay_u]\nmu = 0.25\ntau1 = 1.0\ntau2 = 0.5\n[time]\nt_end = 1.0\n",
    );
    let out = dir.path().join("out");
    let code = harness::cmd_run(&cfg, &out, &RunFlags::default()).unwrap();
    assert_eq!(code, EXIT_VALIDATION);
    assert!(!out.join("energy.csv").exists());
}

#[test]
fn overflow_without_allow_unstable_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.toml");
    // validates cleanly (the CFL check sees only the linear operator) but
    // the cubic source at this amplitude is numerically unstable
    write(
        &cfg,
        "[grid]\nn_interior = 24\n\
         [initial]\nu0 = { profile = \"sine\", mode = 1, amplitude = 80.0 }\n\
         v0 = { profile = \"sine\", mode = 1, amplitude = 80.0 }\n\
         [time]\nt_end = 5.0\n",
    );
    let out = dir.path().join("out");
    let code = harness::cmd_run(&cfg, &out, &RunFlags::default()).unwrap();
    assert_eq!(code, EXIT_OVERFLOW);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["overflow"], serde_json::json!(true));

    // the same run under --allow-unstable reports and exits 0
    let out2 = dir.path().join("out2");
    let flags = RunFlags {
        allow_unstable: true,
        stride: None,
    };
    let code = harness::cmd_run(&cfg, &out2, &flags).unwrap();
    assert_eq!(code, EXIT_OK);
}

#[test]
fn validate_prints_findings_and_maps_exit() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    write(&good, &quick_config());
    assert_eq!(harness::cmd_validate(&good).unwrap(), EXIT_OK);

    let bad = dir.path().join("bad.toml");
    write(&bad, "[kernel_u]\nfamily = \"exp\"\na = 2.0\nb = 1.0\n");
    assert_eq!(harness::cmd_validate(&bad).unwrap(), EXIT_VALIDATION);
}

#[test]
fn stride_override_thins_the_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quick.toml");
    write(&cfg, &quick_config());
    let dense = dir.path().join("dense");
    let sparse = dir.path().join("sparse");
    harness::cmd_run(&cfg, &dense, &RunFlags::default()).unwrap();
    harness::cmd_run(
        &cfg,
        &sparse,
        &RunFlags {
            allow_unstable: false,
            stride: Some(1000),
        },
    )
    .unwrap();
    let count = |p: &Path| {
        std::fs::read_to_string(p.join("energy.csv"))
            .unwrap()
            .lines()
            .count()
    };
    assert!(count(&sparse) < count(&dense));
}

#[test]
fn tabulated_delay_csv_loads_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("mu.csv");
    // header row plus a triangular weight on [0, 0.5]
    let mut rows = String::from("s,mu\n");
    for i in 0..=50 {
        let s = 0.01 * i as f64;
        rows.push_str(&format!("{s},{}\n", 0.4 * s));
    }
    write(&table, &rows);
    let cfg = dir.path().join("tab.toml");
    write(
        &cfg,
        "[grid]\nn_interior = 24\n[time]\nt_end = 1.0\n[delay_u]\ncsv = \"mu.csv\"\n",
    );
    let out = dir.path().join("out");
    let code = harness::cmd_run(&cfg, &out, &RunFlags::default()).unwrap();
    assert_eq!(code, EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    // mass of 0.4 s on [0, 0.5] is 0.05
    let mass = summary["spec"]["delay_u"]["abs_mass"].as_f64().unwrap();
    assert!((mass - 0.05).abs() < 1e-6, "mass {mass}");
}

#[test]
fn sweep_expands_cross_product_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("base.toml"), &quick_config());
    let manifest = dir.path().join("sweep.toml");
    write(
        &manifest,
        "name = \"margin-scan\"\nconfig = \"base.toml\"\noutput = \"scan\"\nseed = 7\n\
         [axes]\n\"delay_u.mu\" = [0.0, 0.0625, 0.125, 0.1875]\n",
    );
    let code = harness::cmd_sweep(&manifest, Some(2)).unwrap();
    assert_eq!(code, EXIT_OK);
    let root = dir.path().join("scan");
    let summary = std::fs::read_to_string(root.join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 5); // header + 4 points
    assert!(lines[0].starts_with("point,delay_u.mu,"));
    for i in 0..4 {
        assert!(root.join(format!("point_{i:03}")).join("energy.csv").exists());
    }

    // empty axes: a single run
    let manifest1 = dir.path().join("single.toml");
    write(
        &manifest1,
        "name = \"single\"\nconfig = \"base.toml\"\noutput = \"single_out\"\n",
    );
    assert_eq!(harness::cmd_sweep(&manifest1, None).unwrap(), EXIT_OK);
    assert!(dir
        .path()
        .join("single_out/point_000/summary.json")
        .exists());

    // cap exceeded
    let manifest2 = dir.path().join("big.toml");
    write(
        &manifest2,
        "name = \"big\"\nconfig = \"base.toml\"\noutput = \"big_out\"\ncap = 3\n\
         [axes]\n\"delay_u.mu\" = [0.0, 0.1, 0.2, 0.3]\n",
    );
    assert_eq!(harness::cmd_sweep(&manifest2, None).unwrap(), EXIT_VALIDATION);
}

#[test]
fn verify_filter_runs_fast_subset() {
    assert_eq!(harness::cmd_verify(Some("decay-fit")), EXIT_OK);
    assert_eq!(harness::cmd_verify(Some("no-such-criterion")), EXIT_VALIDATION);
}

#[test]
fn artifacts_are_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quick.toml");
    write(&cfg, &quick_config());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    harness::cmd_run(&cfg, &a, &RunFlags::default()).unwrap();
    harness::cmd_run(&cfg, &b, &RunFlags::default()).unwrap();
    let read = |p: &Path| std::fs::read(p.join("energy.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
