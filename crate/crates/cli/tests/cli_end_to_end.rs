//! Drives the `skyvote` binary through the full pipeline: gen-city → plan →
//! simulate → fuse → verify-ledger, including tamper detection and the
//! documented exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skyvote() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skyvote"))
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn pipeline_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let city_dir = tmp.path().join("city");
    let plan_dir = tmp.path().join("plan");
    let sim_dir = tmp.path().join("sim");
    let fuse_dir = tmp.path().join("fuse");

    // gen-city: small 4×4 grid in the default 3 km × 3 km extent.
    let out = skyvote()
        .args(["--out-dir", city_dir.to_str().unwrap(), "--seed", "3"])
        .args(["gen-city", "--rows", "4", "--cols", "4"])
        .output()
        .unwrap();
    ok(&out);
    let city_path = city_dir.join("city.json");
    assert!(city_path.exists());
    let manifest = read(&city_dir.join("manifest.json"));
    assert!(manifest.contains("\"command\": \"gen-city\""));
    assert!(manifest.contains("\"seed\": 3"));

    // plan with n_los 2 so at least two sites are chosen.
    let out = skyvote()
        .args(["--out-dir", plan_dir.to_str().unwrap()])
        .args(["plan", "--city", city_path.to_str().unwrap()])
        .args(["--n-los", "2", "--spacing-m", "600", "--max-uavs", "10"])
        .output()
        .unwrap();
    ok(&out);
    let placement_path = plan_dir.join("placement.json");
    let curve = read(&plan_dir.join("coverage_curve.csv"));
    assert!(curve.starts_with("k,n_los,coverage_fraction\n"));
    assert!(
        curve.lines().count() >= 3,
        "expected ≥ 2 picks for n_los=2:\n{curve}"
    );
    let sites = skyvote_cli::load_placement(&placement_path).unwrap();
    assert!(sites.len() >= 2);

    // scan-tradeoff from pure defaults.
    let out = skyvote()
        .args(["--out-dir", plan_dir.to_str().unwrap(), "scan-tradeoff"])
        .output()
        .unwrap();
    ok(&out);
    let tradeoff = read(&plan_dir.join("tradeoff.csv"));
    assert!(tradeoff.starts_with("wz_m,scan_time_s,outage_probability\n"));
    assert_eq!(tradeoff.lines().count(), 14); // header + 13 sweep points

    // simulate a small mixed scenario; street positions in the 4×4 city.
    let scenario_path = tmp.path().join("scenario.json");
    let scenario = serde_json::json!({
        "seed": 11,
        "city": city_path,
        "placement": placement_path,
        "agents": {
            "ground": [
                {"true_location": [200.0, 200.0, 1.5], "behavior": "honest", "has_mrr": true},
                {"true_location": [1000.0, 200.0, 1.5], "behavior": "honest", "has_mrr": true},
                {"true_location": [200.0, 1000.0, 1.5], "behavior":
                    {"spoofer": {"claimed": [2800.0, 2800.0, 1.5]}}, "has_mrr": true}
            ],
            "verifiers": [
                {"site": 0, "behavior": "honest"},
                {"site": 1, "behavior": "honest"}
            ]
        },
        "link": {
            "beam": {"wavelength": 1.55e-6, "transmit_power": 1.0, "w0": 0.01,
                     "wz_target": 10.0, "rx_aperture_radius": 0.05},
            "mrr": {"aperture_radius": 0.025, "reflectivity": 0.8, "modulation_depth": 0.5},
            "noise": {"pointing_jitter_sigma": 0.0, "detector_threshold": 1e-12},
            "capture_radius": 3.0
        },
        "epochs": 2,
        "assignment_policy": {"policy": "nearest", "min_assignees": 2}
    });
    fs::write(
        &scenario_path,
        serde_json::to_string_pretty(&scenario).unwrap(),
    )
    .unwrap();
    let out = skyvote()
        .args(["--out-dir", sim_dir.to_str().unwrap()])
        .args(["simulate", "--scenario", scenario_path.to_str().unwrap()])
        .output()
        .unwrap();
    ok(&out);
    let metrics = read(&sim_dir.join("metrics.csv"));
    assert!(
        metrics.starts_with("epoch,votes,verified,unverified,unknown,false_verified,suppressed\n")
    );
    assert_eq!(metrics.lines().count(), 3); // header + 2 epochs
                                            // Epoch 0: 3 votes, 2 assignees each; the spoofed far-off claim draws
                                            // unverified, the honest MRR holders verified.
    assert!(metrics.lines().nth(1).unwrap().starts_with("0,3,"));
    let report = read(&sim_dir.join("report.json"));
    assert!(report.contains("\"chain_ok\": true"));

    // fuse the simulated ledger over the same city grid.
    let ledger_path = sim_dir.join("ledger.ndjson");
    let out = skyvote()
        .args(["--out-dir", fuse_dir.to_str().unwrap()])
        .args(["fuse", "--ledger", ledger_path.to_str().unwrap()])
        .args(["--city", city_path.to_str().unwrap()])
        .output()
        .unwrap();
    ok(&out);
    let map = read(&fuse_dir.join("crisis_map.csv"));
    assert!(map.starts_with("cell_x,cell_y,label,score\n"));
    assert!(
        map.lines().count() > 1,
        "expected non-empty crisis map:\n{map}"
    );

    // verify-ledger: pristine → exit 0.
    let out = skyvote()
        .args(["--out-dir", fuse_dir.to_str().unwrap()])
        .args(["verify-ledger", "--ledger", ledger_path.to_str().unwrap()])
        .output()
        .unwrap();
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: "));

    // Tamper one payload byte mid-file → exit 1 and a printed index.
    let mut bytes = fs::read(&ledger_path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    let tampered = tmp.path().join("tampered.ndjson");
    fs::write(&tampered, &bytes).unwrap();
    let out = skyvote()
        .args(["--out-dir", fuse_dir.to_str().unwrap()])
        .args(["verify-ledger", "--ledger", tampered.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stdout).contains("corrupt at index"),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );

    // Missing file → exit 2 (error, not a corruption verdict).
    let out = skyvote()
        .args(["--out-dir", fuse_dir.to_str().unwrap()])
        .args(["verify-ledger", "--ledger", "/nonexistent/ledger.ndjson"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_env_var_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let out = skyvote()
        .env("SKYVOTE_OUT_DIR", tmp.path())
        .args(["--seed", "1", "gen-city", "--rows", "0", "--cols", "0"])
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("city.json").exists());
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn same_seed_same_city_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = skyvote()
            .args(["--out-dir", dir.to_str().unwrap(), "--seed", "9"])
            .args(["gen-city", "--rows", "3", "--cols", "3"])
            .output()
            .unwrap();
        ok(&out);
    }
    assert_eq!(
        fs::read(a.join("city.json")).unwrap(),
        fs::read(b.join("city.json")).unwrap()
    );
}
