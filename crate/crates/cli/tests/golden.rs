//! Golden-file tests of the figure-reproduction commands at reduced resolution.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the reference files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fstchain");

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fstchain-golden-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], out: &Path, workers: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env("FSTCHAIN_WORKERS", workers)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn result(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap()
}

fn close(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_nan() && y.is_nan() => true,
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-6),
        _ => a == b,
    }
}

/// Cell-by-cell comparison with a relative tolerance on numbers.
fn check_csv(out: &Path, file: &str, golden: &str) {
    let got = std::fs::read_to_string(out.join(file)).unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(golden);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(g.len(), w.len(), "{golden}: row count");
    for (k, (gl, wl)) in g.iter().zip(&w).enumerate() {
        let (gc, wc): (Vec<&str>, Vec<&str>) = (gl.split(',').collect(), wl.split(',').collect());
        assert_eq!(gc.len(), wc.len(), "{golden}: line {k}");
        for (a, b) in gc.iter().zip(&wc) {
            assert!(close(a, b), "{golden}: line {k}: {a} vs {b}");
        }
    }
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn speed_sweep_matches_golden_and_is_deterministic() {
    let (a, b) = (scratch("sweep-a"), scratch("sweep-b"));
    let args = [
        "speed-sweep",
        "--n",
        "5..12",
        "--theta",
        "0.05pi..pi",
        "--points",
        "5",
    ];
    assert_eq!(run(&args, &a, "1").status.code(), Some(0));
    assert_eq!(run(&args, &b, "4").status.code(), Some(0));
    for f in ["speed_gain.csv", "result.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs across worker counts"
        );
    }
    check_csv(&a, "speed_gain.csv", "speed_gain.csv");
    let csv = std::fs::read_to_string(a.join("speed_gain.csv")).unwrap();
    let (n, t, r) = (
        column(&csv, "n"),
        column(&csv, "theta_over_pi"),
        column(&csv, "ratio"),
    );
    for k in 0..r.len() {
        assert!(r[k] >= 3f64.sqrt() - 1e-12);
        if t[k] == 1.0 && n[k] as usize % 2 == 0 {
            assert!((r[k] - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn half_turn_scenarios() {
    let out = scratch("split");
    assert_eq!(
        run(&["scenario", "configs/split_n15.json"], &out, "1")
            .status
            .code(),
        Some(0)
    );
    check_csv(&out, "populations.csv", "split_n15.csv");
    let csv = std::fs::read_to_string(out.join("populations.csv")).unwrap();
    let p15 = column(&csv, "p_15");
    let p1 = column(&csv, "p_1");
    assert!((p15[20] - 0.5).abs() < 1e-6 && (p1[20] - 0.5).abs() < 1e-6);
    assert!((p15.last().unwrap() - 1.0).abs() < 1e-6);

    let out = scratch("flip");
    assert_eq!(
        run(&["scenario", "configs/flip_n15.json"], &out, "1")
            .status
            .code(),
        Some(0)
    );
    check_csv(&out, "populations.csv", "flip_n15.csv");
    let csv = std::fs::read_to_string(out.join("populations.csv")).unwrap();
    assert!((column(&csv, "p_1").last().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn seeded_measurement_is_reproducible() {
    let (a, b) = (scratch("meas-a"), scratch("meas-b"));
    let args = ["scenario", "configs/measure_n7.json", "--seed", "11"];
    assert_eq!(run(&args, &a, "1").status.code(), Some(0));
    assert_eq!(run(&args, &b, "1").status.code(), Some(0));
    for f in ["populations.csv", "measurements.csv", "result.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    check_csv(&a, "measurements.csv", "measure_n7.csv");
}

#[test]
fn parity_protocol() {
    let out = scratch("parity");
    let o = run(
        &[
            "parity", "--n", "4", "--random", "6", "--shots", "200", "--seed", "3",
        ],
        &out,
        "3",
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    check_csv(&out, "parity_basis.csv", "parity_basis_n4.csv");
    check_csv(&out, "parity_random.csv", "parity_random_n4.csv");
    let r = result(&out);
    assert_eq!(r["result"]["agreement"], 1.0);
    assert_eq!(r["result"]["duration_in_iswaps"], 3.0);
}

#[test]
fn mapping_and_decomposition() {
    let out = scratch("mapping");
    assert_eq!(
        run(
            &["verify-mapping", "--n", "6", "--theta", "0.3pi"],
            &out,
            "1"
        )
        .status
        .code(),
        Some(0)
    );
    let r = result(&out);
    assert!(r["result"]["distance"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));

    let out = scratch("decompose");
    assert_eq!(
        run(
            &[
                "decompose",
                "--n",
                "6",
                "--theta",
                "0.4pi",
                "--j-max",
                "1e7"
            ],
            &out,
            "1"
        )
        .status
        .code(),
        Some(0)
    );
    check_csv(&out, "gates.csv", "gates_n6.csv");
    let r = result(&out)["result"].clone();
    assert_eq!(r["total_gates"], 6 * 6 / 2 - 6 + 3);
    assert!((r["duration_in_iswaps"].as_f64().unwrap() - 6.0).abs() < 1e-12);

    let out = scratch("synth");
    assert_eq!(
        run(
            &[
                "synthesize",
                "--n",
                "7",
                "--theta",
                "0.5pi",
                "--j-max",
                "1e7"
            ],
            &out,
            "1"
        )
        .status
        .code(),
        Some(0)
    );
    check_csv(&out, "couplings.csv", "couplings_n7.csv");
    check_csv(&out, "detunings.csv", "detunings_n7.csv");
    let j = column(
        &std::fs::read_to_string(out.join("couplings.csv")).unwrap(),
        "coupling_hz",
    );
    assert!((j.iter().cloned().fold(0.0, f64::max) - 1e7).abs() < 1e-3);
}

#[test]
fn zz_scan_locates_the_bias_zero() {
    let out = scratch("zz");
    let o = run(
        &[
            "device-zz-scan",
            "--lo",
            "0.2",
            "--hi",
            "0.34",
            "--points",
            "8",
        ],
        &out,
        "1",
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    check_csv(&out, "zz_scan.csv", "zz_scan.csv");
    let zeros = result(&out)["result"]["sign_changes"].clone();
    let zeros: Vec<f64> = zeros
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(zeros.iter().any(|z| (z - 0.3).abs() < 0.01), "{zeros:?}");
}

#[test]
fn device_optimize_at_coarse_resolution() {
    let out = scratch("optimize");
    let args = [
        "device-optimize",
        "--theta",
        "0.5pi,pi",
        "--budget",
        "2",
        "--substeps",
        "1",
        "--device",
        "configs/reference_device.json",
    ];
    let o = run(&args, &out, "2");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    check_csv(&out, "summary.csv", "optimize_summary.csv");
    check_csv(&out, "trace_1.csv", "optimize_trace_pi.csv");
    let trace = std::fs::read_to_string(out.join("trace_1.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "eval,infidelity,leakage,phiA1,phiA2,wd1,wd2,best_infidelity"
    );
}

#[test]
fn exit_statuses() {
    let out = scratch("status");
    // numerical failure: the literal angle reading does not reproduce the gate
    let o = run(
        &[
            "decompose",
            "--n",
            "4",
            "--theta",
            "0.4pi",
            "--convention",
            "literal",
        ],
        &out,
        "1",
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(result(&out)["status"], "tolerance_failure");
    // validation failure
    assert_eq!(
        run(
            &["synthesize", "--n", "1", "--theta", "pi"],
            &scratch("v"),
            "1"
        )
        .status
        .code(),
        Some(2)
    );
    // malformed flags and files
    assert_eq!(
        run(
            &["synthesize", "--n", "x", "--theta", "pi"],
            &scratch("m"),
            "1"
        )
        .status
        .code(),
        Some(1)
    );
    let bad = scratch("bad-file");
    std::fs::create_dir_all(&bad).unwrap();
    std::fs::write(bad.join("s.json"), "{\"n_sites\": 3,\n \"theta\": }").unwrap();
    let o = run(
        &["scenario", bad.join("s.json").to_str().unwrap()],
        &scratch("m2"),
        "1",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // clamped angles warn and still succeed
    let o = run(
        &["synthesize", "--n", "4", "--theta", "0"],
        &scratch("c"),
        "1",
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("clamped"));
}
