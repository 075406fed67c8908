use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn stratflow(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stratflow"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn verdict(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("verdict.json")).unwrap()).unwrap()
}

#[test]
fn minimal_linear_mode_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("lm.toml");
    fs::write(&cfg, "beta = 1\nk = 1\neta = 0\nt_end = 100\n").unwrap();
    let out = tmp.path().join("out");
    let (code, err) = stratflow(&[
        "linear-mode",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v = verdict(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"][0]["bound"], "two-sided energy bound");
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["nu"], 0.0);
    assert_eq!(manifest["config"]["tol"], 1e-10);
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(csv.starts_with("t,value,label\n"));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let (code, err) = stratflow(&[
        "linear-mode",
        "--out",
        out,
        "--set",
        "beta=-1",
        "--set",
        "k=1",
        "--set",
        "t_end=1",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("beta must be > 0"), "{err}");
    let (code, err) = stratflow(&[
        "linear-mode",
        "--out",
        out,
        "--set",
        "beta=1",
        "--set",
        "k=1",
        "--set",
        "t_end=1",
        "--set",
        "nu=1",
        "--set",
        "kappa=0.1",
    ]);
    assert_eq!(code, 1);
    assert!(
        err.contains("max{nu,kappa}/min{nu,kappa} < 4*beta - 1"),
        "{err}"
    );
    let (code, err) = stratflow(&["eigen", "--out", out, "--set", "unknown_key=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown_key"), "{err}");
    let (code, _) = stratflow(&["no-such-command"]);
    assert_eq!(code, 1);
}

#[test]
fn eigen_preset_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = stratflow(&["eigen", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v = verdict(tmp.path());
    assert_eq!(v["checks"][0]["bound"], "spectrally_stable");
    assert!(v["checks"][1]["bound"]
        .as_str()
        .unwrap()
        .contains("Miles-Howard"));
}

#[test]
fn unstable_rest_state_exits_zero_with_unstable_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = stratflow(&[
        "eigen",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "profile=\"rest\"",
        "--set",
        "beta_sq=-1",
        "--set",
        "n_grid=128",
    ]);
    assert_eq!(code, 0);
    let v = verdict(tmp.path());
    assert_eq!(v["checks"][0]["bound"], "spectrally_unstable");
    assert!((v["checks"][0]["margin"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-2);
}

#[test]
fn failed_theorem_check_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = stratflow(&[
        "toy",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "cascade_eta=[64.0]",
        "--set",
        "cascade_tolerance=1e-6",
    ]);
    assert_eq!(code, 3);
    assert_eq!(verdict(tmp.path())["pass"], false);
}

#[test]
fn numerical_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // toy windows pushed past the perturbative time scale
    let (code, err) = stratflow(&[
        "toy",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "delta=0.1",
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn seeded_sweeps_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let (code, err) = stratflow(&[
            "linear-mode",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
            "--set",
            "beta=1.5",
            "--set",
            "t_end=50",
            "--set",
            "random_modes=5",
            "--set",
            "samples=101",
        ]);
        assert_eq!(code, 0, "{err}");
        (
            fs::read(dir.join("norms.csv")).unwrap(),
            fs::read(dir.join("verdict.json")).unwrap(),
        )
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn nonlinear_run_writes_snapshots_and_images() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nl");
    let (code, err) = stratflow(&[
        "nonlinear",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "nx=32",
        "--set",
        "ny=64",
        "--set",
        "t_end=1",
        "--set",
        "snapshot_every=10",
    ]);
    assert_eq!(code, 0, "{err}");
    let snap = fs::read(out.join("snapshot_0001.bin")).unwrap();
    assert_eq!(&snap[..8], b"STRATFLD");
    assert_eq!(snap.len(), 52 + 16 * 32 * 64);
    let pgm = fs::read(out.join("theta_0000.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 64\n255\n"));
    assert_eq!(verdict(&out)["pass"], true);
}

#[test]
fn cfl_violation_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = stratflow(&[
        "nonlinear",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "nx=32",
        "--set",
        "ny=64",
        "--set",
        "eps=50",
        "--set",
        "dt=0.5",
        "--set",
        "t_end=5",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("time step too large"), "{err}");
}

#[test]
fn linear_field_feeds_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let lf = tmp.path().join("lf");
    let (code, err) = stratflow(&[
        "linear-field",
        "--out",
        lf.to_str().unwrap(),
        "--set",
        "k_max=32",
        "--set",
        "j_max=128",
        "--set",
        "eta_spacing=0.2",
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = lf.join("norms.csv");
    let fit = tmp.path().join("fit");
    let (code, err) = stratflow(&[
        "fit",
        "--out",
        fit.to_str().unwrap(),
        "--set",
        &format!("input={:?}", csv.to_str().unwrap()),
        "--set",
        "label=\"omega_neq\"",
        "--set",
        "t_lo=10",
        "--set",
        "t_hi=100",
        "--set",
        "expected=0.5",
    ]);
    assert_eq!(code, 0, "{err}");
    let fitted: Value =
        serde_json::from_str(&fs::read_to_string(fit.join("fit.json")).unwrap()).unwrap();
    assert!((fitted["exponent"].as_f64().unwrap() - 0.5).abs() <= 0.1);
}
