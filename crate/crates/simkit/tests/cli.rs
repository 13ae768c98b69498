//! End-to-end checks of the `simkit` binary: the simulate → preintegrate
//! pipeline and the verify exit-code contract.

use std::path::{Path, PathBuf};
use std::process::Command;

use se23_preint::factor::PreintegrationFactor;

fn workspace(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("simkit-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        r#"
seed = 3
variant = "transformed-ecef"
schemes = ["zero-order-hold-body"]

[trajectory]
kind = "constant-twist"
lat_deg = 45.0
lon_deg = 0.0
height = 100.0
duration = 2.0
rate_hz = 100.0
omega_body = [0.01, -0.02, 0.03]
velocity_body = [5.0, 0.0, 0.0]

[sensors]
gyro_psd = 1.0e-9
accel_psd = 1.0e-6
"#,
    )
    .unwrap();
    path
}

fn simkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simkit"))
}

#[test]
fn simulate_then_preintegrate_produces_a_parsable_factor() {
    let dir = workspace("pipeline");
    let config = write_config(&dir);
    let out = dir.join("out");

    let status = simkit()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("imu.csv").exists());
    assert!(out.join("truth.csv").exists());

    let status = simkit()
        .args(["preintegrate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(out.join("factor.json")).unwrap();
    let factor = PreintegrationFactor::from_json(&text).unwrap();
    assert!((factor.t_end - factor.t_start - 2.0).abs() < 1e-9);
    assert!((factor.upsilon.dt - 2.0).abs() < 1e-9);
    // the window accumulated real motion and real uncertainty
    assert!(factor.upsilon.vel.norm() > 1.0);
    assert!(factor.sigma.matrix().trace() > 0.0);
    assert!(factor.bias_jacobian.matrix.norm() > 0.0);
}

#[test]
fn verify_exit_codes_follow_the_outcome() {
    let ok = simkit()
        .args(["verify", "group-axioms", "--seed", "5"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["passed"], true);

    let broken = simkit()
        .args([
            "verify",
            "jacobians",
            "--seed",
            "5",
            "--inject-fault",
            "flip-noise-jacobian-sign",
        ])
        .output()
        .unwrap();
    assert!(!broken.status.success());
    let report: serde_json::Value = serde_json::from_slice(&broken.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let failing: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["noise-jacobian-fd"]);
}

#[test]
fn monotonicity_subcommand_reports_and_passes() {
    let dir = workspace("monotonicity");
    let config = write_config(&dir);
    let out = dir.join("out");
    let status = simkit()
        .args(["monotonicity", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("monotonicity.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
}
