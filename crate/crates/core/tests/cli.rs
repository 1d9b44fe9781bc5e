//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::Command;

fn apc(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_apc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn apc binary")
}

const FAST_CONFIG: &str = r#"
theta_count = 8
pilot_len = 16
snr_db = 10.0
seed = 42

[estimator]
grid_size = 201
"#;

#[test]
fn simulate_emits_pattern_files() {
    let dir = tempdir("simulate");
    std::fs::write(dir.join("campaign.toml"), FAST_CONFIG).unwrap();
    let out = apc(
        &["simulate", "--config", "campaign.toml", "--out", "run"],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("run/pattern.csv")).unwrap();
    // Header plus one row per trajectory point.
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.starts_with(
        "point_index,theta_rad,a_true,a_est,iterations,direct_power"
    ));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run/pattern.json")).unwrap())
            .unwrap();
    assert_eq!(json["config"]["seed"], 42);
    assert_eq!(json["points"].as_array().unwrap().len(), 8);
}

#[test]
fn identical_seeds_give_byte_identical_csv() {
    let dir = tempdir("determinism");
    std::fs::write(dir.join("campaign.toml"), FAST_CONFIG).unwrap();
    for out_dir in ["a", "b"] {
        let out = apc(
            &[
                "simulate",
                "--config",
                "campaign.toml",
                "--format",
                "csv",
                "--out",
                out_dir,
            ],
            &dir,
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.join("a/pattern.csv")).unwrap();
    let b = std::fs::read(dir.join("b/pattern.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempdir("seed_override");
    std::fs::write(dir.join("campaign.toml"), FAST_CONFIG).unwrap();
    let base = apc(
        &["simulate", "--config", "campaign.toml", "--format", "csv", "--out", "a"],
        &dir,
    );
    let other = apc(
        &[
            "simulate", "--config", "campaign.toml", "--format", "csv", "--out", "b",
            "--seed", "7",
        ],
        &dir,
    );
    assert!(base.status.success() && other.status.success());
    let a = std::fs::read(dir.join("a/pattern.csv")).unwrap();
    let b = std::fs::read(dir.join("b/pattern.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn sweep_snr_emits_one_row_per_value() {
    let dir = tempdir("sweep");
    std::fs::write(dir.join("campaign.toml"), FAST_CONFIG).unwrap();
    let out = apc(
        &[
            "sweep-snr", "--config", "campaign.toml", "--values", "0,10", "--trials", "2",
            "--format", "csv", "--out", "s",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("s/sweep_snr.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("axis_value,mean_mse_db,std_mse_db,trials"));
}

#[test]
fn invalid_sweep_value_fails_with_diagnostic() {
    let dir = tempdir("badsweep");
    std::fs::write(dir.join("campaign.toml"), FAST_CONFIG).unwrap();
    // 10 = n_tx is rejected before any trial runs.
    let out = apc(
        &[
            "sweep-q", "--config", "campaign.toml", "--values", "16,10", "--trials", "1",
            "--out", "s",
        ],
        &dir,
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n_tx"), "stderr: {stderr}");
    assert!(!dir.join("s/sweep_q.csv").exists());
}

#[test]
fn bad_config_fails_with_nonzero_exit() {
    let dir = tempdir("badconfig");
    std::fs::write(dir.join("campaign.toml"), "pilot_len = 3\n").unwrap();
    let out = apc(&["simulate", "--config", "campaign.toml"], &dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pilot_len"));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("apc_cli_{tag}_{}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
