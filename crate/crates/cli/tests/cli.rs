//! End-to-end tests: spawn the binary for exit codes and environment
//! handling, call the command layer in-process for output contracts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sfcsim_cli::commands::{
    cmd_eval, cmd_sweep, cmd_train, Axis, EvalArgs, SweepArgs, TrainArgs, EVAL_HEADER,
    SWEEP_HEADER,
};
use sfcsim_cli::SEED_ENV;
use sfcsim_core::BundleKind;

const TINY_SCENARIO: &str = "\
[sim]
episodes = 3

[workload]
horizon = 40

[dqn]
hidden_width = 16
hidden_layers = 2
warmup = 32
epsilon_decay_episodes = 3
";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sfcsim"));
    cmd.env_remove(SEED_ENV);
    cmd
}

fn write_tiny(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY_SCENARIO).unwrap();
    path
}

fn train_args(scenario: &Path, out: &Path, seed: u64) -> TrainArgs {
    TrainArgs {
        scenario: Some(scenario.to_path_buf()),
        out: out.to_path_buf(),
        seed: Some(seed),
        bundle: BundleKind::RlRl,
    }
}

#[test]
fn missing_scenario_exits_2_and_names_the_path() {
    let out = bin()
        .args(["train", "--scenario", "/definitely/not/here.toml", "--out", "/tmp/unused"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/definitely/not/here.toml"), "{stderr}");
}

#[test]
fn unknown_bundle_exits_2_and_lists_the_names() {
    let out = bin()
        .args(["eval", "--out", "/tmp/unused", "--bundle", "RL*RL"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for name in ["RL+RL", "RL+H", "H+RL", "H+H"] {
        assert!(stderr.contains(name), "missing {name} in {stderr}");
    }
}

#[test]
fn training_a_pure_heuristic_bundle_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let out = bin()
        .args(["train", "--bundle", "H+H", "--out"])
        .arg(dir.path().join("run"))
        .arg("--scenario")
        .arg(&scenario)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rl_eval_without_checkpoints_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let args = EvalArgs {
        scenario: Some(scenario),
        out: dir.path().join("eval"),
        seed: Some(1),
        bundle: BundleKind::RlH,
        checkpoints: None,
        seeds: 2,
    };
    let err = cmd_eval(&args).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("--checkpoints"));
}

#[test]
fn seed_flag_beats_the_environment_and_lands_in_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let flagged = dir.path().join("flagged");
    let env_only = dir.path().join("env_only");

    let status = bin()
        .env(SEED_ENV, "999")
        .args(["train", "--seed", "5", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&flagged)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .env(SEED_ENV, "5")
        .args(["train", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&env_only)
        .status()
        .unwrap();
    assert!(status.success());

    let snapshot = fs::read_to_string(flagged.join("scenario.resolved.toml")).unwrap();
    assert!(snapshot.contains("master_seed = 5"), "{snapshot}");
    let a = fs::read(flagged.join("metrics.csv")).unwrap();
    let b = fs::read(env_only.join("metrics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn resolved_snapshot_reproduces_training_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let first = dir.path().join("first");
    let second = dir.path().join("second");

    let status = bin()
        .args(["train", "--seed", "11", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&first)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .arg("train")
        .arg("--scenario")
        .arg(first.join("scenario.resolved.toml"))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success());

    for file in ["metrics.csv", "scenario.resolved.toml", "checkpoints/path.ckpt"] {
        let a = fs::read(first.join(file)).unwrap();
        let b = fs::read(second.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between the run and its replay");
    }
}

#[test]
fn train_then_eval_round_trips_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let run = dir.path().join("run");
    cmd_train(&train_args(&scenario, &run, 3)).unwrap();

    let eval_out = dir.path().join("eval_rl");
    cmd_eval(&EvalArgs {
        scenario: Some(scenario.clone()),
        out: eval_out.clone(),
        seed: Some(3),
        bundle: BundleKind::RlRl,
        checkpoints: Some(run.join("checkpoints")),
        seeds: 3,
    })
    .unwrap();
    let text = fs::read_to_string(eval_out.join("eval.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(EVAL_HEADER));
    let row = lines.next().unwrap();
    assert!(row.starts_with("RL+RL, 3, "), "{row}");
    assert_eq!(lines.next(), None);

    let eval_hh = dir.path().join("eval_hh");
    cmd_eval(&EvalArgs {
        scenario: Some(scenario),
        out: eval_hh.clone(),
        seed: Some(3),
        bundle: BundleKind::HH,
        checkpoints: None,
        seeds: 3,
    })
    .unwrap();
    let text = fs::read_to_string(eval_hh.join("eval.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("H+H, 3, "));
}

#[test]
fn lambda_sweep_emits_one_row_per_value_and_bundle_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let run = dir.path().join("run");
    cmd_train(&train_args(&scenario, &run, 7)).unwrap();

    let sweep_out = dir.path().join("sweep");
    cmd_sweep(&SweepArgs {
        scenario: Some(scenario),
        out: sweep_out.clone(),
        seed: Some(7),
        axis: Axis::Lambda,
        values: vec![0.2, 1.0],
        checkpoints: Some(run.join("checkpoints")),
        seeds: 2,
    })
    .unwrap();

    let text = fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 5);
    let prefixes = [
        "lambda, 0.2, H+H, 2, ",
        "lambda, 0.2, RL+RL, 2, ",
        "lambda, 1, H+H, 2, ",
        "lambda, 1, RL+RL, 2, ",
    ];
    for (line, prefix) in lines[1..].iter().zip(prefixes) {
        assert!(line.starts_with(prefix), "expected {prefix:?}, got {line:?}");
    }
}

#[test]
fn lambda_sweep_without_checkpoints_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let err = cmd_sweep(&SweepArgs {
        scenario: Some(scenario),
        out: dir.path().join("sweep"),
        seed: None,
        axis: Axis::Lambda,
        values: vec![0.5],
        checkpoints: None,
        seeds: 2,
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn gamma_sweep_trains_and_stores_a_cell_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_tiny(dir.path());
    let sweep_out = dir.path().join("sweep");
    cmd_sweep(&SweepArgs {
        scenario: Some(scenario),
        out: sweep_out.clone(),
        seed: Some(2),
        axis: Axis::Gamma,
        values: vec![0.5],
        checkpoints: None,
        seeds: 2,
    })
    .unwrap();

    let text = fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("gamma, 0.5, RL+RL, 2, "));
    assert!(sweep_out.join("gamma_0.5/checkpoints/path.ckpt").is_file());
    assert!(sweep_out.join("gamma_0.5/metrics.csv").is_file());
}

#[test]
fn gamma_sweep_rejects_values_outside_the_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_sweep(&SweepArgs {
        scenario: None,
        out: dir.path().join("sweep"),
        seed: None,
        axis: Axis::Gamma,
        values: vec![0.5, 1.5],
        checkpoints: None,
        seeds: 2,
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn verify_fast_prints_a_table_and_exits_zero() {
    let out = bin().args(["verify", "--level", "fast"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}
