//! End-to-end runs of the `chaowork` binary: reproducibility across worker
//! counts, output layout, layered settings and machine-readable errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chaowork::config::validate_config;
use chaowork::Error;
use serde_json::Value;

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quick.toml")
}

fn chaowork(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chaowork"));
    cmd.args(args);
    // Keep the caller's environment from leaking into the layered settings.
    for (k, _) in std::env::vars() {
        if k.starts_with("CHAOWORK_") {
            cmd.env_remove(k);
        }
    }
    cmd.env("CHAOWORK_LOG", "error");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().unwrap_or("")).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run_into(dir: &Path, workers: &str, command: &[&str]) -> Value {
    let config = quick_config();
    let mut args = vec![
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--workers",
        workers,
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(command);
    let out = chaowork(&args, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    stdout_json(&out)
}

#[test]
fn outputs_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (one, four) = (tmp.path().join("one"), tmp.path().join("four"));
    let a = run_into(&one, "1", &["semiclassical"]);
    let b = run_into(&four, "4", &["semiclassical"]);
    assert_eq!(a["manifest_hash"], b["manifest_hash"]);
    let (fa, fb) = (files(&one), files(&four));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        // The manifest records the output directory and worker count.
        if name != "manifest.json" {
            assert!(bytes == &fb[name], "{name} differs");
        }
    }
}

#[test]
fn fig4_writes_one_density_pair_per_hbar() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fig4");
    let summary = run_into(&dir, "0", &["scenario", "fig4"]);
    assert_eq!(summary["command"], "scenario fig4");
    let names: Vec<String> = files(&dir).into_keys().collect();
    let beta = "0.000244140625";
    let mut expected = vec![
        format!("classical_w_beta{beta}.csv"),
        "fig4_report.json".to_string(),
        "manifest.json".to_string(),
    ];
    for hbar in ["1", "0.5", "0.1", "0.01"] {
        expected.push(format!("semiclassical_g_beta{beta}_hbar{hbar}.csv"));
        expected.push(format!("semiclassical_w_beta{beta}_hbar{hbar}.csv"));
    }
    expected.sort();
    assert_eq!(names, expected);

    let report: Value = serde_json::from_slice(&std::fs::read(dir.join("fig4_report.json")).unwrap()).unwrap();
    let comparisons = report["comparisons"].as_array().unwrap();
    assert_eq!(comparisons.len(), 4);
    for c in comparisons {
        let l1 = c["l1"].as_f64().unwrap();
        assert!((0.0..=2.0).contains(&l1));
    }
    // Every CSV starts with the manifest line.
    let hash = summary["manifest_hash"].as_str().unwrap();
    let csv = std::fs::read_to_string(dir.join(format!("classical_w_beta{beta}.csv"))).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# manifest {hash}"));
}

#[test]
fn compare_of_a_density_with_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    run_into(&run, "1", &["classical"]);
    let csv = files(&run)
        .into_keys()
        .find(|n| n.starts_with("classical_w_"))
        .unwrap();
    let path = run.join(csv);
    let cmp = tmp.path().join("cmp");
    let p = path.to_str().unwrap();
    run_into(&cmp, "1", &["compare", p, p]);
    let report: Value = serde_json::from_slice(&std::fs::read(cmp.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["l1"].as_f64().unwrap(), 0.0);
}

#[test]
fn flags_override_the_environment_which_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = quick_config();
    let read_seed = |dir: &Path| -> u64 {
        let m: Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        m["config"]["seed"].as_u64().unwrap()
    };
    let env_dir = tmp.path().join("env");
    let out = chaowork(
        &["--config", config.to_str().unwrap(), "--out", env_dir.to_str().unwrap(), "classical"],
        &[("CHAOWORK_SEED", "11")],
    );
    assert!(out.status.success());
    assert_eq!(read_seed(&env_dir), 11);

    let flag_dir = tmp.path().join("flag");
    let out = chaowork(
        &["--config", config.to_str().unwrap(), "--seed", "12", "--out", flag_dir.to_str().unwrap(), "classical"],
        &[("CHAOWORK_SEED", "11")],
    );
    assert!(out.status.success());
    assert_eq!(read_seed(&flag_dir), 12);
}

#[test]
fn invalid_settings_exit_with_code_two_and_a_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "half_len = 0\n").unwrap();
    let out = chaowork(&["--config", bad.to_str().unwrap(), "classical"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stdout_json(&out);
    assert_eq!(err["error"]["kind"], "RangeError");
    assert_eq!(err["error"]["field"], "half_len");

    std::fs::write(&bad, "betas = [0.1,\n").unwrap();
    let out = chaowork(&["--config", bad.to_str().unwrap(), "classical"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stdout_json(&out);
    assert_eq!(err["error"]["kind"], "ParseError");
    assert!(err["error"]["line"].as_u64().is_some());

    let missing = tmp.path().join("missing.toml");
    let out = chaowork(&["--config", missing.to_str().unwrap(), "classical"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "IoError");
}

#[test]
fn validate_config_accepts_the_shipped_config_and_rejects_bad_values() {
    let quick = std::fs::read_to_string(quick_config()).unwrap();
    let cfg = validate_config(&quick).unwrap();
    assert_eq!(cfg.half_len, 64);
    assert_eq!(cfg.hbars, vec![1.0]);
    assert!(validate_config("").is_ok());
    for (raw, field) in [
        ("betas = [-1.0]", "betas"),
        ("hbars = [0.0]", "hbars"),
        ("sigma = 0.0", "sigma"),
        ("semiclassical_samples = 0", "semiclassical_samples"),
    ] {
        match validate_config(raw) {
            Err(Error::Range { field: f, .. }) => assert_eq!(f, field, "{raw}"),
            other => panic!("{raw}: {other:?}"),
        }
    }
    assert!(matches!(validate_config("betas = \"hot\""), Err(Error::Parse { .. })));
}
