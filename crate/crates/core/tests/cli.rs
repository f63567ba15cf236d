use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polarcomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarcomm")).args(args).output().unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const SMALL: &str = "N = [4, 16]\ntrials = 40\nprofile_samples = 200\nseed = 3\n";

#[test]
fn print_schema_is_json() {
    let out = polarcomm(&["--print-schema"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys = v["keys"].as_array().unwrap();
    assert!(keys.iter().any(|k| k["key"] == "max_anomaly_rate"));
}

#[test]
fn every_command_writes_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let expect: &[(&str, &[&str])] = &[
        ("profile", &["profile_N4_r1_none.json", "profile_N16_r2_receiver.json"]),
        ("plan", &["partition_N4_r1.json", "plan_N16.json"]),
        ("simulate", &["simulate_N4.json", "transcript_N16.json"]),
        ("verify", &["report_N4.json", "report_N16.json", "report.csv"]),
        ("rates", &["rates.json", "rates.csv"]),
        ("sweep", &["sweep.csv"]),
    ];
    for (cmd, files) in expect {
        let dir = tmp.path().join(cmd);
        let out = polarcomm(&[cmd, "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for f in *files {
            assert!(dir.join(f).exists(), "{cmd} did not write {f}");
        }
    }
    let csv = fs::read_to_string(tmp.path().join("verify/report.csv")).unwrap();
    assert!(csv.starts_with("model,N,round,metric,value,stderr\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    for cmd in ["verify", "simulate", "sweep"] {
        let mut snaps = Vec::new();
        for (i, w) in ["1", "4", "4"].iter().enumerate() {
            let dir = tmp.path().join(format!("{cmd}{i}"));
            let out = polarcomm(&[cmd, "--config", &cfg, "--out", dir.to_str().unwrap(), "--workers", w]);
            assert!(out.status.success());
            snaps.push(snapshot(&dir));
        }
        assert_eq!(snaps[0], snaps[1], "{cmd}");
        assert_eq!(snaps[1], snaps[2], "{cmd}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "N = [16]\ntrials = 30\nprofile_samples = 100\n");
    let run = |seed: &str, d: &str| {
        let dir = tmp.path().join(d);
        assert!(polarcomm(&["simulate", "--config", &cfg, "--out", dir.to_str().unwrap(), "--seed", seed])
            .status
            .success());
        fs::read(dir.join("simulate_N16.json")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
}

#[test]
fn config_errors_exit_2_with_record_and_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    for text in ["N = [6]\n", "unknown_key = 1\n", "p = 1.5\n"] {
        let cfg = config(tmp.path(), text);
        let out = polarcomm(&["plan", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(rec["error"]["exit_code"], 2);
        assert!(!dir.exists());
    }
    let out = polarcomm(&["plan", "--config", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = polarcomm(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn anomaly_threshold_exits_3_and_cleans_up() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "N = [4, 64]\ntrials = 20\nmax_anomaly_rate = 0.0\n");
    let dir = tmp.path().join("out");
    let out = polarcomm(&["simulate", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"]["kind"], "anomaly");
    assert!(!dir.exists());
}
