//! Binary-invocation tests: exit codes, file outputs, and replay determinism
//! exactly as a user would hit them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn leaklab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leaklab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary must launch")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// 12 tiny trials: enough for seg/select and fast to generate.
fn tiny_dataset(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    let out = leaklab(
        &[
            "generate",
            "--seed",
            "7",
            "--trials",
            "12",
            "--channels",
            "2",
            "--trial-seconds",
            "4",
            "--out",
            data.to_str().unwrap(),
            "--quiet",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    data
}

#[test]
fn generate_is_byte_deterministic_and_readable_back() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        [
            "generate",
            "--seed",
            "7",
            "--trials",
            "8",
            "--channels",
            "2",
            "--trial-seconds",
            "4",
            "--out",
            out,
            "--quiet",
        ]
        .map(String::from)
    };
    for out in ["a", "b"] {
        let args: Vec<String> = args(out).into();
        let strs: Vec<&str> = args.iter().map(String::as_str).collect();
        let res = leaklab(&strs, dir.path());
        assert_eq!(code(&res), 0, "{}", stderr(&res));
    }
    let a = std::fs::read(dir.path().join("a/signals.f32")).unwrap();
    let b = std::fs::read(dir.path().join("b/signals.f32")).unwrap();
    assert_eq!(a, b, "same seed must write identical signal bytes");

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["sampling_rate_hz"], 128.0);
    assert_eq!(meta["trials"].as_array().unwrap().len(), 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert!(
        manifest["finished_at_epoch_secs"].is_u64(),
        "manifest must be finalized"
    );
}

#[test]
fn odd_trial_count_with_balanced_labels_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = leaklab(
        &["generate", "--trials", "41", "--balanced", "--out", "x"],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("even trial count"));
}

#[test]
fn seg_run_writes_report_summary_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(dir.path());
    let out = leaklab(
        &[
            "run",
            "--exp",
            "seg",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "3",
            "--segments",
            "4,1",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("Segmentation sweep"),
        "summary table must print"
    );
    for file in [
        "r/segmentation_3.report.json",
        "r/segmentation_3.summary.md",
        "r/segmentation_3.curve.csv",
        "r/segmentation_3.manifest.json",
    ] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("r/segmentation_3.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["kind"], "segmentation");
    assert_eq!(report["master_seed"], 3);
}

#[test]
fn indivisible_segment_length_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(dir.path());
    let out = leaklab(
        &[
            "run",
            "--exp",
            "seg",
            "--data",
            data.to_str().unwrap(),
            "--segments",
            "3",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn phantom_rejects_axis_and_suite_rejects_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = leaklab(
        &[
            "run",
            "--exp",
            "select",
            "--phantom",
            "--axis",
            "valence",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("pre-labeled"));

    let out = leaklab(
        &["run", "--exp", "suite", "--data", "somewhere", "--out", "r"],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn replaying_a_manifest_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(dir.path());
    let run = |out_dir: &str, extra: &[&str]| {
        let mut args = vec![
            "run",
            "--exp",
            "seg",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out_dir,
            "--quiet",
        ];
        args.extend_from_slice(extra);
        let out = leaklab(&args, dir.path());
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    };
    run("r1", &["--segments", "4,1"]);
    // no --segments here: the manifest's resolved config must carry it
    run("r2", &["--config", "r1/segmentation_3.manifest.json"]);
    let load = |p: &str| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(p)).unwrap()).unwrap();
        v["wall_time_secs"] = 0.into();
        v
    };
    assert_eq!(
        load("r1/segmentation_3.report.json"),
        load("r2/segmentation_3.report.json"),
        "replay from the manifest must reproduce the report"
    );
}

#[test]
fn suite_runs_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{
  "phantom": {"n_trials": 12, "n_channels": 2, "trial_seconds": 4.0},
  "seg": {"segment_seconds": [4.0, 1.0]},
  "tune": {"grid": [{"k": 1, "metric": "euclidean", "standardize": false},
                    {"k": 3, "metric": "manhattan", "standardize": true}]}
}"#,
    )
    .unwrap();
    let out = leaklab(
        &[
            "run",
            "--exp",
            "suite",
            "--phantom",
            "--seeds",
            "2",
            "--seed",
            "9",
            "--config",
            "cfg.json",
            "--out",
            "r",
            "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("r/suite_9.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["kind"], "suite");
    assert_eq!(report["n_seeds_completed"], 2);
    assert_eq!(report["n_seeds_failed"], 0);
    for file in [
        "r/suite_9.curve.csv",
        "r/suite_9.tables.csv",
        "r/suite_9.summary.md",
    ] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
}

#[test]
fn tuning_mode_flag_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = leaklab(
        &[
            "run",
            "--exp",
            "tune",
            "--phantom",
            "--mode",
            "sideways",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("wrong or correct"));
}

fn write_audit_files(dir: &Path) {
    std::fs::write(
        dir.join("groups.csv"),
        "row_id,group_id\n0,100\n1,100\n2,200\n3,200\n",
    )
    .unwrap();
    // group 100 straddles fold 0's sides
    std::fs::write(
        dir.join("leaky.csv"),
        "row_id,fold_id,side\n0,0,test\n1,0,train\n2,0,train\n3,0,train\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("clean.csv"),
        "row_id,fold_id,side\n0,0,test\n1,0,test\n2,0,train\n3,0,train\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("orphan.csv"),
        "row_id,group_id\n0,100\n1,100\n2,200\n9,200\n",
    )
    .unwrap();
}

#[test]
fn audit_distinguishes_leaky_clean_and_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    write_audit_files(dir.path());

    let out = leaklab(
        &["audit", "--plan", "leaky.csv", "--groups", "groups.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 10, "{}", stderr(&out));
    let verdict: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("audit prints a JSON report");
    assert_eq!(verdict["leaky"], true);
    assert_eq!(verdict["offending_groups"][0]["group_id"], 100);

    let out = leaklab(
        &["audit", "--plan", "clean.csv", "--groups", "groups.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = leaklab(
        &["audit", "--plan", "clean.csv", "--groups", "orphan.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("row ids differ"));

    let out = leaklab(
        &["audit", "--plan", "groups.csv", "--groups", "groups.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "header mismatch must be a format error");
}

#[test]
fn report_command_rerenders_an_existing_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(dir.path());
    let out = leaklab(
        &[
            "run",
            "--exp",
            "select",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            "r",
            "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = leaklab(
        &["report", "r/selection_4.report.json", "--out", "rr"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Feature selection"));
    let rerendered = dir.path().join("rr/selection_4.summary.md");
    let original = dir.path().join("r/selection_4.summary.md");
    assert_eq!(
        std::fs::read_to_string(rerendered).unwrap(),
        std::fs::read_to_string(original).unwrap(),
        "re-rendering must be a pure projection of the report file"
    );

    let out = leaklab(&["report", "missing.report.json"], dir.path());
    assert_eq!(code(&out), 3, "missing input is an I/O error");
}
