//! End-to-end checks of the command-line surface: exit codes, output
//! formats, and the serialized schedule shape.

use std::process::{Command, Output};

fn opticollect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opticollect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn steps_reports_all_published_counts() {
    let out = opticollect(&["steps", "--N", "1000", "--w", "64", "--g", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("o-ring  1998"), "{text}");
    assert!(text.contains("h-ring  407"), "{text}");
    assert!(text.contains("constructed 406"), "{text}");
    assert!(text.contains("bt      20"), "{text}");
    assert!(text.contains("4 (full tree) / 3"), "{text}");
}

#[test]
fn steps_rejects_too_few_nodes_with_exit_2() {
    let out = opticollect(&["steps", "--N", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 2"));
}

#[test]
fn unknown_model_is_a_config_error() {
    let out = opticollect(&["sweep", "--alg", "bt", "--N", "8", "--model", "mobilenet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown workload"));
}

#[test]
fn schedule_emits_the_documented_json_shape() {
    let out = opticollect(&["schedule", "--alg", "wrht", "--N", "15", "--w", "2"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert_eq!(value["algorithm"], "wrht");
    assert_eq!(value["n_nodes"], 15);
    let steps = value["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    assert_eq!(steps[0]["stage"], "reduce");
    assert_eq!(steps[1]["stage"], "all2all");
    assert_eq!(steps[2]["stage"], "broadcast");
    for step in steps {
        for transfer in step["transfers"].as_array().unwrap() {
            let wavelength = transfer["wavelength"].as_u64().unwrap();
            assert!(wavelength < 2);
            assert!(transfer["direction"] == "cw" || transfer["direction"] == "ccw");
            assert_eq!(transfer["fiber"], 0);
        }
    }
    // Usage summary goes to stderr so stdout stays machine-readable.
    assert!(String::from_utf8_lossy(&out.stderr).contains("wavelengths"));
}

#[test]
fn schedule_requires_a_single_point() {
    let out = opticollect(&["schedule", "--alg", "wrht", "--N", "8", "--N", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_on_generated_schedules() {
    let out = opticollect(&[
        "verify", "--alg", "wrht", "--alg", "ring", "--alg", "bt", "--alg", "rd", "--N", "13",
        "--N", "16",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 8);
}

#[test]
fn time_reports_the_closed_form_total() {
    let out = opticollect(&[
        "time", "--alg", "wrht", "--N", "1000", "--w", "64", "--model", "resnet50",
        "--no-all2all",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("steps:          4"), "{text}");
    assert!(text.contains("total time:     8.01000000e-2 s"), "{text}");
    assert!(text.contains("lower bound:    4 steps"), "{text}");
}

#[test]
fn electrical_time_uses_the_fat_tree_model() {
    let out = opticollect(&["time", "--alg", "rd", "--N", "8", "--model", "resnet50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("platform:       electrical fat tree"), "{text}");
    // 3 steps of 4*50us + 8e8/25G = 0.0322 s.
    assert!(text.contains("total time:     9.66000000e-2 s"), "{text}");
}

#[test]
fn sweep_writes_identical_csv_to_a_file() {
    let dir = std::env::temp_dir().join("opticollect-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.csv");
    let args = [
        "sweep", "--alg", "e-ring", "--alg", "rd", "--N", "16", "--N", "8", "--model",
        "googlenet", "--out",
    ];
    let out = opticollect(&args.iter().copied().chain([path.to_str().unwrap()]).collect::<Vec<_>>());
    assert!(out.status.success());
    let written = std::fs::read_to_string(&path).unwrap();
    let piped = opticollect(&args[..args.len() - 1]);
    assert_eq!(written, stdout(&piped));
    assert!(written.contains("e-ring,8,"), "{written}");
    assert!(written.contains("rd,16,"), "{written}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn table1_flags_the_unreproduced_reference_value() {
    let out = opticollect(&["table1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("407"), "{text}");
    assert!(text.contains("411"), "{text}");
    assert!(text.contains("unreproduced"), "{text}");
}

#[test]
fn fig2_summarizes_both_example_schedules() {
    let out = opticollect(&["fig2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("binary tree, N=15: 8 steps"), "{text}");
    assert!(text.contains("wrht, N=15, w=2: 3 steps"), "{text}");
    assert!(text.contains("[0..4] rep 2, [5..9] rep 7, [10..14] rep 12"), "{text}");
    assert!(text.matches("PASS").count() >= 2, "{text}");
}

#[test]
fn params_file_overrides_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join("opticollect-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("params.json");
    std::fs::write(
        &path,
        r#"{"wavelengths": 2, "workload": {"name": "googlenet"}}"#,
    )
    .unwrap();
    let out = opticollect(&[
        "--params",
        path.to_str().unwrap(),
        "steps",
        "--N",
        "15",
        "--alg",
        "wrht",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("N=15 w=2"));
    let overridden = opticollect(&[
        "--params",
        path.to_str().unwrap(),
        "steps",
        "--N",
        "15",
        "--w",
        "64",
        "--alg",
        "wrht",
    ]);
    assert!(stdout(&overridden).contains("N=15 w=64"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn bad_params_file_is_a_config_error() {
    let dir = std::env::temp_dir().join("opticollect-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"wavelengths": "many"}"#).unwrap();
    let out = opticollect(&["--params", path.to_str().unwrap(), "steps", "--N", "8"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}
