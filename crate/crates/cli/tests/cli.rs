//! End-to-end tests for the `canopy` binary: every subcommand against real
//! files in a temp directory, plus the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn canopy(dir: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_canopy"));
    cmd.current_dir(dir);
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn canopy");
    assert!(
        out.status.success(),
        "command failed ({:?}):\nstdout: {}\nstderr: {}",
        cmd.get_args().collect::<Vec<_>>(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn exit_code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().expect("spawn canopy");
    let code = out.status.code().expect("exit code");
    (code, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_scene(dir: &Path, cloud_fraction: f64) -> std::path::PathBuf {
    let spec = format!(
        r#"{{
            "width": 48, "height": 48, "seed": 11,
            "background": "grass",
            "regions": [
                {{"material": "tree", "shape": {{"kind": "rect", "x": 0, "y": 0, "w": 48, "h": 20}}}},
                {{"material": "builtup", "shape": {{"kind": "rect", "x": 28, "y": 32, "w": 16, "h": 12}}}}
            ],
            "n_observations": 3,
            "noise_sigma": 0.02,
            "cloud_fraction": {cloud_fraction}
        }}"#
    );
    let path = dir.join("scene.json");
    fs::write(&path, spec).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pipeline_stages_chain_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scene(dir, 0.1);

    run_ok(canopy(dir).args([
        "synth",
        "--spec",
        "scene.json",
        "--out",
        "data",
        "--labels-per-class",
        "60",
    ]));
    for f in ["obs_00.msr", "cloud_00.msr", "truth.msr", "labels.csv"] {
        assert!(dir.join("data").join(f).exists(), "missing data/{f}");
    }

    run_ok(canopy(dir).args([
        "composite",
        "data/obs_00.msr=data/cloud_00.msr",
        "data/obs_01.msr=data/cloud_01.msr",
        "data/obs_02.msr=data/cloud_02.msr",
        "--out",
        "composite.msr",
        "--max-cloud-fraction",
        "0.4",
    ]));

    run_ok(canopy(dir).args(["indices", "--input", "composite.msr", "--out", "stack.msr"]));
    run_ok(canopy(dir).args(["mask", "--input", "stack.msr", "--out", "mask.msr"]));
    run_ok(canopy(dir).args([
        "train",
        "--features",
        "stack.msr",
        "--labels",
        "data/labels.csv",
        "--out",
        "model.json",
        "--n-trees",
        "25",
    ]));

    let model = read_json(&dir.join("model.json"));
    assert_eq!(model["n_trees"].as_u64(), None); // trees are stored, not counted
    assert_eq!(model["trees"].as_array().unwrap().len(), 25);
    assert!(model["seed"].is_number());
    assert!(model["provenance"]["parameters"]["params"]["seed"].is_number());

    run_ok(canopy(dir).args([
        "classify",
        "--model",
        "model.json",
        "--features",
        "stack.msr",
        "--mask",
        "mask.msr",
        "--out",
        "classmap.msr",
        "--ppm",
        "classmap.ppm",
    ]));
    let ppm = fs::read(dir.join("classmap.ppm")).unwrap();
    assert_eq!(&ppm[..2], b"P6");

    run_ok(canopy(dir).args([
        "evaluate",
        "--predicted",
        "classmap.msr",
        "--truth",
        "data/truth.msr",
        "--out",
        "eval.json",
    ]));
    let eval = read_json(&dir.join("eval.json"));
    assert!(eval["accuracy"].as_f64().unwrap() >= 0.9);
    assert!(eval["n_evaluated"].as_u64().unwrap() > 0);
    assert!(eval["provenance"]["tool"].as_str() == Some("canopy"));

    // Same map scored against the sampled point labels instead of full truth.
    run_ok(canopy(dir).args([
        "evaluate",
        "--predicted",
        "classmap.msr",
        "--labels",
        "data/labels.csv",
        "--out",
        "eval_labels.json",
    ]));
    assert!(read_json(&dir.join("eval_labels.json"))["accuracy"].as_f64().unwrap() >= 0.9);

    run_ok(canopy(dir).args(["area", "--input", "classmap.msr", "--out", "area.json"]));
    let area = read_json(&dir.join("area.json"));
    let tree = area["tree_pixels"].as_u64().unwrap();
    let nontree = area["nontree_pixels"].as_u64().unwrap();
    let masked = area["masked_pixels"].as_u64().unwrap();
    assert_eq!(tree + nontree + masked, 48 * 48);
    assert!(area["tree_area_acres"].as_f64().unwrap() > 0.0);

    run_ok(canopy(dir).args(["render", "--input", "classmap.msr", "--out", "render.ppm"]));
    assert_eq!(&fs::read(dir.join("render.ppm")).unwrap()[..2], b"P6");

    // A model trained on a feature subset still classifies a full stack.
    run_ok(canopy(dir).args([
        "train",
        "--features",
        "stack.msr",
        "--labels",
        "data/labels.csv",
        "--out",
        "model_sub.json",
        "--feature-set",
        "bands+NDVI",
        "--n-trees",
        "10",
    ]));
    run_ok(canopy(dir).args([
        "classify",
        "--model",
        "model_sub.json",
        "--features",
        "stack.msr",
        "--out",
        "classmap_sub.msr",
    ]));
}

#[test]
fn run_command_writes_the_full_report_set() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scene(dir, 0.1);

    run_ok(canopy(dir).args([
        "run",
        "--scene",
        "scene.json",
        "--out",
        "out",
        "--max-cloud-fraction",
        "0.4",
        "--n-trees",
        "25",
        "--labels-per-class",
        "60",
    ]));
    for f in [
        "config.json",
        "model.json",
        "classmap.msr",
        "classmap.ppm",
        "eval_report.json",
        "area_report.json",
        "report.txt",
    ] {
        assert!(dir.join("out").join(f).exists(), "missing out/{f}");
    }
    let eval = read_json(&dir.join("out/eval_report.json"));
    assert!(eval["accuracy"].as_f64().unwrap() >= 0.9);
    let report = fs::read_to_string(dir.join("out/report.txt")).unwrap();
    assert!(report.contains("confusion matrix"));
    assert!(report.contains("tree canopy area"));
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let (code, _) = exit_code(canopy(dir).args(["frobnicate"]));
    assert_eq!(code, 2);

    let (code, stderr) = exit_code(canopy(dir).args([
        "evaluate",
        "--predicted",
        "p.msr",
        "--truth",
        "t.msr",
        "--labels",
        "l.csv",
    ]));
    assert_eq!(code, 2, "stderr: {stderr}");

    let (code, stderr) = exit_code(canopy(dir).args(["evaluate", "--predicted", "p.msr"]));
    assert_eq!(code, 2, "stderr: {stderr}");

    write_scene(dir, 0.0);
    let (code, stderr) = exit_code(canopy(dir).args([
        "synth",
        "--spec",
        "scene.json",
        "--out",
        "data",
        "--labels-per-class",
        "0",
    ]));
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("validation"));
}

#[test]
fn missing_and_malformed_inputs_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let (code, stderr) = exit_code(canopy(dir).args(["area", "--input", "missing.msr"]));
    assert_eq!(code, 3, "stderr: {stderr}");

    fs::write(dir.join("garbage.msr"), b"NOTMSR##rest").unwrap();
    let (code, stderr) = exit_code(canopy(dir).args(["area", "--input", "garbage.msr"]));
    assert_eq!(code, 3, "stderr: {stderr}");
    assert!(stderr.contains("format"));
}

#[test]
fn failed_pipeline_stages_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scene(dir, 0.3);

    run_ok(canopy(dir).args(["synth", "--spec", "scene.json", "--out", "data"]));
    let (code, stderr) = exit_code(canopy(dir).args([
        "composite",
        "data/obs_00.msr=data/cloud_00.msr",
        "data/obs_01.msr=data/cloud_01.msr",
        "data/obs_02.msr=data/cloud_02.msr",
        "--out",
        "composite.msr",
        "--max-cloud-fraction",
        "0.05",
    ]));
    assert_eq!(code, 4, "stderr: {stderr}");
    assert!(stderr.contains("composite"));
}
