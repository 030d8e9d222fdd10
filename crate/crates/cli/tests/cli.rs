//! End-to-end runs of the `dcflex` binary: artifacts and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn dcflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcflex")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen_demo(dir: &Path) {
    let out = dcflex(&["--quiet", "--out", dir.to_str().unwrap(), "gen-instance", "--demo"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

/// Copies a bundle and rewrites every data-center entry of `dc.json`.
fn edited_bundle(src: &Path, dst: &Path, edit: impl Fn(&mut serde_json::Value)) {
    std::fs::create_dir_all(dst).unwrap();
    for e in std::fs::read_dir(src).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), dst.join(e.file_name())).unwrap();
    }
    let path = dst.join("dc.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for dc in v["data_centers"].as_array_mut().unwrap() {
        edit(dc);
    }
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn full_pipeline_writes_manifested_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    gen_demo(&bundle);
    let run = tmp.path().join("run");
    let (b, r) = (bundle.to_str().unwrap(), run.to_str().unwrap());
    for args in [
        vec!["--out", r, "fit-signal", b],
        vec!["--out", r, "solve", b, "--export-mps"],
        vec!["--out", r, "simulate", b, "--solution", &format!("{r}/solution.json"), "--scenarios", "20"],
        vec!["--out", r, "compare", b, "--matrix", "modes"],
        vec!["--out", r, "report"],
    ] {
        let out = dcflex(&args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    for f in ["envelope.json", "solution.json", "model.mps", "simulation_summary.json", "compare.csv", "report.md"] {
        assert!(listed.contains(&f), "{f} not in manifest");
        assert!(run.join(f).is_file());
    }
    let commands = manifest["commands"].as_array().unwrap();
    assert_eq!(commands.len(), 5);
}

#[test]
fn seeds_and_flags_are_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = dcflex(&["--quiet", "--seed", "7", "--out", dir.to_str().unwrap(), "gen-instance", "--dcs", "4", "--slots", "6"]);
        assert_eq!(code(&out), 0);
    }
    for f in ["grid.json", "workload.csv", "dc.json", "signal.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let dc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("dc.json")).unwrap()).unwrap();
    assert_eq!(dc["data_centers"].as_array().unwrap().len(), 4);
    let quiet = dcflex(&["--quiet", "--out", tmp.path().join("s").to_str().unwrap(), "solve", a.to_str().unwrap()]);
    assert_eq!(code(&quiet), 0);
    assert!(quiet.stdout.is_empty());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    gen_demo(&bundle);
    let out_dir = tmp.path().join("out");
    let o = out_dir.to_str().unwrap();

    // no room for any load: the plan is infeasible
    let tight = tmp.path().join("tight");
    edited_bundle(&bundle, &tight, |dc| {
        dc["p_min"] = serde_json::json!(vec![0.0; 8]);
        dc["p_max"] = serde_json::json!(vec![0.01; 8]);
    });
    assert_eq!(code(&dcflex(&["--quiet", "--out", o, "solve", tight.to_str().unwrap()])), 2);

    // data centers attached to a bus that does not exist
    let dangling = tmp.path().join("dangling");
    edited_bundle(&bundle, &dangling, |dc| dc["bus"] = serde_json::json!(99));
    let out = dcflex(&["--quiet", "--out", o, "solve", dangling.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing bus 99"));

    let missing = tmp.path().join("nowhere");
    assert_eq!(code(&dcflex(&["--out", o, "solve", missing.to_str().unwrap()])), 4);
    let bad_cfg = tmp.path().join("bad.json");
    std::fs::write(&bad_cfg, "{ not json").unwrap();
    assert_eq!(code(&dcflex(&["--config", bad_cfg.to_str().unwrap(), "--out", o, "solve", bundle.to_str().unwrap()])), 4);
    assert_eq!(code(&dcflex(&["--backend", "gurobi", "--out", o, "solve", bundle.to_str().unwrap()])), 4);
    assert_eq!(code(&dcflex(&["--out", o, "solve", bundle.to_str().unwrap(), "--eps-p", "0.9"])), 4);
    assert_eq!(code(&dcflex(&["--no-such-flag"])), 4);
    assert_eq!(code(&dcflex(&["--help"])), 0);
}

#[test]
fn external_backend_is_driven_through_a_command() {
    // A stand-in "solver" that fails: the error must surface, not a panic.
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("bundle");
    gen_demo(&bundle);
    let out = dcflex(&["--quiet", "--backend", "cmd:false", "--out", tmp.path().join("o").to_str().unwrap(), "solve", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}
