use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn psg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psg"))
        .args(args)
        .output()
        .expect("psg runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write_generators(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn check_sy_family() {
    let out = psg(&["check", "--family", "sy", "--no-timings"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], "psjson/1");
    assert_eq!(r["pcb"]["verdict"], "Bounded");
    let criteria = r["connectedness"]["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 3);
    assert!(criteria.iter().all(|c| c["covered"] == false));
    assert!(r["affine"]["upper_bound"]["AtLeast"].as_u64().unwrap() >= 2);
    assert!(r["timings"].is_null());
}

#[test]
fn check_quadratic_input_is_connected() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_generators(
        dir.path(),
        "g.json",
        r#"{ "generators": [ [[0,0],[0,0],[1,0]], [[0,0],[0,0],[0.5,0]], [[0,0],[0,0],[0.25,0]] ] }"#,
    );
    let out = psg(&["check", "--input", &file]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["connectedness"]["verdict"]["Connected"]["by"].is_string());
}

#[test]
fn undecided_results_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_generators(
        dir.path(),
        "g.json",
        r#"{ "generators": [ [[0,0],[0,0],[1,0]], [[-0.5,0],[0,0],[1,0]] ] }"#,
    );
    let out = psg(&["check", "--input", &file, "--no-timings"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["pcb"]["verdict"], "Undecided");
}

#[test]
fn usage_and_domain_errors() {
    assert_eq!(psg(&["check"]).status.code(), Some(64));
    assert_eq!(psg(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(psg(&["check", "--family", "nope"]).status.code(), Some(64));
    assert_eq!(psg(&["check", "--family", "sy", "--input", "x.json"]).status.code(), Some(64));
    assert_eq!(psg(&["render", "--family", "sy", "--resolution", "10"]).status.code(), Some(64));
    let missing = psg(&["check", "--input", "/nonexistent/generators.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
    assert_eq!(psg(&["check", "--family", "fincomp:1,0.25,2"]).status.code(), Some(1));
    assert_eq!(psg(&["check", "--family", "logistic:1,1,5"]).status.code(), Some(1));
    assert_eq!(psg(&["--help"]).status.code(), Some(0));
}

#[test]
fn construct_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    for family in ["sy", "figure1", "fincomp:2,0.25,13", "countprop:0.25,3", "logistic:1,1,4;2,1,6.75", "perturb"] {
        let out = psg(&["construct", "--family", family]);
        assert_eq!(out.status.code(), Some(0), "{family}");
        let file = write_generators(dir.path(), "c.json", std::str::from_utf8(&out.stdout).unwrap());
        let again = psg(&["construct", "--input", &file]);
        assert_eq!(again.stdout, out.stdout, "{family}");
    }
}

#[test]
fn render_writes_square_images() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("imgs");
    let out = psg(&[
        "render",
        "--family",
        "figure1",
        "--resolution",
        "128",
        "--word-len",
        "3",
        "--points",
        "5000",
        "--png",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let artifacts = json(&out)["artifacts"].as_array().unwrap().clone();
    assert_eq!(artifacts.len(), 8);
    let ppm = std::fs::read(out_dir.join("julia.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n128 128\n255\n"));
    assert_eq!(ppm.len(), b"P6\n128 128\n255\n".len() + 128 * 128 * 3);
    assert!(out_dir.join("sample.png").exists());
}

#[test]
fn analyze_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let args = [
        "analyze",
        "--family",
        "figure1",
        "--resolution",
        "256",
        "--word-len",
        "3",
        "--points",
        "20000",
        "--seed",
        "7",
        "--margin",
        "0.1",
        "--no-timings",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let first = psg(&args);
    assert_eq!(first.status.code(), Some(0));
    let images: Vec<Vec<u8>> = ["julia.ppm", "escape.ppm", "sample.ppm"]
        .iter()
        .map(|f| std::fs::read(out_dir.join(f)).unwrap())
        .collect();
    let second = psg(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(first.stdout, second.stdout);
    for (f, before) in ["julia.ppm", "escape.ppm", "sample.ppm"].iter().zip(images) {
        assert_eq!(std::fs::read(out_dir.join(f)).unwrap(), before, "{f}");
    }
    let r = json(&first);
    assert_eq!(r["connectedness"]["verdict"], "DisconnectedEvidence");
    assert!(r["hyperbolicity"]["verdict"]["Evidence"].is_object());
    let report = std::fs::read(out_dir.join("report.json")).unwrap();
    assert_eq!(report, first.stdout);
}

#[test]
fn analyze_accepts_a_grid_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("r");
    let common = ["--family", "figure1", "--resolution", "256", "--word-len", "3", "--points", "5000", "--no-timings"];
    let render = psg(&[&["render"], &common[..], &["--out", out_dir.to_str().unwrap()]].concat());
    assert_eq!(render.status.code(), Some(0));
    let dump = out_dir.join("julia.psgrid");
    let direct = psg(&[&["analyze"], &common[..]].concat());
    let reused = psg(&[&["analyze"], &common[..], &["--raster", dump.to_str().unwrap()]].concat());
    assert_eq!(json(&direct)["topology"], json(&reused)["topology"]);
    let wrong = psg(&["analyze", "--family", "figure1", "--resolution", "128", "--raster", dump.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(1));
}
