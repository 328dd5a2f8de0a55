use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn crnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnn")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by a signal")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const PLANT: &str = r#"{"n": 3, "m": 1, "p": 1,
    "W": [[0.5, -0.8, 0.2], [0.7, 0.3, -0.4], [-0.3, 0.6, 0.4]],
    "B": [[1], [0.5], [-0.4]], "C": [[0.6, -0.5, 0.8]]}"#;

#[test]
fn zero_weight_certifies() {
    let d = Dir::new();
    let m = d.file("zero.json", r#"{"n": 3, "W": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}"#);
    let out = d.path("r.json");
    let o = crnn(&["certify", "--model", s(&m), "--rate", "0.5", "--nonlin", "mone", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["feasible"], true);
    assert!(r["margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn skew_weight_is_refused() {
    let d = Dir::new();
    let m = d.file("skew4.json", r#"{"n": 2, "W": [[0, 4], [-4, 0]]}"#);
    let o = crnn(&["certify", "--model", s(&m), "--rate", "0.01", "--nonlin", "mone"]);
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["feasible"], false);
}

#[test]
fn tracking_design_simulates_and_verifies() {
    let d = Dir::new();
    let plant = d.file("plant.json", PLANT);
    let gains = d.path("g.json");
    let o = crnn(&["synth", "integral", "--model", s(&plant), "--rate", "0.2", "--observer-rate", "0.3", "--out", s(&gains)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&gains)["certificates"].as_array().unwrap().len(), 3);

    let o = crnn(&["verify", "--report", s(&gains), "--model", s(&plant)]);
    assert_eq!(code(&o), 0);

    let steps = d.file("steps.json", r#"{"starts": [0, 5], "levels": [[0.2], [-0.1]]}"#);
    let traj = d.path("traj.csv");
    let o = crnn(&[
        "simulate", "--model", s(&plant), "--gains", s(&gains), "--ref", s(&steps), "--horizon", "10", "--dt", "0.01",
        "--out", s(&traj),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x_1,x_2,x_3,xi_1,xi_2,xi_3,uext_1,y_1");
    assert_eq!(lines.count(), 1001);

    let o = crnn(&["epsilon-bound", "--model", s(&plant), "--gains", s(&gains)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn tampered_report_fails_verification() {
    let d = Dir::new();
    let plant = d.file("plant.json", PLANT);
    let rep = d.path("fb.json");
    assert_eq!(code(&crnn(&["synth", "feedback", "--model", s(&plant), "--rate", "0.2", "--out", s(&rep)])), 0);
    let mut r = json(&rep);
    let m = r["certificates"][0]["margin"].as_f64().unwrap();
    r["certificates"][0]["margin"] = Value::from(m + 1e-6);
    let bad = d.file("bad.json", &r.to_string());
    assert_eq!(code(&crnn(&["verify", "--report", s(&bad), "--model", s(&plant)])), 1);
    assert_eq!(code(&crnn(&["verify", "--report", s(&rep), "--model", s(&plant)])), 0);
}

#[test]
fn every_certifying_report_reverifies() {
    let d = Dir::new();
    let plant = d.file("plant.json", PLANT);
    let net = d.file(
        "net.json",
        r#"{"subsystems": [
            {"n": 2, "m": 1, "p": 1, "W": [[0.1, -0.3], [0.2, 0.1]], "B": [[1], [0]], "C": [[0.5, 0.5]], "D": [[0.1]]},
            {"n": 2, "m": 1, "p": 1, "W": [[-0.2, 0.3], [0.1, 0.2]], "B": [[0], [1]], "C": [[1, -0.5]]}],
            "coupling": [[0, 0.4], [-0.3, 0]]}"#,
    );
    let node = d.file("node.json", r#"{"n": 2, "W": [[0.2, -0.4], [0.3, 0.1]]}"#);
    let adj = d.file("adj.json", r#"{"A": [[0, 1, 1], [1, 0, 1], [1, 1, 0]], "normalize": true}"#);
    let cases: Vec<(Vec<&str>, &Path)> = vec![
        (vec!["certify", "--model", s(&plant), "--rate", "0.05"], &plant),
        (vec!["certify", "--model", s(&node), "--factor", "0.8", "--time", "disc", "--arch", "hopfield", "--nonlin", "cone"], &node),
        (vec!["max-rate", "--model", s(&node), "--tol", "1e-3"], &node),
        (vec!["synth", "observer", "--model", s(&plant), "--rate", "0.3"], &plant),
        (vec!["interconnect", "--model", s(&net), "--rate", "0.2"], &net),
        (vec!["graph", "certify", "--model", s(&node), "--adjacency", s(&adj), "--rate", "0.2"], &node),
    ];
    for (i, (args, model)) in cases.iter().enumerate() {
        let out = d.path(&format!("r{i}.json"));
        let mut full = args.clone();
        full.extend(["--out", s(&out)]);
        let o = crnn(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let o = crnn(&["verify", "--report", s(&out), "--model", s(model), "--tol", "1e-7"]);
        assert_eq!(code(&o), 0, "verify {args:?}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn parameterize_is_reproducible_and_certified() {
    let d = Dir::new();
    let (a, b) = (d.path("a.json"), d.path("b.json"));
    for out in [&a, &b] {
        assert_eq!(code(&crnn(&["parameterize", "--seed", "11", "--dim", "5", "--rate", "0.4", "--out", s(out)])), 0);
    }
    let (ra, rb) = (json(&a), json(&b));
    assert_eq!(ra["model"], rb["model"]);
    assert_eq!(ra["details"]["seed"], 11);
    assert_eq!(ra["details"]["generator"], "ChaCha8Rng");
    assert_eq!(code(&crnn(&["verify", "--report", s(&a), "--model", s(&a)])), 0);

    let o = crnn(&["parameterize", "--seed", "3", "--count", "6", "--jobs", "3"]);
    assert_eq!(code(&o), 0);
    let sweep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let seeds: Vec<u64> = sweep["instances"].as_array().unwrap().iter().map(|r| r["details"]["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![3, 4, 5, 6, 7, 8]);
}

#[test]
fn separation_bounds_hold_on_a_synthesized_loop() {
    let d = Dir::new();
    let plant = d.file("plant.json", PLANT);
    let gains = d.path("g.json");
    assert_eq!(code(&crnn(&["synth", "integral", "--model", s(&plant), "--rate", "0.2", "--out", s(&gains)])), 0);
    for scenario in ["nominal", "model-error", "moving"] {
        let o = crnn(&["check-bounds", "--model", s(&plant), "--gains", s(&gains), "--scenario", scenario, "--runs", "3", "--jobs", "2"]);
        assert_eq!(code(&o), 0, "{scenario}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn graph_simulation_writes_node_states() {
    let d = Dir::new();
    let node = d.file("node.json", r#"{"n": 2, "W": [[0.2, -0.4], [0.3, 0.1]]}"#);
    let adj = d.file("adj.json", r#"{"A": [[0, 1], [1, 0]], "normalize": true}"#);
    let init = d.file("init.json", r#"{"X0": [[1, -1], [0.5, 0]]}"#);
    let o = crnn(&["graph", "simulate", "--model", s(&node), "--adjacency", s(&adj), "--init", s(&init), "--horizon", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("t,x_1,x_2,x_3,x_4\n"));
}

#[test]
fn shape_errors_name_the_field() {
    let d = Dir::new();
    let m = d.file("bad.json", r#"{"n": 2, "W": [[1, 2], [3, 4, 5]]}"#);
    let o = crnn(&["certify", "--model", s(&m), "--rate", "0.1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("W:"));
    let m = d.file("bad2.json", r#"{"n": 2, "m": 2, "W": [[0, 0], [0, 0]], "B": [[1], [2]]}"#);
    let o = crnn(&["certify", "--model", s(&m), "--rate", "0.1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("B:"));
}

#[test]
fn malformed_inputs_never_crash() {
    let d = Dir::new();
    let good = d.file("good.json", PLANT);
    let bad_files = [
        "",
        "not json",
        "[]",
        "{}",
        r#"{"n": 0, "W": []}"#,
        r#"{"n": 2, "W": [[1, 2]]}"#,
        r#"{"n": 1, "W": [[1e400]]}"#,
        r#"{"n": 1, "W": [["a"]]}"#,
        r#"{"n": 1, "W": [[0]], "arch": "lstm"}"#,
        r#"{"n": 1, "W": [[0]], "time": "later"}"#,
        r#"{"n": 1, "W": [[0]], "activation": "leaky-relu:7"}"#,
        r#"{"n": 1, "W": [[0]], "extra": 1}"#,
        r#"{"n": 2, "p": 1, "W": [[0, 0], [0, 0]]}"#,
        r#"{"subsystems": [], "coupling": []}"#,
        r#"{"A": [[0, 1], [0, 0]]}"#,
        r#"{"starts": [1, 0], "levels": [[0], [1]]}"#,
        r#"{"K_f": [[1, 2, 3, 4]]}"#,
        r#"{"model": {"n": 1}}"#,
        r#"{"certificates": []}"#,
    ];
    let paths: Vec<PathBuf> = bad_files.iter().enumerate().map(|(i, t)| d.file(&format!("b{i}.json"), t)).collect();
    let missing = d.path("missing.json");
    let mut runs = 0;
    for p in paths.iter().chain([&missing]) {
        let b = s(p);
        let g = s(&good);
        let invocations: Vec<Vec<&str>> = vec![
            vec!["certify", "--model", b, "--rate", "0.1"],
            vec!["max-rate", "--model", b],
            vec!["synth", "feedback", "--model", b, "--rate", "0.1"],
            vec!["synth", "integral", "--model", b, "--rate", "0.1"],
            vec!["epsilon-bound", "--model", g, "--gains", b],
            vec!["interconnect", "--model", b, "--rate", "0.1"],
            vec!["graph", "certify", "--model", g, "--adjacency", b, "--rate", "0.1"],
            vec!["graph", "simulate", "--model", b, "--adjacency", b],
            vec!["simulate", "--model", g, "--gains", b, "--horizon", "0.1"],
            vec!["simulate", "--model", g, "--ref", b, "--horizon", "0.1"],
            vec!["simulate", "--model", g, "--init", b, "--horizon", "0.1"],
            vec!["verify", "--report", b, "--model", g],
            vec!["check-bounds", "--model", g, "--gains", b, "--runs", "1", "--horizon", "0.5"],
        ];
        for args in invocations {
            let c = code(&crnn(&args));
            assert!((0..=3).contains(&c), "{args:?} exited with {c}");
            runs += 1;
        }
    }
    let flags: [&[&str]; 9] = [
        &["certify", "--model", s(&good), "--rate", "nan"],
        &["certify", "--model", s(&good), "--rate", "7"],
        &["certify", "--model", s(&good)],
        &["max-rate", "--model", s(&good), "--tol", "0"],
        &["simulate", "--model", s(&good), "--dt", "0"],
        &["simulate", "--model", s(&good), "--horizon", "-1"],
        &["simulate", "--model", s(&good), "--horizon", "1e300"],
        &["parameterize", "--dim", "0"],
        &["parameterize", "--rate", "1.5"],
    ];
    for args in flags {
        assert_eq!(code(&crnn(args)), 2, "{args:?}");
    }
    assert_eq!(code(&crnn(&["no-such-command"])), 2);
    assert!(runs > 200);
}
