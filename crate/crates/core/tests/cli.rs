use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmp-features"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn pipeline(out: &Path, seed: &str) {
    let o = out.to_str().unwrap();
    for cmd in ["synth", "extract", "regen", "rl"] {
        let res = run(&[cmd, "--out", o, "--seed", seed]);
        assert_eq!(code(&res), 0, "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
    }
}

const OUTPUTS: [&str; 11] = [
    "truth.json",
    "demos/demo_001.csv",
    "demos/demo_010.csv",
    "features.json",
    "surface.csv",
    "surface.json",
    "regen.csv",
    "metrics.json",
    "comparison.csv",
    "episode.jsonl",
    "learning_curve.csv",
];

#[test]
fn default_pipeline_writes_everything_and_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "7");
    pipeline(b.path(), "7");
    for f in OUTPUTS.iter().chain(&["rl.json", "comparison.json"]) {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }

    let features = json(&a.path().join("features.json"));
    assert_eq!(features["M"], 1.0);
    let (d, k) = (features["D_M"].as_f64().unwrap(), features["K_M"].as_f64().unwrap());
    let zeta = features["zeta"].as_f64().unwrap();
    assert!((zeta - d / (2.0 * k.sqrt())).abs() < 1e-12);

    let surface = json(&a.path().join("surface.json"));
    assert_eq!(surface["n_demos"], 10);
    assert_eq!(surface["k_gain"], 20.0);
    let csv = std::fs::read_to_string(a.path().join("surface.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("d_m,k_m,sum_d,similarity,objective"));
    assert_eq!(lines.count(), 3600);

    let metrics = json(&a.path().join("metrics.json"));
    let (m, mm) = (metrics["d_mean_m"].as_f64().unwrap(), metrics["d_mean_mm"].as_f64().unwrap());
    assert!((m * 1e3 - mm).abs() < 1e-12);

    let comparison = std::fs::read_to_string(a.path().join("comparison.csv")).unwrap();
    let methods: Vec<&str> = comparison.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["Ours", "Hrstc1", "Hrstc2", "Hrstc3", "Hrstc4"]);

    let episode = std::fs::read_to_string(a.path().join("episode.jsonl")).unwrap();
    let records: Vec<Value> = episode.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 1001);
    for key in ["t", "y", "yd", "ydd", "a", "r"] {
        assert!(records[0].get(key).is_some(), "missing {key}");
    }
    let last = records.last().unwrap();
    let running: f64 = records[..1000].iter().map(|r| r["r"].as_f64().unwrap()).sum();
    let total = last["total_return"].as_f64().unwrap();
    let terminal = last["terminal_reward"].as_f64().unwrap();
    assert!((running + terminal - total).abs() < 1e-9);

    let curve = std::fs::read_to_string(a.path().join("learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 101);
    let rl = json(&a.path().join("rl.json"));
    assert_eq!(rl["total_return"].as_f64().unwrap(), total);
}

#[test]
fn seeds_change_the_synthetic_demos() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        assert_eq!(code(&run(&["synth", "--out", dir.path().to_str().unwrap(), "--seed", seed, "--count", "2"])), 0);
    }
    let x = std::fs::read(a.path().join("demos/demo_002.csv")).unwrap();
    let y = std::fs::read(b.path().join("demos/demo_002.csv")).unwrap();
    assert_ne!(x, y);
    assert!(!a.path().join("demos/demo_003.csv").exists());
}

#[test]
fn metrics_command_matches_regen() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["synth", "--out", o, "--count", "3"])), 0);
    assert_eq!(code(&run(&["extract", "--out", o, "--grid-count", "8", "--no-refine"])), 0);
    assert_eq!(code(&run(&["regen", "--out", o])), 0);
    let from_regen = json(&dir.path().join("metrics.json"));
    let regen = dir.path().join("regen.csv");
    let demo = dir.path().join("demos/demo_001.csv");
    let res = run(&["metrics", "--out", o, "--regen", regen.to_str().unwrap(), "--demo", demo.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report = json(&dir.path().join("metrics.json"));
    for key in ["d_mean_m", "d_mean_mm", "a_peak", "goal_error_m", "goal_error_mm"] {
        let (a, b) = (from_regen[key].as_f64().unwrap(), report[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{key}: {a} vs {b}");
    }
}

#[test]
fn regen_to_a_new_goal_ends_there() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["synth", "--out", o, "--count", "2", "--noise", "0"])), 0);
    std::fs::write(
        dir.path().join("features.json"),
        r#"{"M": 1.0, "D_M": 40.0, "K_M": 400.0, "zeta": 1.0}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["regen", "--out", o, "--goal", "0.5,0.1,1.0"])), 0);
    let csv = std::fs::read_to_string(dir.path().join("regen.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    // The regenerated path lives in the demo frame shifted to start at the origin.
    let truth = json(&dir.path().join("truth.json"));
    let start: Vec<f64> = truth["spec"]["start"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let goal = [0.5 - start[0], 0.1 - start[1], 1.0 - start[2]];
    for a in 0..3 {
        assert!((last[1 + a] - goal[a]).abs() < 2e-3, "axis {a}: {} vs {}", last[1 + a], goal[a]);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();

    // Fewer than two demos is a precondition failure.
    assert_eq!(code(&run(&["extract", "--out", o])), 3);
    assert_eq!(code(&run(&["synth", "--out", o, "--count", "1"])), 0);
    assert_eq!(code(&run(&["extract", "--out", o])), 3);

    // Every cell of an explicitly unstable grid diverges.
    assert_eq!(code(&run(&["synth", "--out", o, "--count", "3"])), 0);
    let cfg = dir.path().join("unstable.toml");
    std::fs::write(
        &cfg,
        "[d_m_grid]\nmin = 1e6\nmax = 1e7\ncount = 2\n[k_m_grid]\nmin = 1e9\nmax = 1e10\ncount = 2\n",
    )
    .unwrap();
    let res = run(&["extract", "--out", o, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));

    // Unreadable input and argument errors.
    assert_eq!(code(&run(&["extract", "--out", o, "missing_a.csv", "missing_b.csv"])), 1);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,x,y,z\n0,0,0,0\nzero,1,1,1\n").unwrap();
    assert_eq!(code(&run(&["extract", "--out", o, bad.to_str().unwrap(), bad.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["regen", "--out", o, "--goal", "1,2"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);

    let cfg = dir.path().join("typo.json");
    std::fs::write(&cfg, r#"{"k_gian": 3}"#).unwrap();
    assert_eq!(code(&run(&["synth", "--out", o, "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let other = dir.path().join("elsewhere");
    std::fs::write(&cfg, format!("seed = 3\nout = {:?}\n[synth]\ncount = 4\n", other.to_str().unwrap())).unwrap();
    assert_eq!(code(&run(&["synth", "--config", cfg.to_str().unwrap(), "--count", "2"])), 0);
    assert!(other.join("demos/demo_002.csv").exists());
    assert!(!other.join("demos/demo_003.csv").exists());
    assert_eq!(json(&other.join("truth.json"))["seed"], 3);
}
