//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::Path;
use std::time::Instant;

use common::{rel_err, TRUTH};
use dmp_features::dmp::{fit_model, rollout};
use dmp_features::objective::{distance_error, evaluate_metrics, similarity};
use dmp_features::rl::{demo_task, rollout_policy, search_policy_with, CemConfig, Policy};
use dmp_features::trajectory::smooth_and_differentiate;
use dmp_features::{
    damping_ratio, extract_features, BasisConfig, DynamicFeatures, Extraction, ExtractionConfig, KinematicTrajectory,
    TimedTrajectory, Vec3,
};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn basis() -> BasisConfig {
    BasisConfig::new(100, 4.6).unwrap()
}

fn family(seed: u64) -> Vec<KinematicTrajectory> {
    common::synthetic_family(seed)
}

fn zeta_table(r: &mut Report) {
    let rows = [
        (25.0, 156.25, 1.00),
        (10.0, 200.0, 0.35),
        (100.0, 20.0, 11.18),
        (4.0, 4.0, 1.00),
        (10.73, 20.71, 1.18),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (d, k, expected) in rows {
        let z = damping_ratio(&DynamicFeatures::ratios(d, k).unwrap()).unwrap();
        worst = worst.max((z - expected).abs());
        detail.push(format!("({d}, {k}) -> {z:.4}"));
    }
    r.check("damping ratio table", worst <= 0.005, format!("{}; max deviation {worst:.4}", detail.join(", ")));
}

fn recovery(r: &mut Report) -> Extraction {
    let mut first = None;
    let mut ok = true;
    let mut detail = Vec::new();
    let started = Instant::now();
    for seed in [1, 2, 3] {
        let ex = extract_features(&family(seed), &ExtractionConfig::default()).unwrap();
        let (ed, ek) = (rel_err(ex.features.d_m, TRUTH.0), rel_err(ex.features.k_m, TRUTH.1));
        ok &= ed <= 0.15 && ek <= 0.15;
        detail.push(format!(
            "seed {seed}: ({:.3}, {:.3}) err ({:.1}%, {:.1}%)",
            ex.features.d_m,
            ex.features.k_m,
            100.0 * ed,
            100.0 * ek
        ));
        first.get_or_insert(ex);
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    r.check("synthetic recovery", ok, format!("{}; {secs:.1} s", detail.join("; ")));
    first.unwrap()
}

fn similarity_null(r: &mut Report) {
    let demo = family(1).remove(0);
    let identical = vec![demo.clone(); 10];
    let s_same = similarity(&identical, TRUTH.0, TRUTH.1).unwrap();
    let scaled: Vec<_> = [1.0, 0.5, 2.0, 3.7]
        .iter()
        .map(|&c| demo.scaled(Vec3::new(c, c, c)))
        .collect();
    let s_scaled = similarity(&scaled, TRUTH.0, TRUTH.1).unwrap();
    r.check(
        "similarity null cases",
        s_same.abs() <= 1e-9 && s_scaled.abs() <= 1e-6,
        format!("identical {s_same:.3e}, scaled {s_scaled:.3e}"),
    );
}

fn surface_shape(r: &mut Report, ex: &Extraction) {
    let demos = family(1);
    let b = basis();
    let (d, k) = (ex.features.d_m, ex.features.k_m);
    let sum_d = |dd: f64, kk: f64| -> f64 { demos.iter().map(|x| distance_error(x, dd, kk, &b).unwrap()).sum() };
    let (soft, best) = (sum_d(0.1, 0.1), sum_d(d, k));
    let (s_low, s_best) = (similarity(&demos, d, k / 20.0).unwrap(), similarity(&demos, d, k).unwrap());
    r.check(
        "surface shape",
        soft > 5.0 * best && s_low > s_best,
        format!("sum_d(0.1, 0.1) = {soft:.4e} vs {best:.4e}; S(K/20) = {s_low:.4} vs S = {s_best:.4}"),
    );
}

fn lfd_round_trip(r: &mut Report) {
    let demos = family(1);
    let b = basis();
    let mut features = vec![(25.0, 156.25), (10.0, 200.0), (100.0, 20.0), (4.0, 4.0), TRUTH];
    // A sweep across the damping-ratio span.
    for zeta in [0.35, 0.7, 2.0, 5.0, 11.18] {
        for k in [4.0, 40.0, 200.0] {
            let d = 2.0 * zeta * f64::sqrt(k);
            features.push((d, k));
        }
    }
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0.0);
    for &(d, k) in &features {
        let f = DynamicFeatures::ratios(d, k).unwrap();
        for demo in &demos {
            let (model, _) = fit_model(demo, f, &b).unwrap();
            let regen = rollout(&model, &f, demo.steps(), None).unwrap();
            let ratio = evaluate_metrics(&regen, demo).unwrap().d_mean / demo.path_length();
            if ratio > worst {
                worst = ratio;
                worst_at = (d, k);
            }
        }
    }
    r.check(
        "LfD round trip",
        worst <= 0.02,
        format!(
            "{} feature sets x {} demos; worst d_mean / path = {:.3}% at ({:.2}, {:.2})",
            features.len(),
            demos.len(),
            100.0 * worst,
            worst_at.0,
            worst_at.1
        ),
    );
}

fn savgol_cubic(r: &mut Report) {
    let dt = 0.01;
    let samples: Vec<Vec3> = (0..201).map(|k| Vec3::new((k as f64 * dt).powi(3), 0.0, 0.0)).collect();
    let kin = smooth_and_differentiate(&TimedTrajectory::new(samples, dt).unwrap(), 21, 3).unwrap();
    let worst = (10..191)
        .map(|k| (kin.acceleration()[k].x - 6.0 * k as f64 * dt).abs())
        .fold(0.0, f64::max);
    r.check("savgol cubic exactness", worst <= 1e-6, format!("max interior acceleration error {worst:.3e}"));
}

fn dynamics_equivalence(r: &mut Report) {
    let b = basis();
    let f = DynamicFeatures::ratios(TRUTH.0, TRUTH.1).unwrap();
    let mut worst: f64 = 0.0;
    for demo in family(1).iter().take(3) {
        let (model, _) = fit_model(demo, f, &b).unwrap();
        let reference = rollout(&model, &f, demo.steps(), None).unwrap();
        let (env, _) = demo_task(demo, f, &b).unwrap();
        let ep = rollout_policy(&Policy::Forcing { basis: b.clone(), weights: model.weights.clone() }, &env).unwrap();
        for (s, (p, v)) in ep.states.iter().zip(reference.position().iter().zip(reference.velocity())) {
            worst = worst.max((s.y - *p).max_abs()).max((s.yd - *v).max_abs());
        }
    }
    r.check("dynamics equivalence", worst <= 1e-12, format!("max pointwise deviation {worst:.3e}"));
}

fn rl_comparison(r: &mut Report, ex: &Extraction) {
    let demo = family(1).remove(0);
    let b = basis();
    let cem = CemConfig::default();
    let started = Instant::now();
    let run = |f: DynamicFeatures| {
        let (env, model) = demo_task(&demo, f, &b).unwrap();
        let found = search_policy_with(&env, &b, &cem, Some(&model.weights), 11).unwrap();
        (found.episode.total_return, found.episode.goal_error(env.goal))
    };
    let (ours_return, ours_err) = run(ex.features);
    let (h4_return, h4_err) = run(DynamicFeatures::ratios(4.0, 4.0).unwrap());
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "policy search",
        ours_err < 0.01 && h4_return < ours_return && secs < 120.0,
        format!(
            "extracted: return {ours_return:.4}, goal error {:.2} mm; (4, 4): return {h4_return:.4}, goal error {:.2} mm; {secs:.1} s",
            1e3 * ours_err,
            1e3 * h4_err
        ),
    );
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out);
        } else {
            out.push(p);
        }
    }
}

fn determinism(r: &mut Report) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let o = dir.path().to_str().unwrap();
        for cmd in ["synth", "extract", "regen", "rl"] {
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_dmp-features"))
                .args([cmd, "--out", o, "--seed", "5"])
                .output()
                .unwrap()
                .status;
            assert!(status.success(), "{cmd} failed");
        }
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    collect_files(dirs[0].path(), &mut a);
    collect_files(dirs[1].path(), &mut b);
    let mut differing = Vec::new();
    for (x, y) in a.iter().zip(&b) {
        if std::fs::read(x).unwrap() != std::fs::read(y).unwrap() {
            differing.push(x.strip_prefix(dirs[0].path()).unwrap().display().to_string());
        }
    }
    let same_layout = a.len() == b.len() && !a.is_empty();
    r.check(
        "determinism",
        same_layout && differing.is_empty(),
        format!("{} files compared, {} differ {:?}", a.len(), differing.len(), differing),
    );
}

fn main() {
    let mut r = Report { failures: 0 };
    zeta_table(&mut r);
    let ex = recovery(&mut r);
    similarity_null(&mut r);
    surface_shape(&mut r, &ex);
    lfd_round_trip(&mut r);
    savgol_cubic(&mut r);
    dynamics_equivalence(&mut r);
    rl_comparison(&mut r, &ex);
    determinism(&mut r);
    println!("{} of 9 criteria failed", r.failures);
    if r.failures > 0 {
        std::process::exit(1);
    }
}

