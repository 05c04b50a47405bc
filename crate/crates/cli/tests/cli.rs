use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_itof-forge"));
    c.env_remove("ITOF_FORGE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn itof-forge")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, seed: u64, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let seed = seed.to_string();
    let mut args = vec![
        "simulate", "--frames", "4", "--seed", &seed, "--out", s(&out), "--width", "40", "--height", "30",
    ];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn aggregate_rmse(path: &Path) -> f64 {
    report(path)["aggregate"]["rmse"].as_f64().unwrap()
}

#[test]
fn simulate_prints_manifest_and_writes_run_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let stdout = ok(&["simulate", "--frames", "3", "--seed", "1", "--out", s(&out), "--width", "16", "--height", "12"]);
    assert_eq!(stdout.trim(), s(&out.join("manifest.json")));
    let run = report(&out.join("run.json"));
    assert_eq!(run["subcommand"], "simulate");
    assert_eq!(run["config"]["seed"], 1);
    assert_eq!(run["config"]["n_frames"], 3);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a", 9, &[]);
    let b = simulate(dir.path(), "b", 9, &[]);
    let files = ["manifest.json", "frames/000002/gt_depth.pgm", "frames/000002/amb2_depth.pgm", "frames/000000/gray.pgm"];
    for f in files {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn dualfreq_on_noise_free_data_recovers_reference() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 2, &["--noise-free"]);
    let out = dir.path().join("dq");
    ok(&["unwrap", "--dataset", s(&ds), "--method", "dualfreq", "--out", s(&out)]);
    let rep = dir.path().join("dq.json");
    let table = ok(&["evaluate", "--dataset", s(&ds), "--corrected", s(&out), "--out", s(&rep)]);
    assert!(table.lines().next().unwrap().starts_with("split"));
    assert!(aggregate_rmse(&rep) <= 1e-6);
    assert!(dir.path().join("dq.kv").exists());
    assert!(dir.path().join("dq.run.json").exists());
    let summary = report(&out.join("000000/merge_report.json"));
    assert!(summary["cycle_histogram"].is_array());
}

#[test]
fn exact_oracle_gives_zero_correction_error() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 4, &["--noise-free"]);
    for method in ["regmerge", "segmerge"] {
        let out = dir.path().join(method);
        let oracle = if method == "regmerge" { "exact" } else { "binned" };
        // Disable the saturated branch so segmentation is exact as well.
        ok(&[
            "unwrap", "--dataset", s(&ds), "--method", method, "--oracle", oracle, "--out", s(&out),
            "--saturation-threshold", "6.25",
        ]);
        let rep = dir.path().join(format!("{method}.json"));
        ok(&["evaluate", "--dataset", s(&ds), "--corrected", s(&out), "--out", s(&rep)]);
        assert_eq!(aggregate_rmse(&rep), 0.0, "{method}");
        assert_eq!(report(&rep)["aggregate"]["prediction_accuracy"].as_f64(), Some(100.0));
    }
}

#[test]
fn external_predictions_are_merged() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 5, &["--noise-free"]);
    let manifest = report(&ds.join("manifest.json"));
    let pred = dir.path().join("pred");
    for f in manifest["frames"].as_array().unwrap() {
        let id = f["id"].as_str().unwrap();
        let fd = pred.join(id);
        std::fs::create_dir_all(&fd).unwrap();
        let gt = &f["gt_depth"];
        std::fs::copy(ds.join(gt["depth"].as_str().unwrap()), fd.join("pred_depth.pgm")).unwrap();
        std::fs::copy(ds.join(gt["flags"].as_str().unwrap()), fd.join("pred_flags.pgm")).unwrap();
    }
    let out = dir.path().join("merged");
    ok(&["unwrap", "--dataset", s(&ds), "--method", "regmerge", "--pred", s(&pred), "--out", s(&out)]);
    let rep = dir.path().join("merged.json");
    ok(&["evaluate", "--dataset", s(&ds), "--corrected", s(&out), "--out", s(&rep)]);
    assert_eq!(aggregate_rmse(&rep), 0.0);
}

#[test]
fn mis_sized_prediction_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 6, &[]);
    let pred = dir.path().join("pred");
    for id in ["000000", "000001", "000002", "000003"] {
        std::fs::create_dir_all(pred.join(id)).unwrap();
        std::fs::write(pred.join(id).join("pred_bins.pgm"), b"P5\n2 2\n255\n\x00\x01\x02\x03").unwrap();
    }
    let out = run(&[
        "unwrap", "--dataset", s(&ds), "--method", "segmerge", "--pred", s(&pred), "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 7, &[]);
    let o = s(&dir.path().join("o")).to_string();
    // A merge method without a prediction source.
    assert_eq!(run(&["unwrap", "--dataset", s(&ds), "--method", "regmerge", "--out", &o]).status.code(), Some(2));
    // Malformed oracle spec.
    let bad = run(&["unwrap", "--dataset", s(&ds), "--method", "regmerge", "--oracle", "noisy:x", "--out", &o]);
    assert_eq!(bad.status.code(), Some(2));
    // Missing dataset.
    let missing = s(&dir.path().join("missing")).to_string();
    assert_eq!(run(&["unwrap", "--dataset", &missing, "--method", "dualfreq", "--out", &o]).status.code(), Some(3));
    // Bad flag value.
    assert_eq!(run(&["simulate", "--frames", "x", "--out", &o]).status.code(), Some(2));
    // Frequencies in the wrong order.
    let swapped = run(&["simulate", "--frames", "1", "--out", &o, "--freq-high", "10e6", "--freq-low", "24e6"]);
    assert_eq!(swapped.status.code(), Some(2));
    // Corrupt manifest.
    std::fs::write(ds.join("manifest.json"), "{").unwrap();
    assert_eq!(run(&["unwrap", "--dataset", s(&ds), "--method", "dualfreq", "--out", &o]).status.code(), Some(2));
}

#[test]
fn thread_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let args = ["simulate", "--frames", "2", "--out", s(&out), "--width", "8", "--height", "8"];
    let bad = bin().env("ITOF_FORGE_THREADS", "zero").args(args).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let good = bin().env("ITOF_FORGE_THREADS", "2").args(args).output().unwrap();
    assert!(good.status.success());
}

#[test]
fn visualize_writes_side_by_side_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let ds = simulate(dir.path(), "ds", 8, &[]);
    let out = dir.path().join("dq");
    ok(&["unwrap", "--dataset", s(&ds), "--method", "dualfreq", "--out", s(&out)]);
    let png = dir.path().join("v.pgm");
    ok(&["visualize", "--dataset", s(&ds), "--corrected", s(&out), "--frame", "000001", "--out", s(&png)]);
    let bytes = std::fs::read(&png).unwrap();
    // gray, reference, ambiguous and corrected panels with 4-pixel gaps.
    assert!(bytes.starts_with(b"P5\n172 30\n255\n"));
}

#[test]
fn two_sample_capture_is_noisier_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut wins = 0;
    for seed in 0..20u64 {
        let ds = simulate(dir.path(), &format!("ds{seed}"), seed, &[]);
        let mut rmse = [0.0; 2];
        for (k, source) in ["4", "2"].iter().enumerate() {
            let out = dir.path().join(format!("m{seed}_{source}"));
            ok(&[
                "unwrap", "--dataset", s(&ds), "--method", "regmerge", "--oracle", "exact", "--source", source,
                "--saturation-threshold", "6.25", "--out", s(&out),
            ]);
            let rep = dir.path().join(format!("m{seed}_{source}.json"));
            ok(&["evaluate", "--dataset", s(&ds), "--corrected", s(&out), "--out", s(&rep)]);
            rmse[k] = aggregate_rmse(&rep);
        }
        if rmse[1] >= rmse[0] {
            wins += 1;
        }
    }
    assert!(wins >= 18, "2-DCS at least as noisy on {wins}/20 seeds");
}
