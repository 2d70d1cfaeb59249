use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vlp_core::config::ExperimentConfig;
use vlp_core::io::{read_fixes, read_ground_truth};
use vlp_core::simulator::{offset_principal_point, CameraPose, NoiseModel, REFERENCE_OFFSET};
use vlp_core::{BeaconSet, LedBeacon, PixelPoint, WorldPoint};

fn vlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = vlp(args);
    assert!(
        out.status.success(),
        "vlp {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn save(config: &ExperimentConfig, dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(name);
    config.save(&path).unwrap();
    path
}

fn noiseless_offset() -> ExperimentConfig {
    let mut c = ExperimentConfig::reference();
    c.scene.noise = NoiseModel::NONE;
    c
}

#[test]
fn simulate_then_locate_reproduces_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::reference();
    c.scene.noise = NoiseModel::NONE;
    c.scene.true_principal_point = c.scene.intrinsics.nominal_principal_point();
    let scene = save(&c, tmp.path(), "scene.json");
    let sim = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--scene",
        s(&scene),
        "--out",
        s(&sim),
        "--trials",
        "1",
    ]);
    let det = sim.join("detections.csv");
    let truth = sim.join("ground_truth.csv");

    for method in ["two-led", "three-led"] {
        let out = tmp.path().join(method);
        let msg = ok(&[
            "locate",
            "--scene",
            s(&scene),
            "--out",
            s(&out),
            "--detections",
            s(&det),
            "--truth",
            s(&truth),
            "--method",
            method,
        ]);
        assert!(msg.contains("average positioning error is 0.00cm"), "{msg}");
        let rows = read_fixes(&out.join("fixes.csv")).unwrap();
        let gt = read_ground_truth(&truth).unwrap();
        assert_eq!(rows.len(), 36);
        for r in rows {
            assert!(r.is_ok());
            let p = r.position().unwrap();
            let t = gt[&(r.point, r.trial)].position;
            // Pixels are stored to 6 decimals; the short 1-2 baseline amplifies that to ~1e-6 cm.
            assert!(p.distance(&t) < 1e-5, "{p:?} vs {t:?}");
        }
    }
}

#[test]
fn default_simulation_has_432_rows_and_locates_all() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let msg = ok(&["simulate", "--out", s(&sim)]);
    assert!(msg.starts_with("simulated 432 trials"), "{msg}");
    let out = tmp.path().join("loc");
    ok(&[
        "locate",
        "--out",
        s(&out),
        "--detections",
        s(&sim.join("detections.csv")),
    ]);
    assert_eq!(read_fixes(&out.join("fixes.csv")).unwrap().len(), 432);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sim.join("run_metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 2020);
    assert_eq!(meta["subcommand"], "simulate");
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    let saved = ExperimentConfig::load(&sim.join("scene.json")).unwrap();
    assert_eq!(saved.hash(), meta["config_sha256"].as_str().unwrap());
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["simulate", "--out", s(&a), "--seed", "7"]);
    ok(&["simulate", "--out", s(&b), "--seed", "7", "--sequential"]);
    for f in ["detections.csv", "ground_truth.csv", "scene.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tmp.path().join("c");
    ok(&["simulate", "--out", s(&c), "--seed", "8"]);
    assert_ne!(
        std::fs::read(a.join("detections.csv")).unwrap(),
        std::fs::read(c.join("detections.csv")).unwrap()
    );
}

#[test]
fn rotation_calibration_from_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let c = noiseless_offset();
    let scene = save(&c, tmp.path(), "scene.json");
    let sim = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--scene",
        s(&scene),
        "--out",
        s(&sim),
        "--trials",
        "1",
        "--sweep",
    ]);
    let out = tmp.path().join("cal");
    let msg = ok(&[
        "calibrate",
        "--scene",
        s(&scene),
        "--out",
        s(&out),
        "--calibration",
        "rotation",
        "--tracks",
        s(&sim.join("tracks.csv")),
    ]);
    assert!(
        msg.contains("principal point before: (400.000000, 300.000000) px"),
        "{msg}"
    );
    let fixed = ExperimentConfig::load(&out.join("scene.json")).unwrap();
    let pp = fixed.scene.intrinsics.principal_point();
    assert!(pp.distance(&c.scene.true_principal_point) < 1e-6, "{pp:?}");
    assert!(out.join("calibration_report.txt").exists());
}

#[test]
fn dispersion_calibration_from_fixes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = noiseless_offset();
    c.scene.camera = CameraPose::new(5.0, -5.0, 0.0, 0.0);
    let scene = save(&c, tmp.path(), "scene.json");
    let sim = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--scene",
        s(&scene),
        "--out",
        s(&sim),
        "--point",
        "5,-5",
        "--trials",
        "20",
    ]);
    let loc = tmp.path().join("loc");
    ok(&[
        "locate",
        "--scene",
        s(&scene),
        "--out",
        s(&loc),
        "--detections",
        s(&sim.join("detections.csv")),
        "--method",
        "three-led",
    ]);
    let out = tmp.path().join("cal");
    ok(&[
        "calibrate",
        "--scene",
        s(&scene),
        "--out",
        s(&out),
        "--calibration",
        "dispersion",
        "--fixes",
        s(&loc.join("fixes.csv")),
        "--ground-truth",
        "5,-5",
    ]);
    let fixed = ExperimentConfig::load(&out.join("scene.json")).unwrap();
    let expected = offset_principal_point(&c.scene.intrinsics, REFERENCE_OFFSET);
    // Fix positions pass through 6-decimal CSV, about 3e-6 px of resolution here.
    assert!(fixed.scene.intrinsics.principal_point().distance(&expected) < 1e-5);

    let literal = tmp.path().join("literal");
    let msg = ok(&[
        "calibrate",
        "--scene",
        s(&scene),
        "--out",
        s(&literal),
        "--calibration",
        "dispersion",
        "--fixes",
        s(&loc.join("fixes.csv")),
        "--ground-truth",
        "5,-5",
        "--paper-literal",
    ]);
    assert!(msg.contains("PaperLiteral"), "{msg}");
}

#[test]
fn zero_offset_leaves_config_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::reference();
    c.scene.noise = NoiseModel::NONE;
    c.scene.true_principal_point = c.scene.intrinsics.nominal_principal_point();
    let scene = save(&c, tmp.path(), "scene.json");
    let sim = tmp.path().join("sim");
    ok(&[
        "simulate",
        "--scene",
        s(&scene),
        "--out",
        s(&sim),
        "--point",
        "0,0",
        "--trials",
        "3",
        "--sweep",
    ]);
    let out = tmp.path().join("cal");
    ok(&[
        "calibrate",
        "--scene",
        s(&scene),
        "--out",
        s(&out),
        "--calibration",
        "rotation",
        "--tracks",
        s(&sim.join("tracks.csv")),
    ]);
    let after = ExperimentConfig::load(&out.join("scene.json")).unwrap();
    assert!(
        after
            .scene
            .intrinsics
            .principal_point()
            .distance(&PixelPoint::new(400.0, 300.0))
            < 1e-6
    );
}

#[test]
fn collinear_config_flags_every_row_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::reference();
    c.scene.beacons = BeaconSet::new([
        LedBeacon::new(1, 0.0, 0.0, 150.0),
        LedBeacon::new(2, 10.0, 0.0, 150.0),
        LedBeacon::new(3, 20.0, 0.0, 150.0),
    ])
    .unwrap();
    c.two_led_pair = (1, 3);
    c.plan.grid = vec![WorldPoint::new(5.0, 5.0, 0.0)];
    c.plan.trials_per_point = 4;
    let scene = save(&c, tmp.path(), "scene.json");
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--scene", s(&scene), "--out", s(&sim)]);
    let out = tmp.path().join("loc");
    let det = sim.join("detections.csv");
    let res = vlp(&[
        "locate",
        "--scene",
        s(&scene),
        "--out",
        s(&out),
        "--detections",
        s(&det),
        "--method",
        "three-led",
    ]);
    assert!(!res.status.success());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("all 4 trials failed"), "{stderr}");
    let rows = read_fixes(&out.join("fixes.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.status == "SingularGeometry"));

    // The two-LED method still works on the same data.
    let out2 = tmp.path().join("loc2");
    ok(&[
        "locate",
        "--scene",
        s(&scene),
        "--out",
        s(&out2),
        "--detections",
        s(&sim.join("detections.csv")),
    ]);
}

#[test]
fn stats_matches_locate_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--out", s(&sim), "--trials", "2"]);
    let truth = sim.join("ground_truth.csv");
    let loc = tmp.path().join("loc");
    let located = ok(&[
        "locate",
        "--out",
        s(&loc),
        "--detections",
        s(&sim.join("detections.csv")),
        "--truth",
        s(&truth),
    ]);
    let st = tmp.path().join("stats");
    let stats = ok(&[
        "stats",
        "--out",
        s(&st),
        "--fixes",
        s(&loc.join("fixes.csv")),
        "--truth",
        s(&truth),
    ]);
    assert!(
        located.trim_end().ends_with(stats.trim_end()),
        "{located}\n{stats}"
    );
    for f in ["errors.csv", "cdf.csv", "histogram.csv", "summary.txt"] {
        assert!(st.join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_name_field_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    let text =
        ExperimentConfig::reference()
            .to_json()
            .replacen("\"seed\": 2020", "\"seed\": \"soon\"", 1);
    std::fs::write(&bad, text).unwrap();
    let res = vlp(&[
        "simulate",
        "--scene",
        s(&bad),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert!(!res.status.success());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(
        stderr.contains("seed") && stderr.contains("line"),
        "{stderr}"
    );
}

#[test]
fn replicate_writes_the_report_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rep");
    let summary = ok(&[
        "replicate",
        "--out",
        s(&out),
        "--trials",
        "2",
        "--method",
        "two-led",
    ]);
    assert!(summary.contains("two-led    dispersion"), "{summary}");
    assert!(!summary.contains("three-led  none"));
    for f in [
        "scene.json",
        "summary.txt",
        "run_metadata.json",
        "dataset/detections.csv",
        "dataset/ground_truth.csv",
        "calibration/rotation_tracks.csv",
        "calibration/dispersion_fixes_two-led.csv",
        "two-led/none/fixes.csv",
        "two-led/rotation/cdf.csv",
        "two-led/dispersion/histogram.csv",
        "two-led/dispersion/errors.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}
