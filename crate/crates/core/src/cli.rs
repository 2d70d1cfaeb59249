//! `vlp` command-line interface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::error_stats;
use crate::calibration::{calibrate_dispersion, calibrate_rotation, DispersionMode};
use crate::camera::PixelPoint;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{
    locate_batch, replicate, CalibrationKind, Locator, ReplicateOptions, Replication,
};
use crate::io;
use crate::par::Execution;
use crate::positioning::{HeightMode, Method, WorldPoint};
use crate::simulator::{even_angles, generate_trials, rotation_sweep};

#[derive(Debug, Parser)]
#[command(
    name = "vlp",
    version,
    about = "Image-sensor visible light positioning toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the measurement grid and write detection and ground-truth CSVs.
    Simulate(SimulateArgs),
    /// Locate every trial of a detections CSV.
    Locate(LocateArgs),
    /// Correct the principal point from rotation tracks or fixes at a known point.
    Calibrate(CalibrateArgs),
    /// Run the whole campaign: simulate, calibrate both ways, locate, report.
    Replicate(ReplicateArgs),
    /// Error statistics of a fixes CSV against ground truth.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scene configuration (JSON). Defaults to the built-in reference scene.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scene seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    TwoLed,
    ThreeLed,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::TwoLed => Method::TwoLed,
            MethodArg::ThreeLed => Method::ThreeLed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationArg {
    None,
    Rotation,
    Dispersion,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides trials per grid point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Replaces the grid with one point, `x,y[,z]` in cm.
    #[arg(long, value_parser = parse_point)]
    pub point: Option<WorldPoint>,
    /// Also write a 12-angle rotation sweep to tracks.csv.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LocateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub detections: PathBuf,
    /// Ground-truth CSV; when given, error statistics are written too.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "two-led")]
    pub method: MethodArg,
    /// Three-LED height from the lowest-id pair only.
    #[arg(long)]
    pub paper_faithful_h: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub calibration: CalibrationArg,
    /// Rotation tracks CSV (rotation mode).
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    /// Fixes CSV taken at the ground-truth point (dispersion mode).
    #[arg(long)]
    pub fixes: Option<PathBuf>,
    /// Where the dispersion fixes were taken, `x,y[,z]` cm. Defaults to the scene camera.
    #[arg(long, value_parser = parse_point)]
    pub ground_truth: Option<WorldPoint>,
    /// Apply the correction formula as printed, without the f/H magnification.
    #[arg(long)]
    pub paper_literal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides trials per grid point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Restrict to one localization method.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub paper_literal: bool,
    #[arg(long)]
    pub paper_faithful_h: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub fixes: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

fn parse_point(s: &str) -> std::result::Result<WorldPoint, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y] => Ok(WorldPoint::new(x, y, 0.0)),
        [x, y, z] => Ok(WorldPoint::new(x, y, z)),
        _ => Err(format!("expected x,y or x,y,z, got `{s}`")),
    }
}

/// Everything needed to reproduce a run; written as `run_metadata.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub inputs: Vec<String>,
    pub out: String,
    pub seed: u64,
    pub method: Option<MethodArg>,
    pub calibration: Option<CalibrationArg>,
    pub paper_literal: bool,
    pub paper_faithful_h: bool,
    pub trials: Option<usize>,
    pub execution: &'static str,
    pub config_sha256: String,
}

impl RunManifest {
    fn new(subcommand: &'static str, common: &CommonArgs, config: &ExperimentConfig) -> Self {
        Self {
            tool: "vlp",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs: common
                .scene
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            out: common.out.display().to_string(),
            seed: config.scene.seed,
            method: None,
            calibration: None,
            paper_literal: false,
            paper_faithful_h: false,
            trials: None,
            execution: if common.sequential {
                "sequential"
            } else {
                "parallel"
            },
            config_sha256: config.hash(),
        }
    }

    fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.display().to_string());
        self
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("run_metadata.json");
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        std::fs::write(&path, s).map_err(|e| Error::io(path, e))
    }
}

fn exec(common: &CommonArgs) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = match &common.scene {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(seed) = common.seed {
        config.scene.seed = seed;
    }
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a parsed command line and returns the text to print.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Locate(a) => cmd_locate(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Replicate(a) => cmd_replicate(&a),
        Command::Stats(a) => cmd_stats(&a),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let mut config = load_config(&args.common)?;
    if let Some(t) = args.trials {
        config.plan.trials_per_point = t;
    }
    if let Some(p) = args.point {
        config.plan.grid = vec![p];
    }
    let out = &args.common.out;
    ensure_dir(out)?;
    let scene = &config.scene;
    let records = generate_trials(
        &config.plan.grid,
        config.plan.trials_per_point,
        scene,
        scene.seed,
        exec(&args.common),
    )?;
    io::write_detections(&out.join("detections.csv"), &records)?;
    io::write_ground_truth(&out.join("ground_truth.csv"), &records)?;
    if args.sweep {
        let tracks = rotation_sweep(scene, &even_angles(12))?;
        io::write_tracks(&out.join("tracks.csv"), &tracks)?;
    }
    config.save(&out.join("scene.json"))?;
    let mut manifest = RunManifest::new("simulate", &args.common, &config);
    manifest.trials = Some(config.plan.trials_per_point);
    manifest.write(out)?;
    Ok(format!(
        "simulated {} trials ({} points x {}) into {}",
        records.len(),
        config.plan.grid.len(),
        config.plan.trials_per_point,
        out.display()
    ))
}

pub fn cmd_locate(args: &LocateArgs) -> Result<String> {
    let config = load_config(&args.common)?;
    let out = &args.common.out;
    ensure_dir(out)?;
    let records = io::read_trials(&args.detections, args.truth.as_deref())?;
    if records.is_empty() {
        return Err(Error::Input(format!(
            "{}: no detections",
            args.detections.display()
        )));
    }
    let method = Method::from(args.method);
    let height_mode = if args.paper_faithful_h {
        HeightMode::FirstPair
    } else {
        HeightMode::AllPairs
    };
    let locator = Locator::for_config(method, &config).with_height_mode(height_mode);
    let fixes = locate_batch(
        &records,
        &locator,
        &config.scene.beacons,
        &config.scene.intrinsics,
        exec(&args.common),
    );
    let keys: Vec<_> = records.iter().map(|r| (r.point, r.trial)).collect();
    io::write_fixes(&out.join("fixes.csv"), &keys, method.as_str(), &fixes)?;

    let mut failed = 0;
    for (r, f) in records.iter().zip(&fixes) {
        if let Err(e) = f {
            failed += 1;
            log::warn!("trial ({}, {}): {e}", r.point, r.trial);
        }
    }
    let mut manifest = RunManifest::new("locate", &args.common, &config).input(&args.detections);
    if let Some(t) = &args.truth {
        manifest = manifest.input(t);
    }
    manifest.method = Some(args.method);
    manifest.paper_faithful_h = args.paper_faithful_h;
    manifest.write(out)?;
    if failed == fixes.len() {
        return Err(Error::Input(format!(
            "all {failed} trials failed to locate"
        )));
    }

    let mut msg = format!(
        "located {} of {} trials ({})",
        fixes.len() - failed,
        fixes.len(),
        method.as_str()
    );
    if args.truth.is_some() {
        let (keys, found, truths) = successful(&records, &fixes);
        let report = error_stats(&found, &truths)?;
        io::write_report_tables(out, &keys, &report)?;
        write_text(
            &out.join("summary.txt"),
            &format!("{}\n", report.headline()),
        )?;
        write!(msg, "\n{}", report.headline()).unwrap();
    }
    Ok(msg)
}

type Successful = (Vec<(u32, u32)>, Vec<WorldPoint>, Vec<WorldPoint>);

fn successful(
    records: &[crate::simulator::TrialRecord],
    fixes: &[crate::experiment::FixOutcome],
) -> Successful {
    let mut keys = Vec::new();
    let mut found = Vec::new();
    let mut truths = Vec::new();
    for (r, f) in records.iter().zip(fixes) {
        if let Ok(f) = f {
            keys.push((r.point, r.trial));
            found.push(f.position);
            truths.push(r.truth.position);
        }
    }
    (keys, found, truths)
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<String> {
    let mut config = load_config(&args.common)?;
    let out = &args.common.out;
    ensure_dir(out)?;
    let before = config.scene.intrinsics.principal_point();
    let mut manifest = RunManifest::new("calibrate", &args.common, &config);
    manifest.calibration = Some(args.calibration);
    manifest.paper_literal = args.paper_literal;
    let mut report = String::new();

    match args.calibration {
        CalibrationArg::None => {
            writeln!(report, "calibration: none").unwrap();
        }
        CalibrationArg::Rotation => {
            let path = args
                .tracks
                .as_ref()
                .ok_or_else(|| Error::Input("rotation calibration needs --tracks".into()))?;
            manifest = manifest.input(path);
            let tracks = io::read_tracks(path)?;
            let cal = calibrate_rotation(&tracks, &config.scene.intrinsics)?;
            writeln!(report, "calibration: rotation").unwrap();
            for (t, fit) in tracks.iter().zip(&cal.fits) {
                match fit {
                    Ok(f) => writeln!(
                        report,
                        "track {}: center ({}, {}) px, radius {} px, rms residual {} px, {} samples",
                        t.beacon_id,
                        io::fmt6(f.center.u),
                        io::fmt6(f.center.v),
                        io::fmt6(f.radius),
                        io::fmt6(f.rms_residual),
                        t.points.len()
                    ),
                    Err(e) => writeln!(report, "track {}: skipped: {e}", t.beacon_id),
                }
                .unwrap();
            }
            config.scene.intrinsics = cal.intrinsics;
        }
        CalibrationArg::Dispersion => {
            let path = args
                .fixes
                .as_ref()
                .ok_or_else(|| Error::Input("dispersion calibration needs --fixes".into()))?;
            manifest = manifest.input(path);
            let rows = io::read_fixes(path)?;
            let samples: Vec<_> = rows
                .iter()
                .filter(|r| r.is_ok())
                .filter_map(|r| r.sample())
                .collect();
            let truth = args.ground_truth.unwrap_or(config.scene.camera.position);
            let mode = if args.paper_literal {
                DispersionMode::PaperLiteral
            } else {
                DispersionMode::Physical
            };
            let (k, s) = calibrate_dispersion(&samples, truth, &config.scene.intrinsics, mode)?;
            writeln!(report, "calibration: dispersion ({mode:?})").unwrap();
            writeln!(report, "samples: {}", s.sample_count).unwrap();
            writeln!(
                report,
                "mean offset: ({}, {}) cm",
                io::fmt6(s.mean_offset.0),
                io::fmt6(s.mean_offset.1)
            )
            .unwrap();
            writeln!(
                report,
                "dispersion circle: center ({}, {}) cm, radius {} cm",
                io::fmt6(s.enclosing_center.0),
                io::fmt6(s.enclosing_center.1),
                io::fmt6(s.enclosing_radius)
            )
            .unwrap();
            writeln!(report, "mean height: {} cm", io::fmt6(s.mean_height)).unwrap();
            config.scene.intrinsics = k;
        }
    }
    let after = config.scene.intrinsics.principal_point();
    writeln!(
        report,
        "principal point before: ({}, {}) px",
        io::fmt6(before.u),
        io::fmt6(before.v)
    )
    .unwrap();
    writeln!(
        report,
        "principal point after: ({}, {}) px",
        io::fmt6(after.u),
        io::fmt6(after.v)
    )
    .unwrap();
    writeln!(
        report,
        "delta: ({}, {}) px",
        io::fmt6(after.u - before.u),
        io::fmt6(after.v - before.v)
    )
    .unwrap();

    config.save(&out.join("scene.json"))?;
    write_text(&out.join("calibration_report.txt"), &report)?;
    manifest.write(out)?;
    Ok(report.trim_end().to_string())
}

pub fn cmd_stats(args: &StatsArgs) -> Result<String> {
    let out = &args.common.out;
    ensure_dir(out)?;
    let rows = io::read_fixes(&args.fixes)?;
    let truth = io::read_ground_truth(&args.truth)?;
    let mut keys = Vec::new();
    let mut found = Vec::new();
    let mut truths = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let (Some(p), Some(t)) = (r.position(), truth.get(&(r.point, r.trial))) else {
            continue;
        };
        keys.push((r.point, r.trial));
        found.push(p);
        truths.push(t.position);
    }
    let report = error_stats(&found, &truths)?;
    io::write_report_tables(out, &keys, &report)?;
    write_text(
        &out.join("summary.txt"),
        &format!("{}\n", report.headline()),
    )?;
    let config = load_config(&args.common)?;
    RunManifest::new("stats", &args.common, &config)
        .input(&args.fixes)
        .input(&args.truth)
        .write(out)?;
    Ok(report.headline())
}

pub fn cmd_replicate(args: &ReplicateArgs) -> Result<String> {
    let mut config = load_config(&args.common)?;
    if let Some(t) = args.trials {
        config.plan.trials_per_point = t;
    }
    let out = &args.common.out;
    ensure_dir(out)?;
    let opts = ReplicateOptions {
        exec: exec(&args.common),
        methods: match args.method {
            Some(m) => vec![m.into()],
            None => vec![Method::TwoLed, Method::ThreeLed],
        },
        height_mode: if args.paper_faithful_h {
            HeightMode::FirstPair
        } else {
            HeightMode::AllPairs
        },
        dispersion_mode: if args.paper_literal {
            DispersionMode::PaperLiteral
        } else {
            DispersionMode::Physical
        },
        ..ReplicateOptions::default()
    };
    let rep = replicate(&config, &opts)?;
    write_replication(out, &config, &rep)?;

    let mut manifest = RunManifest::new("replicate", &args.common, &config);
    manifest.method = args.method;
    manifest.paper_literal = args.paper_literal;
    manifest.paper_faithful_h = args.paper_faithful_h;
    manifest.trials = Some(config.plan.trials_per_point);
    manifest.write(out)?;
    let summary = render_summary(&config, &rep);
    write_text(&out.join("summary.txt"), &summary)?;
    Ok(summary.trim_end().to_string())
}

/// Writes every table of a replication under `out`.
pub fn write_replication(out: &Path, config: &ExperimentConfig, rep: &Replication) -> Result<()> {
    config.save(&out.join("scene.json"))?;
    let dataset = out.join("dataset");
    ensure_dir(&dataset)?;
    io::write_detections(&dataset.join("detections.csv"), &rep.dataset)?;
    io::write_ground_truth(&dataset.join("ground_truth.csv"), &rep.dataset)?;

    let cal = out.join("calibration");
    ensure_dir(&cal)?;
    io::write_tracks(&cal.join("rotation_tracks.csv"), &rep.tracks)?;
    for d in &rep.dispersion {
        let keys: Vec<_> = (0..d.fixes.len() as u32).map(|t| (0, t)).collect();
        io::write_fixes(
            &cal.join(format!("dispersion_fixes_{}.csv", d.method.as_str())),
            &keys,
            d.method.as_str(),
            &d.fixes,
        )?;
    }

    let all_keys: Vec<_> = rep.dataset.iter().map(|r| (r.point, r.trial)).collect();
    for cell in &rep.cells {
        let dir = out
            .join(cell.method.as_str())
            .join(cell.calibration.as_str());
        ensure_dir(&dir)?;
        io::write_fixes(
            &dir.join("fixes.csv"),
            &all_keys,
            cell.method.as_str(),
            &cell.fixes,
        )?;
        let (keys, _, _) = successful(&rep.dataset, &cell.fixes);
        io::write_report_tables(&dir, &keys, &cell.report)?;
    }
    Ok(())
}

/// Plain-text summary of a replication.
pub fn render_summary(config: &ExperimentConfig, rep: &Replication) -> String {
    let f = io::fmt6;
    let scene = &config.scene;
    let nominal = scene.intrinsics.nominal_principal_point();
    let truth = scene.true_principal_point;
    let mut s = String::new();
    let pp = |p: PixelPoint| format!("({}, {})", f(p.u), f(p.v));

    writeln!(s, "vlp replicate").unwrap();
    writeln!(s, "seed: {}", scene.seed).unwrap();
    writeln!(
        s,
        "grid: {} points x {} trials = {} records",
        config.plan.grid.len(),
        config.plan.trials_per_point,
        rep.dataset.len()
    )
    .unwrap();
    writeln!(
        s,
        "noise: sigma {} px, quantize {}",
        f(scene.noise.pixel_sigma),
        scene.noise.quantize
    )
    .unwrap();
    writeln!(s, "nominal principal point: {} px", pp(nominal)).unwrap();
    writeln!(s, "true principal point: {} px", pp(truth)).unwrap();
    writeln!(
        s,
        "rotation calibration: {} px, error {} px",
        pp(rep.rotation.center),
        f(rep.rotation.center.distance(&truth))
    )
    .unwrap();
    for d in &rep.dispersion {
        let c = d.intrinsics.principal_point();
        writeln!(
            s,
            "dispersion calibration [{}]: {} px, error {} px, mean offset ({}, {}) cm, dispersion radius {} cm, {} samples",
            d.method.as_str(),
            pp(c),
            f(c.distance(&truth)),
            f(d.summary.mean_offset.0),
            f(d.summary.mean_offset.1),
            f(d.summary.enclosing_radius),
            d.summary.sample_count
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    writeln!(
        s,
        "method     calibration  mean        p90         max         rms         failures"
    )
    .unwrap();
    for c in &rep.cells {
        writeln!(
            s,
            "{:<10} {:<12} {:<11} {:<11} {:<11} {:<11} {}",
            c.method.as_str(),
            c.calibration.as_str(),
            f(c.report.mean),
            f(c.report.p90),
            f(c.report.max),
            f(c.report.rms),
            c.failures
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    for m in rep.dispersion.iter().map(|d| d.method) {
        for (base, cal) in [
            (CalibrationKind::None, CalibrationKind::Rotation),
            (CalibrationKind::None, CalibrationKind::Dispersion),
            (CalibrationKind::Rotation, CalibrationKind::Dispersion),
        ] {
            if let Some(cmp) = rep.compare(m, base, cal) {
                writeln!(
                    s,
                    "{} {} vs {}: mean ratio {}, p90 ratio {}, max ratio {}, mean diff {} cm",
                    m.as_str(),
                    cal.as_str(),
                    base.as_str(),
                    f(cmp.mean_ratio),
                    f(cmp.p90_ratio),
                    f(cmp.max_ratio),
                    f(cmp.mean_diff)
                )
                .unwrap();
            }
        }
    }
    writeln!(s).unwrap();
    for c in rep
        .cells
        .iter()
        .filter(|c| c.calibration != CalibrationKind::None)
    {
        writeln!(
            s,
            "{} {}: {}",
            c.method.as_str(),
            c.calibration.as_str(),
            c.report.headline()
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_parser() {
        assert_eq!(parse_point("1,2").unwrap(), WorldPoint::new(1.0, 2.0, 0.0));
        assert_eq!(
            parse_point("1, 2, -3.5").unwrap(),
            WorldPoint::new(1.0, 2.0, -3.5)
        );
        assert!(parse_point("1").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn cli_parses_common_flags() {
        let cli = Cli::try_parse_from([
            "vlp",
            "locate",
            "--out",
            "o",
            "--detections",
            "d.csv",
            "--method",
            "three-led",
            "--paper-faithful-h",
            "--seed",
            "9",
        ])
        .unwrap();
        match cli.command {
            Command::Locate(a) => {
                assert_eq!(a.method, MethodArg::ThreeLed);
                assert!(a.paper_faithful_h);
                assert_eq!(a.common.seed, Some(9));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from([
            "vlp",
            "calibrate",
            "--out",
            "o",
            "--calibration",
            "sideways"
        ])
        .is_err());
    }
}
