//! Batch localization and the full simulated measurement campaign.

use crate::analysis::{compare_reports, error_stats, Comparison, ErrorReport};
use crate::calibration::{
    calibrate_dispersion, calibrate_rotation, DispersionMode, DispersionSummary, FixSample,
    RotationCalibration,
};
use crate::camera::CameraIntrinsics;
use crate::config::ExperimentConfig;
use crate::error::{Error, PositioningError};
use crate::par::{self, Execution};
use crate::positioning::{
    locate_two, trilaterate_three, BeaconId, BeaconSet, Detection, HeightMode, Method, PositionFix,
    WorldPoint,
};
use crate::simulator::{even_angles, generate_trials, rotation_sweep, Track, TrialRecord};

/// Chooses which detections feed which solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Locator {
    pub method: Method,
    /// Beacons used by the two-LED solver.
    pub pair: (BeaconId, BeaconId),
    pub height_mode: HeightMode,
}

impl Locator {
    pub fn new(method: Method, pair: (BeaconId, BeaconId)) -> Self {
        Self {
            method,
            pair,
            height_mode: HeightMode::default(),
        }
    }

    pub fn with_height_mode(mut self, mode: HeightMode) -> Self {
        self.height_mode = mode;
        self
    }

    pub fn for_config(method: Method, config: &ExperimentConfig) -> Self {
        Self::new(method, config.two_led_pair)
    }

    /// Two-LED: the configured pair, which must both be detected. Three-LED:
    /// the three lowest-id detections.
    pub fn locate(
        &self,
        detections: &[Detection],
        beacons: &BeaconSet,
        k: &CameraIntrinsics,
    ) -> Result<PositionFix, PositioningError> {
        match self.method {
            Method::TwoLed => {
                let chosen: Vec<Detection> = detections
                    .iter()
                    .filter(|d| d.beacon_id == self.pair.0 || d.beacon_id == self.pair.1)
                    .copied()
                    .collect();
                locate_two(&chosen, beacons, k)
            }
            Method::ThreeLed => {
                let mut chosen = detections.to_vec();
                if chosen.len() > 3 {
                    chosen.sort_by_key(|d| d.beacon_id);
                    chosen.truncate(3);
                }
                trilaterate_three(&chosen, beacons, k, self.height_mode)
            }
        }
    }
}

pub type FixOutcome = Result<PositionFix, PositioningError>;

/// Locates every trial; results are in input order.
pub fn locate_batch(
    records: &[TrialRecord],
    locator: &Locator,
    beacons: &BeaconSet,
    k: &CameraIntrinsics,
    exec: Execution,
) -> Vec<FixOutcome> {
    par::map_slice(exec, records, |r| locator.locate(&r.detections, beacons, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CalibrationKind {
    None,
    Rotation,
    Dispersion,
}

impl CalibrationKind {
    pub const ALL: [CalibrationKind; 3] = [
        CalibrationKind::None,
        CalibrationKind::Rotation,
        CalibrationKind::Dispersion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CalibrationKind::None => "none",
            CalibrationKind::Rotation => "rotation",
            CalibrationKind::Dispersion => "dispersion",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOptions {
    pub exec: Execution,
    pub methods: Vec<Method>,
    pub height_mode: HeightMode,
    pub dispersion_mode: DispersionMode,
    /// Yaw samples in the rotation sweep.
    pub sweep_angles: usize,
    /// Repeated fixes at the calibration point for the dispersion method.
    pub dispersion_samples: usize,
}

impl Default for ReplicateOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            methods: vec![Method::TwoLed, Method::ThreeLed],
            height_mode: HeightMode::default(),
            dispersion_mode: DispersionMode::default(),
            sweep_angles: 12,
            dispersion_samples: 432,
        }
    }
}

/// One method x calibration combination evaluated on the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub calibration: CalibrationKind,
    pub intrinsics: CameraIntrinsics,
    pub fixes: Vec<FixOutcome>,
    /// Over the successful fixes only.
    pub report: ErrorReport,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCalibration {
    pub method: Method,
    pub intrinsics: CameraIntrinsics,
    pub summary: DispersionSummary,
    pub fixes: Vec<FixOutcome>,
    pub calibration_point: WorldPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub dataset: Vec<TrialRecord>,
    pub tracks: Vec<Track>,
    pub rotation: RotationCalibration,
    pub dispersion: Vec<DispersionCalibration>,
    pub cells: Vec<Cell>,
}

impl Replication {
    pub fn cell(&self, method: Method, calibration: CalibrationKind) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.calibration == calibration)
    }

    /// `calibration` relative to `baseline` for one method.
    pub fn compare(
        &self,
        method: Method,
        baseline: CalibrationKind,
        calibration: CalibrationKind,
    ) -> Option<Comparison> {
        Some(compare_reports(
            &self.cell(method, baseline)?.report,
            &self.cell(method, calibration)?.report,
        ))
    }
}

/// Base seed of the dispersion calibration trials, kept apart from the grid trials.
pub fn dispersion_seed(seed: u64) -> u64 {
    seed ^ 0xd15b_e251_0c1e_0001
}

/// Runs the campaign: simulate the grid, calibrate with both methods, and
/// locate the grid uncalibrated and with each calibration for every method.
///
/// The rotation sweep and the dispersion fixes are taken at the scene's camera
/// position.
pub fn replicate(config: &ExperimentConfig, opts: &ReplicateOptions) -> Result<Replication, Error> {
    let scene = &config.scene;
    let nominal = scene.intrinsics;
    let dataset = generate_trials(
        &config.plan.grid,
        config.plan.trials_per_point,
        scene,
        scene.seed,
        opts.exec,
    )
    .map_err(|e| Error::from(e).in_stage("simulate"))?;

    let tracks = rotation_sweep(scene, &even_angles(opts.sweep_angles))
        .map_err(|e| Error::from(e).in_stage("rotation sweep"))?;
    let rotation = calibrate_rotation(&tracks, &nominal)
        .map_err(|e| Error::from(e).in_stage("calibrate rotation"))?;

    let calibration_point = scene.camera.position;
    let calibration_trials = generate_trials(
        &[calibration_point],
        opts.dispersion_samples,
        scene,
        dispersion_seed(scene.seed),
        opts.exec,
    )
    .map_err(|e| Error::from(e).in_stage("simulate dispersion"))?;

    let mut dispersion = Vec::new();
    let mut cells = Vec::new();
    for &method in &opts.methods {
        let locator = Locator::for_config(method, config).with_height_mode(opts.height_mode);
        let fixes = locate_batch(
            &calibration_trials,
            &locator,
            &scene.beacons,
            &nominal,
            opts.exec,
        );
        let samples: Vec<FixSample> = fixes
            .iter()
            .filter_map(|f| f.as_ref().ok())
            .map(FixSample::from)
            .collect();
        let (intrinsics, summary) =
            calibrate_dispersion(&samples, calibration_point, &nominal, opts.dispersion_mode)
                .map_err(|e| Error::from(e).in_stage("calibrate dispersion"))?;
        dispersion.push(DispersionCalibration {
            method,
            intrinsics,
            summary,
            fixes,
            calibration_point,
        });

        for calibration in CalibrationKind::ALL {
            let k = match calibration {
                CalibrationKind::None => nominal,
                CalibrationKind::Rotation => rotation.intrinsics,
                CalibrationKind::Dispersion => intrinsics,
            };
            let fixes = locate_batch(&dataset, &locator, &scene.beacons, &k, opts.exec);
            let (found, truths): (Vec<_>, Vec<_>) = fixes
                .iter()
                .zip(&dataset)
                .filter_map(|(f, r)| f.as_ref().ok().map(|f| (f.position, r.truth.position)))
                .unzip();
            let failures = fixes.len() - found.len();
            let mut report =
                error_stats(&found, &truths).map_err(|e| Error::from(e).in_stage("error stats"))?;
            if calibration == CalibrationKind::Dispersion {
                report.dispersion = Some(summary);
            }
            cells.push(Cell {
                method,
                calibration,
                intrinsics: k,
                fixes,
                report,
                failures,
            });
        }
    }
    Ok(Replication {
        dataset,
        tracks,
        rotation,
        dispersion,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{reference_beacons, CameraPose, SceneConfig};

    #[test]
    fn locator_picks_configured_pair() {
        let scene =
            SceneConfig::noiseless(reference_beacons(), CameraPose::new(4.0, -2.0, 0.0, 0.0));
        let dets = scene.project_all().unwrap();
        let fix = Locator::new(Method::TwoLed, (1, 3))
            .locate(&dets, &scene.beacons, &scene.intrinsics)
            .unwrap();
        assert!(fix.position.distance(&scene.camera.position) < 1e-9);
        assert_eq!(
            Locator::new(Method::TwoLed, (1, 3)).locate(
                &dets[..1],
                &scene.beacons,
                &scene.intrinsics
            ),
            Err(PositioningError::WrongDetectionCount {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn noiseless_replication_is_exact_after_calibration() {
        let mut config = ExperimentConfig::reference();
        config.scene.noise = crate::simulator::NoiseModel::NONE;
        config.plan.trials_per_point = 1;
        let opts = ReplicateOptions {
            dispersion_samples: 4,
            ..Default::default()
        };
        let rep = replicate(&config, &opts).unwrap();
        assert_eq!(rep.cells.len(), 6);
        for m in [Method::TwoLed, Method::ThreeLed] {
            let none = rep.cell(m, CalibrationKind::None).unwrap();
            assert!(none.report.mean > 2.0);
            for c in [CalibrationKind::Rotation, CalibrationKind::Dispersion] {
                let cell = rep.cell(m, c).unwrap();
                assert!(cell.report.max < 1e-6, "{m:?} {c:?} {}", cell.report.max);
                assert_eq!(cell.failures, 0);
            }
        }
    }
}
