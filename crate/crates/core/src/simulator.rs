//! Forward pinhole model and trial generation.
//!
//! The camera looks straight up at the LED plane. A world offset `(dx, dy)`
//! between beacon and camera is rotated by `-yaw` into the camera frame and
//! lands on the image plane at `(dx', dy') * f / H`, then on the sensor about
//! the scene's *true* principal point. Localization code only sees the
//! intrinsics' corrected principal point, so a mismatch between the two models
//! a manufacturing offset of the sensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, PixelPoint};
use crate::error::SimulationError;
use crate::par::{self, Execution};
use crate::positioning::{BeaconId, BeaconSet, Detection, LedBeacon, WorldPoint};

/// Camera position (cm) and yaw about the vertical axis (radians).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: WorldPoint,
    pub yaw: f64,
}

impl CameraPose {
    pub const fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            position: WorldPoint::new(x, y, z),
            yaw,
        }
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = yaw;
        self
    }
}

/// Detection noise: isotropic Gaussian in pixels, optionally rounded to whole pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub pixel_sigma: f64,
    pub quantize: bool,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        pixel_sigma: 0.0,
        quantize: false,
    };

    pub fn is_noiseless(&self) -> bool {
        self.pixel_sigma == 0.0 && !self.quantize
    }
}

/// Ground truth for the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub beacons: BeaconSet,
    pub camera: CameraPose,
    /// Intrinsics as the localizer believes them.
    pub intrinsics: CameraIntrinsics,
    /// Where the optical axis actually meets the sensor.
    pub true_principal_point: PixelPoint,
    pub noise: NoiseModel,
    pub seed: u64,
}

/// The three-beacon layout of the reference experiment, cm.
pub fn reference_beacons() -> BeaconSet {
    BeaconSet::new([
        LedBeacon::new(1, -46.5, -49.5, 150.0),
        LedBeacon::new(2, -46.0, -42.0, 150.0),
        LedBeacon::new(3, 46.0, 49.0, 150.0),
    ])
    .expect("reference beacon ids are unique")
}

/// Principal-point offset injected by the reference experiment, px.
pub const REFERENCE_OFFSET: (f64, f64) = (6.3, -4.1);

impl SceneConfig {
    /// Reference camera, true principal point at the image centre, no noise.
    pub fn noiseless(beacons: BeaconSet, camera: CameraPose) -> Self {
        let intrinsics = CameraIntrinsics::reference();
        Self {
            beacons,
            camera,
            true_principal_point: intrinsics.nominal_principal_point(),
            intrinsics,
            noise: NoiseModel::NONE,
            seed: 0,
        }
    }

    /// The reference experiment: three-beacon layout, 800x600 f = 3 mm camera at
    /// the origin, principal point displaced by [`REFERENCE_OFFSET`], 0.5 px noise
    /// with quantization.
    pub fn reference() -> Self {
        let mut scene = Self::noiseless(reference_beacons(), CameraPose::default());
        scene.true_principal_point = offset_principal_point(&scene.intrinsics, REFERENCE_OFFSET);
        scene.noise = NoiseModel {
            pixel_sigma: 0.5,
            quantize: true,
        };
        scene.seed = 2020;
        scene
    }

    pub fn with_camera(&self, camera: CameraPose) -> Self {
        Self {
            camera,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.noise.pixel_sigma >= 0.0 && self.noise.pixel_sigma.is_finite()) {
            return Err(SimulationError::InvalidScene(format!(
                "pixel_sigma must be finite and non-negative, got {}",
                self.noise.pixel_sigma
            )));
        }
        if self.beacons.is_empty() {
            return Err(SimulationError::InvalidScene("no beacons".into()));
        }
        for b in self.beacons.iter() {
            self.check_above(b)?;
        }
        Ok(())
    }

    fn check_above(&self, beacon: &LedBeacon) -> Result<f64, SimulationError> {
        let h = beacon.position.z - self.camera.position.z;
        if h > 0.0 {
            Ok(h)
        } else {
            Err(SimulationError::BeaconBehindCamera {
                id: beacon.id,
                beacon_z: beacon.position.z,
                camera_z: self.camera.position.z,
            })
        }
    }

    /// Noiseless projections of every beacon, in-frame or not.
    pub fn project_all(&self) -> Result<Vec<Detection>, SimulationError> {
        self.beacons
            .iter()
            .map(|b| {
                project(b, self).map(|(pixel, _)| Detection {
                    beacon_id: b.id,
                    pixel,
                })
            })
            .collect()
    }
}

/// `nominal + offset`.
pub fn offset_principal_point(k: &CameraIntrinsics, offset: (f64, f64)) -> PixelPoint {
    let c = k.nominal_principal_point();
    PixelPoint::new(c.u + offset.0, c.v + offset.1)
}

/// Projects one beacon through the scene's camera onto the sensor.
///
/// Returns the pixel location and whether it falls inside the sensor.
pub fn project(
    beacon: &LedBeacon,
    scene: &SceneConfig,
) -> Result<(PixelPoint, bool), SimulationError> {
    let h = scene.check_above(beacon)?;
    let k = &scene.intrinsics;
    let dx = beacon.position.x - scene.camera.position.x;
    let dy = beacon.position.y - scene.camera.position.y;
    let (s, c) = scene.camera.yaw.sin_cos();
    let xc = c * dx + s * dy;
    let yc = -s * dx + c * dy;
    // cm / cm * mm
    let i = xc * k.focal_length() / h;
    let j = yc * k.focal_length() / h;
    let pp = scene.true_principal_point;
    let pixel = PixelPoint::new(pp.u + i / k.pitch_i(), pp.v + j / k.pitch_j());
    Ok((pixel, k.contains(&pixel)))
}

/// Seeded stream for one scene.
pub fn scene_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for trial `(point, trial)` of a dataset generated from `base_seed`.
///
/// The three values are packed side by side into the 256-bit key, so distinct
/// triples always give distinct streams.
pub fn trial_rng(base_seed: u64, point: u32, trial: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..12].copy_from_slice(&point.to_le_bytes());
    key[12..16].copy_from_slice(&trial.to_le_bytes());
    key[16] = 0x7a;
    ChaCha8Rng::from_seed(key)
}

fn perturb<R: Rng + ?Sized>(p: PixelPoint, noise: &NoiseModel, rng: &mut R) -> PixelPoint {
    let mut out = p;
    if noise.pixel_sigma > 0.0 {
        let normal = Normal::new(0.0, noise.pixel_sigma).expect("sigma validated");
        out.u += normal.sample(rng);
        out.v += normal.sample(rng);
    }
    if noise.quantize {
        out.u = out.u.round();
        out.v = out.v.round();
    }
    out
}

/// Observes the scene with its own seed.
pub fn observe(scene: &SceneConfig) -> Result<Vec<Detection>, SimulationError> {
    observe_with(scene, &mut scene_rng(scene.seed))
}

/// Projects every beacon, adds noise, quantizes if enabled, and drops
/// detections that fall outside the sensor.
///
/// Two noise draws are consumed per beacon in id order whether or not it is
/// kept, so the stream does not depend on visibility.
pub fn observe_with<R: Rng + ?Sized>(
    scene: &SceneConfig,
    rng: &mut R,
) -> Result<Vec<Detection>, SimulationError> {
    let mut out = Vec::with_capacity(scene.beacons.len());
    for b in scene.beacons.iter() {
        let (clean, _) = project(b, scene)?;
        let pixel = perturb(clean, &scene.noise, rng);
        if scene.intrinsics.contains(&pixel) {
            out.push(Detection {
                beacon_id: b.id,
                pixel,
            });
        }
    }
    Ok(out)
}

/// Image track of one beacon during a rotation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub beacon_id: BeaconId,
    pub points: Vec<PixelPoint>,
}

/// `n` yaw angles evenly spaced over one revolution, starting at 0.
pub fn even_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| k as f64 * std::f64::consts::TAU / n as f64)
        .collect()
}

/// Spins the camera about its optical axis through `angles` and records where
/// each beacon images. Noise follows the scene's model and seed.
pub fn rotation_sweep(scene: &SceneConfig, angles: &[f64]) -> Result<Vec<Track>, SimulationError> {
    if angles.len() < 3 {
        return Err(SimulationError::InvalidScene(format!(
            "a rotation sweep needs at least 3 angles, got {}",
            angles.len()
        )));
    }
    let mut rng = scene_rng(scene.seed);
    let mut tracks: Vec<Track> = scene
        .beacons
        .iter()
        .map(|b| Track {
            beacon_id: b.id,
            points: Vec::with_capacity(angles.len()),
        })
        .collect();
    for &angle in angles {
        let rotated = scene.with_camera(scene.camera.with_yaw(angle));
        for (b, track) in scene.beacons.iter().zip(tracks.iter_mut()) {
            let (clean, _) = project(b, &rotated)?;
            let pixel = perturb(clean, &scene.noise, &mut rng);
            if scene.intrinsics.contains(&pixel) {
                track.points.push(pixel);
            }
        }
    }
    Ok(tracks)
}

/// One simulated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: u32,
    pub trial: u32,
    pub truth: CameraPose,
    pub detections: Vec<Detection>,
}

/// Evenly spaced `n x n` grid over `[-half, half]^2` at height `z`.
pub fn square_grid(n: usize, half: f64, z: f64) -> Vec<WorldPoint> {
    let step = if n > 1 {
        2.0 * half / (n - 1) as f64
    } else {
        0.0
    };
    let coord = |k: usize| if n > 1 { -half + step * k as f64 } else { 0.0 };
    (0..n)
        .flat_map(|r| (0..n).map(move |c| WorldPoint::new(coord(c), coord(r), z)))
        .collect()
}

/// The 36-point measurement grid: 6 x 6 at 14 cm spacing, z = 0.
pub fn default_grid() -> Vec<WorldPoint> {
    square_grid(6, 35.0, 0.0)
}

/// Simulates `trials_per_point` observations at every grid point.
///
/// The camera keeps the template's yaw. Records are ordered by (point, trial)
/// and each trial draws from [`trial_rng`], so the dataset is identical for
/// every execution mode.
pub fn generate_trials(
    grid: &[WorldPoint],
    trials_per_point: usize,
    template: &SceneConfig,
    base_seed: u64,
    exec: Execution,
) -> Result<Vec<TrialRecord>, SimulationError> {
    if grid.is_empty() {
        return Err(SimulationError::InvalidScene("empty grid".into()));
    }
    if trials_per_point == 0 {
        return Err(SimulationError::InvalidScene(
            "trials_per_point must be at least 1".into(),
        ));
    }
    let total = grid.len() * trials_per_point;
    par::map_range(exec, total, |n| {
        let point = (n / trials_per_point) as u32;
        let trial = (n % trials_per_point) as u32;
        let truth = CameraPose {
            position: grid[point as usize],
            yaw: template.camera.yaw,
        };
        let scene = template.with_camera(truth);
        let mut rng = trial_rng(base_seed, point, trial);
        observe_with(&scene, &mut rng).map(|detections| TrialRecord {
            point,
            trial,
            truth,
            detections,
        })
    })
    .into_iter()
    .collect()
}
