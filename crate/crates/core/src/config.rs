//! JSON scene configuration.
//!
//! One file holds the beacons, the camera intrinsics (including the corrected
//! principal point written back by calibration), the simulated ground truth and
//! the measurement plan:
//!
//! ```json
//! {
//!   "beacons": [{ "id": 1, "x": -46.5, "y": -49.5, "z": 150.0 }],
//!   "camera": { "x": 0.0, "y": 0.0, "z": 0.0, "yaw": 0.0 },
//!   "intrinsics": {
//!     "focal_length_mm": 3.0, "pitch_i_mm": 0.006, "pitch_j_mm": 0.006,
//!     "width_px": 800, "height_px": 600, "principal_point": [400.0, 300.0]
//!   },
//!   "true_principal_point": [406.3, 295.9],
//!   "noise": { "pixel_sigma": 0.5, "quantize": true },
//!   "seed": 2020,
//!   "two_led_pair": [1, 3],
//!   "experiment": { "trials_per_point": 12, "grid": [[0.0, 0.0, 0.0]] }
//! }
//! ```
//!
//! `principal_point`, `true_principal_point`, `two_led_pair` and `grid` are
//! optional and default to the image centre, the image centre, the longest
//! baseline pair and the 36-point grid respectively.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{CameraIntrinsics, PixelPoint};
use crate::error::{ConfigError, Error};
use crate::positioning::{BeaconId, BeaconSet, LedBeacon, WorldPoint};
use crate::simulator::{default_grid, CameraPose, NoiseModel, SceneConfig};

/// Measurement plan for trial generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub grid: Vec<WorldPoint>,
    pub trials_per_point: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            trials_per_point: 12,
        }
    }
}

/// Everything a scene file describes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    /// Beacons used by the two-LED method.
    pub two_led_pair: (BeaconId, BeaconId),
    pub plan: ExperimentPlan,
}

impl ExperimentConfig {
    /// Reference scene with the default plan.
    pub fn reference() -> Self {
        let scene = SceneConfig::reference();
        let two_led_pair = scene
            .beacons
            .longest_baseline_pair()
            .expect("three beacons");
        Self {
            scene,
            two_led_pair,
            plan: ExperimentPlan::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_json(&text, &path.display().to_string())?)
    }

    /// Parses a scene file. `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            ConfigError::Parse {
                path: origin.to_string(),
                field,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        file.into_config()
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&SceneFile::from_config(self)).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    beacons: Vec<BeaconEntry>,
    #[serde(default)]
    camera: PoseEntry,
    intrinsics: IntrinsicsEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_principal_point: Option<[f64; 2]>,
    #[serde(default)]
    noise: NoiseModel,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    two_led_pair: Option<[BeaconId; 2]>,
    #[serde(default)]
    experiment: PlanEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeaconEntry {
    id: BeaconId,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseEntry {
    x: f64,
    y: f64,
    z: f64,
    #[serde(default)]
    yaw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsEntry {
    focal_length_mm: f64,
    pitch_i_mm: f64,
    pitch_j_mm: f64,
    width_px: u32,
    height_px: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    principal_point: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanEntry {
    #[serde(default = "default_trials")]
    trials_per_point: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<[f64; 3]>>,
}

impl Default for PlanEntry {
    fn default() -> Self {
        Self {
            trials_per_point: default_trials(),
            grid: None,
        }
    }
}

fn default_trials() -> usize {
    12
}

fn invalid(field: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(format!("{field}: {e}"))
}

impl SceneFile {
    fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let beacons = BeaconSet::new(
            self.beacons
                .iter()
                .map(|b| LedBeacon::new(b.id, b.x, b.y, b.z)),
        )
        .map_err(|e| invalid("beacons", e))?;
        let ie = &self.intrinsics;
        let mut intrinsics = CameraIntrinsics::new(
            ie.focal_length_mm,
            ie.pitch_i_mm,
            ie.pitch_j_mm,
            (ie.width_px, ie.height_px),
        )
        .map_err(|e| invalid("intrinsics", e))?;
        if let Some([u, v]) = ie.principal_point {
            intrinsics = intrinsics
                .with_principal_point(PixelPoint::new(u, v))
                .map_err(|e| invalid("intrinsics.principal_point", e))?;
        }
        let true_principal_point = self
            .true_principal_point
            .map(|[u, v]| PixelPoint::new(u, v))
            .unwrap_or_else(|| intrinsics.nominal_principal_point());
        let scene = SceneConfig {
            beacons,
            camera: CameraPose::new(self.camera.x, self.camera.y, self.camera.z, self.camera.yaw),
            intrinsics,
            true_principal_point,
            noise: self.noise,
            seed: self.seed,
        };
        scene.validate().map_err(|e| invalid("scene", e))?;

        let two_led_pair = match self.two_led_pair {
            Some([a, b]) => {
                if a == b || scene.beacons.get(a).is_none() || scene.beacons.get(b).is_none() {
                    return Err(invalid(
                        "two_led_pair",
                        format!("[{a}, {b}] must name two distinct known beacons"),
                    ));
                }
                (a.min(b), a.max(b))
            }
            None => scene
                .beacons
                .longest_baseline_pair()
                .ok_or_else(|| invalid("beacons", "at least two beacons are required"))?,
        };

        if self.experiment.trials_per_point == 0 {
            return Err(invalid("experiment.trials_per_point", "must be at least 1"));
        }
        let grid = match self.experiment.grid {
            Some(g) if g.is_empty() => return Err(invalid("experiment.grid", "must not be empty")),
            Some(g) => g
                .into_iter()
                .map(|[x, y, z]| WorldPoint::new(x, y, z))
                .collect(),
            None => default_grid(),
        };
        Ok(ExperimentConfig {
            scene,
            two_led_pair,
            plan: ExperimentPlan {
                grid,
                trials_per_point: self.experiment.trials_per_point,
            },
        })
    }

    fn from_config(c: &ExperimentConfig) -> Self {
        let s = &c.scene;
        let k = &s.intrinsics;
        let pp = k.principal_point();
        let (w, h) = k.resolution();
        Self {
            beacons: s
                .beacons
                .iter()
                .map(|b| BeaconEntry {
                    id: b.id,
                    x: b.position.x,
                    y: b.position.y,
                    z: b.position.z,
                })
                .collect(),
            camera: PoseEntry {
                x: s.camera.position.x,
                y: s.camera.position.y,
                z: s.camera.position.z,
                yaw: s.camera.yaw,
            },
            intrinsics: IntrinsicsEntry {
                focal_length_mm: k.focal_length(),
                pitch_i_mm: k.pitch_i(),
                pitch_j_mm: k.pitch_j(),
                width_px: w,
                height_px: h,
                principal_point: Some([pp.u, pp.v]),
            },
            true_principal_point: Some([s.true_principal_point.u, s.true_principal_point.v]),
            noise: s.noise,
            seed: s.seed,
            two_led_pair: Some([c.two_led_pair.0, c.two_led_pair.1]),
            experiment: PlanEntry {
                trials_per_point: c.plan.trials_per_point,
                grid: Some(c.plan.grid.iter().map(|p| [p.x, p.y, p.z]).collect()),
            },
        }
    }
}
