//! Two- and three-LED camera localization from LED image coordinates.
//!
//! The camera is assumed parallel to the LED plane (no tilt). Image coordinates
//! follow the non-inverting convention used by [`crate::simulator`]: an LED
//! displaced by `+x` from the camera, in the camera frame, images at `+x * f / H`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, ImagePoint, PixelPoint};
use crate::error::PositioningError;

pub type BeaconId = u32;

/// Beacons used in one fix must share z within this many cm.
pub const HEIGHT_TOLERANCE_CM: f64 = 0.1;
/// Lower bound on |det| / (|a1| |a2|) of the trilateration matrix.
pub const SINGULAR_THRESHOLD: f64 = 1e-9;
/// Lower bound on the image distance between two LEDs, mm.
pub const COINCIDENT_THRESHOLD_MM: f64 = 1e-6;

/// World-frame point, cm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn planar_distance(&self, other: &WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        let dz = self.z - other.z;
        (self.planar_distance(other).powi(2) + dz * dz).sqrt()
    }

    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }
}

/// An LED luminaire with a known world position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedBeacon {
    pub id: BeaconId,
    pub position: WorldPoint,
}

impl LedBeacon {
    pub const fn new(id: BeaconId, x: f64, y: f64, z: f64) -> Self {
        Self {
            id,
            position: WorldPoint::new(x, y, z),
        }
    }
}

/// Beacons keyed by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeaconSet {
    beacons: BTreeMap<BeaconId, LedBeacon>,
}

impl BeaconSet {
    pub fn new(beacons: impl IntoIterator<Item = LedBeacon>) -> Result<Self, PositioningError> {
        let mut map = BTreeMap::new();
        for b in beacons {
            if map.insert(b.id, b).is_some() {
                return Err(PositioningError::DuplicateBeacon(b.id));
            }
        }
        Ok(Self { beacons: map })
    }

    pub fn get(&self, id: BeaconId) -> Option<&LedBeacon> {
        self.beacons.get(&id)
    }

    /// Beacons in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &LedBeacon> {
        self.beacons.values()
    }

    pub fn len(&self) -> usize {
        self.beacons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beacons.is_empty()
    }

    /// Ids of the two beacons furthest apart in the horizontal plane.
    pub fn longest_baseline_pair(&self) -> Option<(BeaconId, BeaconId)> {
        let all: Vec<_> = self.iter().collect();
        let mut best: Option<(f64, BeaconId, BeaconId)> = None;
        for (n, a) in all.iter().enumerate() {
            for b in &all[n + 1..] {
                let d = a.position.planar_distance(&b.position);
                if best.is_none_or(|(bd, _, _)| d > bd) {
                    best = Some((d, a.id, b.id));
                }
            }
        }
        best.map(|(_, a, b)| (a, b))
    }

    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Self {
        Self {
            beacons: self
                .beacons
                .iter()
                .map(|(&id, b)| {
                    (
                        id,
                        LedBeacon {
                            id,
                            position: b.position.translated(dx, dy, dz),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// An observed LED: which beacon, and where it landed on the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub beacon_id: BeaconId,
    pub pixel: PixelPoint,
}

impl Detection {
    pub const fn new(beacon_id: BeaconId, u: f64, v: f64) -> Self {
        Self {
            beacon_id,
            pixel: PixelPoint::new(u, v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    TwoLed,
    ThreeLed,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::TwoLed => "two-led",
            Method::ThreeLed => "three-led",
        }
    }
}

/// How the three-LED solver obtains the camera-to-LED-plane distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeightMode {
    /// Mean of the estimates from all three beacon pairs.
    #[default]
    AllPairs,
    /// Only the pair formed by the two lowest beacon ids.
    FirstPair,
}

/// Intermediate quantities of a fix.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Camera-to-LED-plane vertical distance, cm.
    pub height: f64,
    /// Image distance of the primary pair, mm.
    pub image_distance: f64,
    /// World horizontal distance of the primary pair, cm.
    pub world_distance: f64,
    /// Height estimate of every pair that contributed, cm.
    pub pair_heights: Vec<f64>,
    /// Per-beacon image radial distance, mm (three-LED only).
    pub image_radii: Vec<(BeaconId, f64)>,
    /// Per-beacon world horizontal distance, cm (three-LED only).
    pub world_radii: Vec<(BeaconId, f64)>,
    /// Camera yaw relative to the world frame, radians (two-LED only).
    pub theta: Option<f64>,
    /// z of the reference LED the camera z is measured from, cm.
    pub led_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    pub position: WorldPoint,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Result of the similar-triangle height estimate for one LED pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightEstimate {
    /// cm
    pub height: f64,
    /// cm
    pub camera_z: f64,
    /// mm
    pub image_distance: f64,
    /// cm
    pub world_distance: f64,
}

/// Camera height above/below the LED plane from one LED pair.
///
/// `H = D / d * f`. D is in cm and d, f in mm, so the mm/cm factors cancel and
/// H comes out in cm. The camera z is measured from the first beacon.
pub fn estimate_height(
    a: (ImagePoint, &LedBeacon),
    b: (ImagePoint, &LedBeacon),
    k: &CameraIntrinsics,
) -> Result<HeightEstimate, PositioningError> {
    let (img_a, led_a) = a;
    let (img_b, led_b) = b;
    if led_a.id == led_b.id {
        return Err(PositioningError::DuplicateBeacon(led_a.id));
    }
    check_heights([led_a, led_b])?;
    let d = img_a.distance(&img_b);
    if d < COINCIDENT_THRESHOLD_MM {
        return Err(PositioningError::CoincidentProjection { d_mm: d });
    }
    let world_distance = led_a.position.planar_distance(&led_b.position);
    if world_distance <= 0.0 {
        return Err(PositioningError::SingularGeometry { det: 0.0 });
    }
    let height = world_distance / d * k.focal_length();
    Ok(HeightEstimate {
        height,
        camera_z: led_a.position.z - height,
        image_distance: d,
        world_distance,
    })
}

fn check_heights<'a>(
    leds: impl IntoIterator<Item = &'a LedBeacon>,
) -> Result<(), PositioningError> {
    let (lo, hi) = leds
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
            (lo.min(b.position.z), hi.max(b.position.z))
        });
    let dz = hi - lo;
    if dz > HEIGHT_TOLERANCE_CM {
        return Err(PositioningError::UnequalBeaconHeights { dz });
    }
    Ok(())
}

/// Resolves detections against the beacon set, converting to image
/// coordinates and ordering by ascending beacon id.
fn resolve<'b>(
    detections: &[Detection],
    beacons: &'b BeaconSet,
    k: &CameraIntrinsics,
    expected: usize,
) -> Result<Vec<(ImagePoint, &'b LedBeacon)>, PositioningError> {
    if detections.len() != expected {
        return Err(PositioningError::WrongDetectionCount {
            expected,
            got: detections.len(),
        });
    }
    let mut out = Vec::with_capacity(expected);
    for det in detections {
        let led = beacons
            .get(det.beacon_id)
            .ok_or(PositioningError::UnknownBeacon(det.beacon_id))?;
        out.push((k.pixel_to_image(det.pixel), led));
    }
    out.sort_by_key(|(_, led)| led.id);
    if let Some(w) = out.windows(2).find(|w| w[0].1.id == w[1].1.id) {
        return Err(PositioningError::DuplicateBeacon(w[0].1.id));
    }
    Ok(out)
}

/// Three-LED trilateration.
///
/// Radial image distances are scaled to horizontal world distances with the
/// estimated height, and the three circle equations are reduced to a 2x2
/// linear system by subtracting the first from the other two. The system is
/// solved in coordinates relative to the lowest-id beacon.
pub fn trilaterate_three(
    detections: &[Detection],
    beacons: &BeaconSet,
    k: &CameraIntrinsics,
    mode: HeightMode,
) -> Result<PositionFix, PositioningError> {
    let obs = resolve(detections, beacons, k, 3)?;
    check_heights(obs.iter().map(|(_, b)| *b))?;

    let p1 = obs[0].1.position;
    let a1 = (obs[1].1.position.x - p1.x, obs[1].1.position.y - p1.y);
    let a2 = (obs[2].1.position.x - p1.x, obs[2].1.position.y - p1.y);
    let det = a1.0 * a2.1 - a1.1 * a2.0;
    let scale = a1.0.hypot(a1.1) * a2.0.hypot(a2.1);
    let normalized = if scale > 0.0 { det / scale } else { 0.0 };
    if normalized.abs() < SINGULAR_THRESHOLD {
        return Err(PositioningError::SingularGeometry { det: normalized });
    }

    let pairs: &[(usize, usize)] = match mode {
        HeightMode::AllPairs => &[(0, 1), (0, 2), (1, 2)],
        HeightMode::FirstPair => &[(0, 1)],
    };
    let estimates = pairs
        .iter()
        .map(|&(a, b)| estimate_height(obs[a], obs[b], k))
        .collect::<Result<Vec<_>, _>>()?;
    let height = estimates.iter().map(|e| e.height).sum::<f64>() / estimates.len() as f64;
    let f = k.focal_length();

    let image_radii: Vec<_> = obs.iter().map(|(img, b)| (b.id, img.norm())).collect();
    let world_radii: Vec<_> = image_radii
        .iter()
        .map(|&(id, l)| (id, height / f * l))
        .collect();
    let (r1, r2, r3) = (world_radii[0].1, world_radii[1].1, world_radii[2].1);

    let rhs1 = 0.5 * (r1 * r1 - r2 * r2 + a1.0 * a1.0 + a1.1 * a1.1);
    let rhs2 = 0.5 * (r1 * r1 - r3 * r3 + a2.0 * a2.0 + a2.1 * a2.1);
    let qx = (rhs1 * a2.1 - rhs2 * a1.1) / det;
    let qy = (a1.0 * rhs2 - a2.0 * rhs1) / det;

    let led_z = p1.z;
    Ok(PositionFix {
        position: WorldPoint::new(p1.x + qx, p1.y + qy, led_z - height),
        method: Method::ThreeLed,
        diagnostics: Diagnostics {
            height,
            image_distance: estimates[0].image_distance,
            world_distance: estimates[0].world_distance,
            pair_heights: estimates.iter().map(|e| e.height).collect(),
            image_radii,
            world_radii,
            theta: None,
            led_z,
        },
    })
}

/// Two-LED positioning with yaw correction.
///
/// The camera yaw is recovered from the heading of the LED baseline in the
/// image versus its heading in the world; for a baseline parallel to the world
/// X axis the world heading is 0 or pi. The camera's displacement from the
/// baseline midpoint is computed in the camera frame from the midpoint's image
/// coordinates, rotated into the world frame, and added to the midpoint.
pub fn locate_two(
    detections: &[Detection],
    beacons: &BeaconSet,
    k: &CameraIntrinsics,
) -> Result<PositionFix, PositioningError> {
    let obs = resolve(detections, beacons, k, 2)?;
    let (img1, led1) = obs[0];
    let (img2, led2) = obs[1];
    let est = estimate_height(obs[0], obs[1], k)?;

    let image_heading = (img1.j - img2.j).atan2(img1.i - img2.i);
    let p1 = led1.position;
    let p2 = led2.position;
    let world_heading = (p1.y - p2.y).atan2(p1.x - p2.x);
    let theta = wrap_angle(world_heading - image_heading);

    let scale = -est.height / k.focal_length();
    let dx = scale * 0.5 * (img1.i + img2.i);
    let dy = scale * 0.5 * (img1.j + img2.j);
    let (s, c) = theta.sin_cos();
    let x = 0.5 * (p1.x + p2.x) + c * dx - s * dy;
    let y = 0.5 * (p1.y + p2.y) + s * dx + c * dy;

    Ok(PositionFix {
        position: WorldPoint::new(x, y, est.camera_z),
        method: Method::TwoLed,
        diagnostics: Diagnostics {
            height: est.height,
            image_distance: est.image_distance,
            world_distance: est.world_distance,
            pair_heights: vec![est.height],
            image_radii: Vec::new(),
            world_radii: Vec::new(),
            theta: Some(theta),
            led_z: p1.z,
        },
    })
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}
