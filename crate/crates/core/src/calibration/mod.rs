//! Principal-point calibration.
//!
//! Two procedures recover where the optical axis meets the sensor:
//!
//! * **Rotation**: spin the camera about its optical axis while watching one or
//!   more LEDs. Each LED image traces a circle around the true principal point;
//!   the fitted centres are averaged.
//! * **Dispersion**: hold the camera at a known position, collect many fixes,
//!   and convert the mean planar bias of those fixes back into a pixel shift of
//!   the principal point. The minimum enclosing circle of the fixes is reported
//!   alongside.

mod circle;
mod enclosing;

pub use circle::{fit_circle, CircleFit};
pub use enclosing::{min_enclosing_circle, EnclosingCircle};

use crate::camera::{CameraIntrinsics, PixelPoint};
use crate::error::CalibrationError;
use crate::positioning::{PositionFix, WorldPoint};
use crate::simulator::Track;

impl AsRef<[PixelPoint]> for Track {
    fn as_ref(&self) -> &[PixelPoint] {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationCalibration {
    pub intrinsics: CameraIntrinsics,
    /// Mean of the successfully fitted track centres.
    pub center: PixelPoint,
    /// Per-track fit, in input order.
    pub fits: Vec<Result<CircleFit, CalibrationError>>,
}

/// Rotation-method calibration.
///
/// Tracks that cannot be fitted (fewer than 3 points, collinear, or a single
/// repeated point from an on-axis LED) are kept in `fits` as errors and left
/// out of the average.
pub fn calibrate_rotation<T: AsRef<[PixelPoint]>>(
    tracks: &[T],
    k: &CameraIntrinsics,
) -> Result<RotationCalibration, CalibrationError> {
    let fits: Vec<_> = tracks.iter().map(|t| fit_circle(t.as_ref())).collect();
    let centers: Vec<_> = fits
        .iter()
        .filter_map(|f| f.as_ref().ok())
        .map(|f| f.center)
        .collect();
    if centers.is_empty() {
        return Err(CalibrationError::InsufficientTracks);
    }
    let n = centers.len() as f64;
    let center = PixelPoint::new(
        centers.iter().map(|c| c.u).sum::<f64>() / n,
        centers.iter().map(|c| c.v).sum::<f64>() / n,
    );
    let intrinsics = with_principal_point(k, center)?;
    Ok(RotationCalibration {
        intrinsics,
        center,
        fits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispersionMode {
    /// Scales the world bias by the magnification f / H before converting to pixels.
    #[default]
    Physical,
    /// `u1 = u0 + dx / di`, `v1 = v0 + dy / dj` taken as printed: world bias in
    /// cm divided by the pitch in mm/px, applied to the nominal centre.
    PaperLiteral,
}

/// Position and height of one fix, as needed by dispersion calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixSample {
    pub position: WorldPoint,
    /// Camera-to-LED-plane distance, cm.
    pub height: Option<f64>,
}

impl From<&PositionFix> for FixSample {
    fn from(fix: &PositionFix) -> Self {
        Self {
            position: fix.position,
            height: Some(fix.diagnostics.height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSummary {
    /// Mean fix minus ground truth, cm.
    pub mean_offset: (f64, f64),
    pub enclosing_center: (f64, f64),
    pub enclosing_radius: f64,
    pub sample_count: usize,
    /// Mean camera-to-LED-plane distance, cm.
    pub mean_height: f64,
    /// Shift applied to the principal point, px.
    pub pixel_correction: (f64, f64),
}

/// Dispersion-circle calibration.
///
/// `fixes` must all be taken at `ground_truth` with the camera axes aligned to
/// the world axes, using intrinsics `k`. In physical mode the correction is
/// `-(dx, dy) * f / (H * (di, dj))` relative to `k`'s current principal point:
/// a principal-point error of `+du` shifts every fix by `-du * di * H / f`, so
/// one pass removes the bias on noise-free data.
pub fn calibrate_dispersion(
    fixes: &[FixSample],
    ground_truth: WorldPoint,
    k: &CameraIntrinsics,
    mode: DispersionMode,
) -> Result<(CameraIntrinsics, DispersionSummary), CalibrationError> {
    if fixes.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    let mut heights = Vec::with_capacity(fixes.len());
    for (index, fix) in fixes.iter().enumerate() {
        match fix.height {
            Some(h) if h.is_finite() && h > 0.0 => heights.push(h),
            _ => return Err(CalibrationError::MissingDiagnostics { index }),
        }
    }
    let n = fixes.len() as f64;
    let mean_height = heights.iter().sum::<f64>() / n;
    let mean_x = fixes.iter().map(|f| f.position.x).sum::<f64>() / n;
    let mean_y = fixes.iter().map(|f| f.position.y).sum::<f64>() / n;
    let dx = mean_x - ground_truth.x;
    let dy = mean_y - ground_truth.y;

    let planar: Vec<[f64; 2]> = fixes.iter().map(|f| [f.position.x, f.position.y]).collect();
    let enclosing = min_enclosing_circle(&planar)?;

    let (corrected, pixel_correction) = match mode {
        DispersionMode::Physical => {
            let f = k.focal_length();
            let du = -dx * f / (mean_height * k.pitch_i());
            let dv = -dy * f / (mean_height * k.pitch_j());
            let pp = k.principal_point();
            (PixelPoint::new(pp.u + du, pp.v + dv), (du, dv))
        }
        DispersionMode::PaperLiteral => {
            let du = dx / k.pitch_i();
            let dv = dy / k.pitch_j();
            let c = k.nominal_principal_point();
            let pp = k.principal_point();
            let corrected = PixelPoint::new(c.u + du, c.v + dv);
            (corrected, (corrected.u - pp.u, corrected.v - pp.v))
        }
    };
    let intrinsics = with_principal_point(k, corrected)?;
    Ok((
        intrinsics,
        DispersionSummary {
            mean_offset: (dx, dy),
            enclosing_center: (enclosing.center[0], enclosing.center[1]),
            enclosing_radius: enclosing.radius,
            sample_count: fixes.len(),
            mean_height,
            pixel_correction,
        },
    ))
}

fn with_principal_point(
    k: &CameraIntrinsics,
    pp: PixelPoint,
) -> Result<CameraIntrinsics, CalibrationError> {
    k.with_principal_point(pp)
        .map_err(|_| CalibrationError::PrincipalPointOutOfFrame { u: pp.u, v: pp.v })
}
