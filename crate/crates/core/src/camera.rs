//! Pixel and image-plane coordinate systems.
//!
//! Units are fixed across the crate: world coordinates in centimetres, image
//! coordinates in millimetres on the sensor plane, pixel coordinates in pixels.
//! Image axes are parallel to the pixel axes with the same orientation, and the
//! image origin sits on the principal point.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Default pixel pitch for the 800x600 reference sensor, mm/px.
pub const DEFAULT_PIXEL_PITCH_MM: f64 = 0.006;
/// Default focal length, mm.
pub const DEFAULT_FOCAL_LENGTH_MM: f64 = 3.0;
/// Default sensor resolution, px.
pub const DEFAULT_RESOLUTION: (u32, u32) = (800, 600);

/// A location on the sensor in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// A location on the image plane in millimetres, relative to the principal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub i: f64,
    pub j: f64,
}

impl ImagePoint {
    pub const fn new(i: f64, j: f64) -> Self {
        Self { i, j }
    }

    /// Radial distance from the image origin, mm.
    pub fn norm(&self) -> f64 {
        self.i.hypot(self.j)
    }

    pub fn distance(&self, other: &ImagePoint) -> f64 {
        (self.i - other.i).hypot(self.j - other.j)
    }
}

/// Focal length, pixel pitches, resolution and principal point of a camera.
///
/// The nominal principal point is always the image centre. The corrected
/// principal point starts equal to it and is what calibration overwrites; every
/// pixel/image conversion goes through the corrected one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    focal_length: f64,
    pitch_i: f64,
    pitch_j: f64,
    width: u32,
    height: u32,
    principal_point: PixelPoint,
}

impl CameraIntrinsics {
    /// Builds intrinsics with the principal point at the image centre.
    pub fn new(
        focal_length_mm: f64,
        pitch_i_mm: f64,
        pitch_j_mm: f64,
        resolution: (u32, u32),
    ) -> Result<Self, ConfigError> {
        let positive = |name: &str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!(
                    "{name} must be positive and finite, got {value}"
                )))
            }
        };
        positive("focal_length", focal_length_mm)?;
        positive("pitch_i", pitch_i_mm)?;
        positive("pitch_j", pitch_j_mm)?;
        if resolution.0 == 0 || resolution.1 == 0 {
            return Err(ConfigError::Invalid(format!(
                "resolution must be non-zero, got {}x{}",
                resolution.0, resolution.1
            )));
        }
        let center = PixelPoint::new(resolution.0 as f64 / 2.0, resolution.1 as f64 / 2.0);
        Ok(Self {
            focal_length: focal_length_mm,
            pitch_i: pitch_i_mm,
            pitch_j: pitch_j_mm,
            width: resolution.0,
            height: resolution.1,
            principal_point: center,
        })
    }

    /// The 800x600, f = 3 mm, 0.006 mm/px reference camera.
    pub fn reference() -> Self {
        Self::new(
            DEFAULT_FOCAL_LENGTH_MM,
            DEFAULT_PIXEL_PITCH_MM,
            DEFAULT_PIXEL_PITCH_MM,
            DEFAULT_RESOLUTION,
        )
        .expect("reference intrinsics are valid")
    }

    /// Returns a copy with the corrected principal point replaced.
    ///
    /// The point must lie inside the sensor rectangle.
    pub fn with_principal_point(mut self, pp: PixelPoint) -> Result<Self, ConfigError> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(pp.u.is_finite() && pp.v.is_finite())
            || pp.u < 0.0
            || pp.u > w
            || pp.v < 0.0
            || pp.v > h
        {
            return Err(ConfigError::Invalid(format!(
                "principal point ({}, {}) outside sensor [0, {w}] x [0, {h}]",
                pp.u, pp.v
            )));
        }
        self.principal_point = pp;
        Ok(self)
    }

    /// Focal length, mm.
    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    /// Pixel pitch along u, mm/px.
    pub fn pitch_i(&self) -> f64 {
        self.pitch_i
    }

    /// Pixel pitch along v, mm/px.
    pub fn pitch_j(&self) -> f64 {
        self.pitch_j
    }

    pub fn resolution(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Image centre, the principal point assumed before calibration.
    pub fn nominal_principal_point(&self) -> PixelPoint {
        PixelPoint::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Principal point used by the pixel/image conversions.
    pub fn principal_point(&self) -> PixelPoint {
        self.principal_point
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.u <= self.width as f64 && p.v >= 0.0 && p.v <= self.height as f64
    }

    /// Pixel to image coordinates: `i = (u - u1) * di`, `j = (v - v1) * dj`.
    pub fn pixel_to_image(&self, p: PixelPoint) -> ImagePoint {
        pixel_to_image(p, self)
    }

    pub fn image_to_pixel(&self, p: ImagePoint) -> PixelPoint {
        image_to_pixel(p, self)
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::reference()
    }
}

/// Converts a pixel location to image-plane millimetres about the corrected
/// principal point.
pub fn pixel_to_image(p: PixelPoint, k: &CameraIntrinsics) -> ImagePoint {
    let pp = k.principal_point;
    ImagePoint {
        i: (p.u - pp.u) * k.pitch_i,
        j: (p.v - pp.v) * k.pitch_j,
    }
}

/// Exact inverse of [`pixel_to_image`].
pub fn image_to_pixel(p: ImagePoint, k: &CameraIntrinsics) -> PixelPoint {
    let pp = k.principal_point;
    PixelPoint {
        u: pp.u + p.i / k.pitch_i,
        v: pp.v + p.j / k.pitch_j,
    }
}
