//! Algebraic least-squares circle fit.

use crate::camera::PixelPoint;
use crate::error::CalibrationError;

/// Smallest/largest eigenvalue ratio of the point scatter below which the
/// points are treated as collinear.
const COLLINEAR_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFit {
    pub center: PixelPoint,
    pub radius: f64,
    /// RMS of the geometric residuals `|p - center| - radius`, px.
    pub rms_residual: f64,
}

/// Fits a circle by minimizing the algebraic residual
/// `sum (x^2 + y^2 + D x + E y + F)^2`.
///
/// Closed form and exact on noise-free points. Coordinates are centred on the
/// centroid first, which decouples F from (D, E) and keeps the 2x2 system well
/// conditioned for circles far from the origin.
pub fn fit_circle(points: &[PixelPoint]) -> Result<CircleFit, CalibrationError> {
    if points.len() < 3 {
        return Err(CalibrationError::DegenerateCircle(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mu = points.iter().map(|p| p.u).sum::<f64>() / n;
    let mv = points.iter().map(|p| p.v).sum::<f64>() / n;

    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    let (mut saz, mut sbz, mut sz) = (0.0, 0.0, 0.0);
    for p in points {
        let a = p.u - mu;
        let b = p.v - mv;
        let z = a * a + b * b;
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        saz += a * z;
        sbz += b * z;
        sz += z;
    }

    // Eigenvalues of the scatter matrix [[saa, sab], [sab, sbb]].
    let tr = saa + sbb;
    let disc = ((saa - sbb).powi(2) + 4.0 * sab * sab).sqrt();
    let lmax = 0.5 * (tr + disc);
    let lmin = 0.5 * (tr - disc);
    if lmax <= 0.0 || lmin <= COLLINEAR_RATIO * lmax {
        return Err(CalibrationError::DegenerateCircle(
            "points are collinear or coincident".into(),
        ));
    }

    let det = saa * sbb - sab * sab;
    let d = -(saz * sbb - sbz * sab) / det;
    let e = -(saa * sbz - sab * saz) / det;
    let f = -sz / n;

    let center = PixelPoint::new(mu - d / 2.0, mv - e / 2.0);
    let radius = (0.25 * (d * d + e * e) - f).max(0.0).sqrt();
    let rms_residual = (points
        .iter()
        .map(|p| (p.distance(&center) - radius).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(CircleFit {
        center,
        radius,
        rms_residual,
    })
}
