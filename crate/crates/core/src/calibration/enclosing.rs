//! Exact minimum enclosing circle (Welzl's algorithm, iterative form).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CalibrationError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnclosingCircle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl EnclosingCircle {
    fn point(p: [f64; 2]) -> Self {
        Self {
            center: p,
            radius: 0.0,
        }
    }

    fn diameter(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            center: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
            radius: 0.5 * dist(a, b),
        }
    }

    /// Circumcircle of three points, or the widest pair's diameter circle when
    /// they are collinear.
    fn three(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Self {
        let (bx, by) = (b[0] - a[0], b[1] - a[1]);
        let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
        let d = 2.0 * (bx * cy - by * cx);
        let scale = (bx * bx + by * by).max(cx * cx + cy * cy);
        if d.abs() <= 1e-14 * scale {
            return [
                Self::diameter(a, b),
                Self::diameter(a, c),
                Self::diameter(b, c),
            ]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .expect("non-empty");
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        Self {
            center: [a[0] + ux, a[1] + uy],
            radius: ux.hypot(uy),
        }
    }

    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        dist(self.center, p) <= self.radius + slack
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Smallest circle containing every point.
///
/// Expected linear time; the input order is shuffled with a fixed seed, so the
/// result is deterministic.
pub fn min_enclosing_circle(points: &[[f64; 2]]) -> Result<EnclosingCircle, CalibrationError> {
    if points.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed_c1c1e));
    let extent = pts
        .iter()
        .flat_map(|p| [p[0].abs(), p[1].abs()])
        .fold(1.0f64, f64::max);
    let slack = 1e-12 * extent;

    let mut c = EnclosingCircle::point(pts[0]);
    for i in 1..pts.len() {
        if c.contains(pts[i], slack) {
            continue;
        }
        c = EnclosingCircle::point(pts[i]);
        for j in 0..i {
            if c.contains(pts[j], slack) {
                continue;
            }
            c = EnclosingCircle::diameter(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k], slack) {
                    c = EnclosingCircle::three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    Ok(c)
}
