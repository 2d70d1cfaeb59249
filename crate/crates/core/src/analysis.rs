//! Positioning error statistics: mean, nearest-rank P90, max, RMS, CDF and histogram.

use crate::calibration::DispersionSummary;
use crate::error::AnalysisError;
use crate::positioning::WorldPoint;

/// Histogram bin width, cm.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` edges, cm.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Planar (x-y) error per trial, cm, in input order.
    pub per_trial_errors: Vec<f64>,
    /// 3D error per trial, cm; empty when built from bare error values.
    pub per_trial_errors_3d: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub p90: f64,
    pub rms: f64,
    /// `(error, fraction of trials with error <= it)`, sorted by error.
    pub cdf: Vec<(f64, f64)>,
    pub histogram: Histogram,
    pub dispersion: Option<DispersionSummary>,
}

/// Computes the report for index-aligned fixes and ground truths.
pub fn error_stats(
    fixes: &[WorldPoint],
    truths: &[WorldPoint],
) -> Result<ErrorReport, AnalysisError> {
    if fixes.len() != truths.len() {
        return Err(AnalysisError::LengthMismatch {
            fixes: fixes.len(),
            truths: truths.len(),
        });
    }
    let planar = fixes
        .iter()
        .zip(truths)
        .map(|(f, t)| f.planar_distance(t))
        .collect();
    let mut report = ErrorReport::from_errors(planar)?;
    report.per_trial_errors_3d = fixes
        .iter()
        .zip(truths)
        .map(|(f, t)| f.distance(t))
        .collect();
    Ok(report)
}

/// `ceil(0.9 n)`-th smallest value of a sorted slice.
pub fn nearest_rank_p90(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    // 9n/10 rounded up, in integers to avoid 0.9 * n landing just above an integer.
    let rank = (9 * n).div_ceil(10).max(1);
    sorted[rank - 1]
}

impl ErrorReport {
    pub fn from_errors(errors: Vec<f64>) -> Result<Self, AnalysisError> {
        if errors.is_empty() {
            return Err(AnalysisError::EmptyInput);
        }
        let n = errors.len() as f64;
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = errors.iter().sum::<f64>() / n;
        let max = *sorted.last().expect("non-empty");
        let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let p90 = nearest_rank_p90(&sorted);
        let cdf = sorted
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, (k + 1) as f64 / n))
            .collect();
        let histogram = histogram(&sorted, max);
        Ok(Self {
            per_trial_errors: errors,
            per_trial_errors_3d: Vec::new(),
            mean,
            max,
            p90,
            rms,
            cdf,
            histogram,
            dispersion: None,
        })
    }

    pub fn len(&self) -> usize {
        self.per_trial_errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_trial_errors.is_empty()
    }

    /// Fraction of trials with error at or below `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let count = self.cdf.partition_point(|&(e, _)| e <= x);
        count as f64 / self.len() as f64
    }

    /// One-line summary, e.g.
    /// `average positioning error is 0.82cm, maximum 1.93cm, 90% positioning error 1.417cm`.
    pub fn headline(&self) -> String {
        format!(
            "average positioning error is {:.2}cm, maximum {:.2}cm, 90% positioning error {:.3}cm",
            self.mean, self.max, self.p90
        )
    }
}

fn histogram(sorted: &[f64], max: f64) -> Histogram {
    let upper = max.ceil().max(HISTOGRAM_BIN_WIDTH);
    let bins = (upper / HISTOGRAM_BIN_WIDTH).round() as usize;
    let edges = (0..=bins).map(|k| k as f64 * HISTOGRAM_BIN_WIDTH).collect();
    let mut counts = vec![0; bins];
    for &e in sorted {
        let idx = ((e / HISTOGRAM_BIN_WIDTH).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// `b` relative to `a`: ratios `b / a` and differences `b - a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub mean_ratio: f64,
    pub p90_ratio: f64,
    pub max_ratio: f64,
    pub mean_diff: f64,
    pub p90_diff: f64,
    pub max_diff: f64,
}

pub fn compare_reports(a: &ErrorReport, b: &ErrorReport) -> Comparison {
    let ratio = |x: f64, y: f64| if x == y { 1.0 } else { y / x };
    Comparison {
        mean_ratio: ratio(a.mean, b.mean),
        p90_ratio: ratio(a.p90, b.p90),
        max_ratio: ratio(a.max, b.max),
        mean_diff: b.mean - a.mean,
        p90_diff: b.p90 - a.p90,
        max_diff: b.max - a.max,
    }
}
