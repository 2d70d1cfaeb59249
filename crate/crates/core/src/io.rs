//! CSV files exchanged between commands.
//!
//! Every float is written with 6 decimals so reruns produce byte-identical
//! files.
//!
//! | file | columns |
//! |------|---------|
//! | detections | `point,trial,beacon_id,u,v` (`point`/`trial` optional on input) |
//! | ground truth | `point,trial,x,y,z,yaw` |
//! | fixes | `point,trial,method,status,x,y,z,height,image_distance_mm,world_distance_cm,theta,message` |
//! | tracks | `track_id,sample_index,u,v` |
//! | errors | `point,trial,error_2d,error_3d` |
//! | cdf | `error,fraction` |
//! | histogram | `bin_lo,bin_hi,count` |

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::analysis::ErrorReport;
use crate::calibration::FixSample;
use crate::camera::PixelPoint;
use crate::error::{Error, PositioningError};
use crate::experiment::FixOutcome;
use crate::positioning::{BeaconId, Detection, WorldPoint};
use crate::simulator::{CameraPose, Track, TrialRecord};

/// Fixed-point rendering used in every CSV.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, Error> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), Error>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

pub fn write_detections(path: &Path, records: &[TrialRecord]) -> Result<(), Error> {
    write_rows(
        path,
        &["point", "trial", "beacon_id", "u", "v"],
        records.iter().flat_map(|r| {
            r.detections.iter().map(move |d| {
                vec![
                    r.point.to_string(),
                    r.trial.to_string(),
                    d.beacon_id.to_string(),
                    fmt6(d.pixel.u),
                    fmt6(d.pixel.v),
                ]
            })
        }),
    )
}

pub fn write_ground_truth(path: &Path, records: &[TrialRecord]) -> Result<(), Error> {
    write_rows(
        path,
        &["point", "trial", "x", "y", "z", "yaw"],
        records.iter().map(|r| {
            let p = r.truth.position;
            vec![
                r.point.to_string(),
                r.trial.to_string(),
                fmt6(p.x),
                fmt6(p.y),
                fmt6(p.z),
                fmt6(r.truth.yaw),
            ]
        }),
    )
}

#[derive(Deserialize)]
struct DetectionRow {
    #[serde(default)]
    point: u32,
    #[serde(default)]
    trial: u32,
    beacon_id: BeaconId,
    u: f64,
    v: f64,
}

#[derive(Deserialize)]
struct TruthRow {
    point: u32,
    trial: u32,
    x: f64,
    y: f64,
    z: f64,
    #[serde(default)]
    yaw: f64,
}

/// Reads detections grouped into trials, ordered by (point, trial).
///
/// Ground truth is attached when `truth` names a ground-truth CSV; otherwise
/// every record's truth is the default pose.
pub fn read_trials(detections: &Path, truth: Option<&Path>) -> Result<Vec<TrialRecord>, Error> {
    let mut grouped: BTreeMap<(u32, u32), Vec<Detection>> = BTreeMap::new();
    for row in read_rows::<DetectionRow>(detections)? {
        grouped
            .entry((row.point, row.trial))
            .or_default()
            .push(Detection {
                beacon_id: row.beacon_id,
                pixel: PixelPoint::new(row.u, row.v),
            });
    }
    let truths = match truth {
        Some(p) => read_ground_truth(p)?,
        None => BTreeMap::new(),
    };
    Ok(grouped
        .into_iter()
        .map(|((point, trial), detections)| TrialRecord {
            point,
            trial,
            truth: truths.get(&(point, trial)).copied().unwrap_or_default(),
            detections,
        })
        .collect())
}

pub fn read_ground_truth(path: &Path) -> Result<BTreeMap<(u32, u32), CameraPose>, Error> {
    Ok(read_rows::<TruthRow>(path)?
        .into_iter()
        .map(|r| ((r.point, r.trial), CameraPose::new(r.x, r.y, r.z, r.yaw)))
        .collect())
}

/// Writes one row per trial. Failed trials keep their row with the error kind
/// in `status` and empty numeric columns.
pub fn write_fixes(
    path: &Path,
    keys: &[(u32, u32)],
    method: &str,
    fixes: &[FixOutcome],
) -> Result<(), Error> {
    write_rows(
        path,
        &[
            "point",
            "trial",
            "method",
            "status",
            "x",
            "y",
            "z",
            "height",
            "image_distance_mm",
            "world_distance_cm",
            "theta",
            "message",
        ],
        keys.iter().zip(fixes).map(|(&(point, trial), fix)| {
            let mut row = vec![point.to_string(), trial.to_string(), method.to_string()];
            match fix {
                Ok(f) => {
                    let d = &f.diagnostics;
                    row.extend([
                        "ok".to_string(),
                        fmt6(f.position.x),
                        fmt6(f.position.y),
                        fmt6(f.position.z),
                        fmt6(d.height),
                        fmt6(d.image_distance),
                        fmt6(d.world_distance),
                        d.theta.map(fmt6).unwrap_or_default(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    row.push(error_kind(e).to_string());
                    row.extend(std::iter::repeat_n(String::new(), 7));
                    row.push(e.to_string());
                }
            }
            row
        }),
    )
}

pub fn error_kind(e: &PositioningError) -> &'static str {
    match e {
        PositioningError::CoincidentProjection { .. } => "CoincidentProjection",
        PositioningError::UnequalBeaconHeights { .. } => "UnequalBeaconHeights",
        PositioningError::SingularGeometry { .. } => "SingularGeometry",
        PositioningError::UnknownBeacon(_) => "UnknownBeacon",
        PositioningError::DuplicateBeacon(_) => "DuplicateBeacon",
        PositioningError::WrongDetectionCount { .. } => "WrongDetectionCount",
    }
}

/// One row of a fixes CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixRow {
    pub point: u32,
    pub trial: u32,
    pub method: String,
    pub status: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub height: Option<f64>,
    pub image_distance_mm: Option<f64>,
    pub world_distance_cm: Option<f64>,
    pub theta: Option<f64>,
    pub message: Option<String>,
}

impl FixRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn position(&self) -> Option<WorldPoint> {
        Some(WorldPoint::new(self.x?, self.y?, self.z?))
    }

    pub fn sample(&self) -> Option<FixSample> {
        Some(FixSample {
            position: self.position()?,
            height: self.height,
        })
    }
}

pub fn read_fixes(path: &Path) -> Result<Vec<FixRow>, Error> {
    read_rows(path)
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<(), Error> {
    write_rows(
        path,
        &["track_id", "sample_index", "u", "v"],
        tracks.iter().flat_map(|t| {
            t.points.iter().enumerate().map(move |(n, p)| {
                vec![t.beacon_id.to_string(), n.to_string(), fmt6(p.u), fmt6(p.v)]
            })
        }),
    )
}

#[derive(Deserialize)]
struct TrackRow {
    track_id: BeaconId,
    sample_index: usize,
    u: f64,
    v: f64,
}

/// Reads rotation tracks, ordered by track id then sample index.
pub fn read_tracks(path: &Path) -> Result<Vec<Track>, Error> {
    let mut grouped: BTreeMap<BeaconId, Vec<(usize, PixelPoint)>> = BTreeMap::new();
    for row in read_rows::<TrackRow>(path)? {
        grouped
            .entry(row.track_id)
            .or_default()
            .push((row.sample_index, PixelPoint::new(row.u, row.v)));
    }
    Ok(grouped
        .into_iter()
        .map(|(beacon_id, mut pts)| {
            pts.sort_by_key(|&(n, _)| n);
            Track {
                beacon_id,
                points: pts.into_iter().map(|(_, p)| p).collect(),
            }
        })
        .collect())
}

/// Per-trial errors, CDF and histogram tables for one report.
pub fn write_report_tables(
    dir: &Path,
    keys: &[(u32, u32)],
    report: &ErrorReport,
) -> Result<(), Error> {
    let has_3d = report.per_trial_errors_3d.len() == report.per_trial_errors.len();
    write_rows(
        &dir.join("errors.csv"),
        &["point", "trial", "error_2d", "error_3d"],
        keys.iter().enumerate().map(|(n, &(p, t))| {
            vec![
                p.to_string(),
                t.to_string(),
                fmt6(report.per_trial_errors[n]),
                if has_3d {
                    fmt6(report.per_trial_errors_3d[n])
                } else {
                    String::new()
                },
            ]
        }),
    )?;
    write_rows(
        &dir.join("cdf.csv"),
        &["error", "fraction"],
        report.cdf.iter().map(|&(e, f)| vec![fmt6(e), fmt6(f)]),
    )?;
    let h = &report.histogram;
    write_rows(
        &dir.join("histogram.csv"),
        &["bin_lo", "bin_hi", "count"],
        h.counts
            .iter()
            .enumerate()
            .map(|(n, c)| vec![fmt6(h.edges[n]), fmt6(h.edges[n + 1]), c.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Locator;
    use crate::par::Execution;
    use crate::positioning::Method;
    use crate::simulator::{default_grid, generate_trials, SceneConfig};

    #[test]
    fn fixed_point_format() {
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(-1e-9), "0.000000");
        assert_eq!(fmt6(-2.5), "-2.500000");
    }

    #[test]
    fn dataset_survives_csv() {
        let dir = tempfile::tempdir().unwrap();
        let scene = SceneConfig::reference();
        let data =
            generate_trials(&default_grid()[..3], 2, &scene, 1, Execution::Sequential).unwrap();
        let (det, gt) = (dir.path().join("d.csv"), dir.path().join("g.csv"));
        write_detections(&det, &data).unwrap();
        write_ground_truth(&gt, &data).unwrap();
        let back = read_trials(&det, Some(&gt)).unwrap();
        assert_eq!(back.len(), data.len());
        for (a, b) in back.iter().zip(&data) {
            assert_eq!((a.point, a.trial, a.truth), (b.point, b.trial, b.truth));
            // quantized detections are integers, so they survive exactly
            assert_eq!(a.detections, b.detections);
        }
    }

    #[test]
    fn fixes_round_trip_with_failures() {
        let dir = tempfile::tempdir().unwrap();
        let scene = SceneConfig::reference();
        let data =
            generate_trials(&default_grid()[..2], 1, &scene, 1, Execution::Sequential).unwrap();
        let loc = Locator::new(Method::TwoLed, (1, 3));
        let mut fixes: Vec<_> = data
            .iter()
            .map(|r| loc.locate(&r.detections, &scene.beacons, &scene.intrinsics))
            .collect();
        fixes.push(Err(PositioningError::SingularGeometry { det: 0.0 }));
        let keys = [(0, 0), (1, 0), (2, 0)];
        let path = dir.path().join("f.csv");
        write_fixes(&path, &keys, "two-led", &fixes).unwrap();
        let rows = read_fixes(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok() && rows[0].theta.is_some());
        assert_eq!(rows[2].status, "SingularGeometry");
        assert!(rows[2].position().is_none());
        let f = fixes[1].as_ref().unwrap();
        assert!((rows[1].x.unwrap() - f.position.x).abs() <= 5e-7);
    }

    #[test]
    fn detections_without_trial_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "beacon_id,u,v\n3,553.3,463.3\n1,250.0,100.0\n").unwrap();
        let t = read_trials(&path, None).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].detections.len(), 2);
    }

    #[test]
    fn tracks_are_regrouped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "track_id,sample_index,u,v\n2,1,5,6\n1,0,1,2\n2,0,3,4\n",
        )
        .unwrap();
        let t = read_tracks(&path).unwrap();
        assert_eq!(t[0].beacon_id, 1);
        assert_eq!(
            t[1].points,
            vec![PixelPoint::new(3.0, 4.0), PixelPoint::new(5.0, 6.0)]
        );
    }
}
