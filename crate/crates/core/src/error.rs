use std::path::PathBuf;

use thiserror::Error;

use crate::positioning::BeaconId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: field `{field}` at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PositioningError {
    #[error("LED projections coincide (image distance {d_mm:e} mm)")]
    CoincidentProjection { d_mm: f64 },
    #[error("beacon heights differ by {dz} cm, more than the 0.1 cm tolerance")]
    UnequalBeaconHeights { dz: f64 },
    #[error("beacon geometry is singular (normalized determinant {det:e})")]
    SingularGeometry { det: f64 },
    #[error("detection refers to unknown beacon {0}")]
    UnknownBeacon(BeaconId),
    #[error("beacon {0} appears more than once")]
    DuplicateBeacon(BeaconId),
    #[error("expected {expected} detections, got {got}")]
    WrongDetectionCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("degenerate circle: {0}")]
    DegenerateCircle(String),
    #[error("no rotation track could be fitted")]
    InsufficientTracks,
    #[error("fix {index} carries no height diagnostic")]
    MissingDiagnostics { index: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("corrected principal point ({u}, {v}) falls outside the sensor")]
    PrincipalPointOutOfFrame { u: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(
        "beacon {id} is not above the camera (beacon z {beacon_z} cm, camera z {camera_z} cm)"
    )]
    BeaconBehindCamera {
        id: BeaconId,
        beacon_z: f64,
        camera_z: f64,
    },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {fixes} fixes vs {truths} ground truths")]
    LengthMismatch { fixes: usize, truths: usize },
}

/// Top-level error for file-backed commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Positioning(#[from] PositioningError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
