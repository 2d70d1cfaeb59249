//! Visible light positioning with an image sensor.
//!
//! A camera looking up at ceiling LEDs with known positions recovers its own
//! position from where the LEDs land on the sensor, using either two LEDs
//! (with yaw correction) or three (trilateration). Accuracy hinges on knowing
//! the principal point; [`calibration`] recovers it with a rotation sweep or
//! from the bias of repeated fixes at a known point.
//!
//! [`simulator`] is the forward model used as ground truth throughout, and
//! [`experiment`] runs the full measurement campaign with [`analysis`]
//! producing the error statistics.

pub mod analysis;
pub mod calibration;
pub mod camera;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod par;
pub mod positioning;
pub mod simulator;

pub use camera::{CameraIntrinsics, ImagePoint, PixelPoint};
pub use error::{Error, Result};
pub use par::Execution;
pub use positioning::{BeaconId, BeaconSet, Detection, LedBeacon, Method, PositionFix, WorldPoint};
