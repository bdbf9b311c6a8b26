//! Density and multi-pass accuracy metrics for aerial LiDAR point clouds.
//!
//! The crate samples square patches on planar surfaces (ground, walls),
//! measures point density and splits local error into cross-pass and
//! within-pass components. A flight-parameter model predicts densities,
//! including density as a function of height on a wall, and a synthetic
//! nadir scanner produces clouds with known geometry to check both.
//!
//! ```
//! use lidarqc::predictor::density_ratios;
//!
//! let (h, v) = density_ratios(45.0).unwrap();
//! assert!((h - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
//! ```

pub mod accuracy;
pub mod density;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod predictor;
pub mod sampling;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    FlightLine, OrientationClass, Patch, PlanarSurface, Point, PointCloud, ScannerSpec, Vec2, Vec3,
    WallTarget,
};
