//! Synthetic LCD-moire benchmark toolkit.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the dataset builder, the
//! evaluator and the CLI use.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod image;
pub mod io;
pub mod iqa;
pub mod mos;
pub mod pipeline;
pub mod samples;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ImageF = image::Image<f64>;
pub type ImageF32 = image::Image<f32>;
pub type HomographyF = geometry::Homography<f64>;
pub type PsdMapF = spectrum::PsdMap<f64>;
pub type MoirePairF = pipeline::MoirePair<f64>;

pub use image::ImageU8;

/// Format tag written into manifests and machine-readable reports.
pub const FORMAT_VERSION: &str = "moirebench/1";
