//! Polygonal mesh refinement guided by a convolutional shape classifier.
//!
//! The crate rasterizes polygonal elements, classifies their shape with a
//! small CNN and refines them with the mid-point (MP), CNN-enhanced
//! mid-point (CNN-MP) or CNN-enhanced reference-polygon (CNN-RP) strategy.
//! Refined meshes can be scored with element quality metrics and used to
//! solve a Poisson problem with the lowest-order virtual element method.

pub mod cli;
pub mod cnn;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod metrics;
pub mod plot;
pub mod raster;
pub mod refine;
pub mod vem;

pub use error::{Error, Result};
pub use geometry::{Point2, Polygon};
