//! Synthesis of densely packed, occluded particle scenes with exact
//! instance ground truth, and a mask-matching evaluator for segmentation
//! output on those scenes.
//!
//! The pipeline: refine and size-classify particle cutouts into an
//! [`AssetCatalog`](library::AssetCatalog), compose [`Scene`](compose::Scene)s
//! under per-stage overlap rules, then render each scene to an RGB image, a
//! 16-bit instance graymap and a JSON metadata record.

pub mod augment;
pub mod compose;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod library;
pub mod metadata;
pub mod pgm;
pub mod psd;
pub mod render;
pub mod rle;
pub mod seed;
pub mod sieve;
pub mod synthetic;

pub use error::{Error, Result};
