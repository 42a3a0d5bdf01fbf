//! License plate recognition engine.
//!
//! The stages run in this order:
//!
//! 1. [`imaging`]: grayscale conversion, skew correction, vertical Sobel edges.
//! 2. [`localization`]: candidate plate rectangles from edge-density bands.
//! 3. [`segmentation`]: Otsu binarization, slant correction, dilation and
//!    connected components filtered down to characters in reading order.
//! 4. [`recognition`]: 32x32 glyphs matched against reference templates by
//!    correlation.
//!
//! [`pipeline::recognize`] runs all of them. [`synth`] renders labelled
//! plate scenes and [`eval`] scores recognition runs against them.

mod error;
mod geometry;

pub mod eval;
pub mod imaging;
pub mod localization;
pub mod pipeline;
pub mod recognition;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::Rect;
pub use pipeline::{recognize, FailureReason, PipelineConfig, RecognitionResult};
pub use recognition::TemplateSet;
