//! Extraction of vital-sign readings from photographs of bedside monitors.
//!
//! Three stages run in sequence: the monitor screen is segmented and warped
//! to a frontal 640x480 view, vital-sign ROIs are detected on that view, and
//! each ROI is read by an OCR backend and checked by the [`digitizer`].
//! Inference backends are pluggable; [`synthscreen`] renders monitors with
//! known contents so the whole chain can be scored without trained weights.

pub mod backends;
pub mod bench;
pub mod digitizer;
pub mod evalkit;
pub mod geometry;
pub mod image;
pub mod label;
pub mod pipeline;
pub mod result;
pub mod synthscreen;

pub use geometry::{CanonicalFrame, Homography, Point2D, ScreenQuad};
pub use image::{BinaryMask, ImageBuffer};
pub use label::{label_parse, ClassLabel, VitalLabel};
pub use result::{
    BoundingBox, Detection, ExtractionResult, ScreenLocation, StageTimings, VitalRecord,
};
