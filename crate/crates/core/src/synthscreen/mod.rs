//! Synthetic bedside-monitor photographs with exact ground truth.
//!
//! A screen is rendered on the canonical 640x480 canvas from one of several
//! layouts, then photographed by a virtual camera into a cluttered scene.
//! The manifest records the true screen outline, the canonical-to-scene
//! homography, and every value with its canonical box.

mod corpus;
mod distort;
mod layout;
mod manifest;
mod render;

use thiserror::Error;

use crate::label::VitalLabel;

pub use corpus::{
    generate_corpus, image_id, synthesize, synthesize_all, CorpusOptions, SyntheticImage,
    SEVERITY_BUCKETS,
};
pub use distort::{
    background, camera_quad, distort, max_offset, max_scale, DistortionSpec, SCENE_HEIGHT,
    SCENE_WIDTH,
};
pub use layout::{Layout, Slot, SlotContent, LAYOUTS};
pub use manifest::{
    DistortionParams, Glare, GroundTruthField, GroundTruthImage, GroundTruthManifest,
};
pub use render::{label_color, render, RenderedField, ScreenSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{label} text {text:?} is {width} px wide, slot holds {capacity} px")]
    LayoutOverflow {
        label: VitalLabel,
        text: String,
        width: u32,
        capacity: u32,
    },
    #[error("cannot render {label} value {value:?}")]
    Unrenderable { label: VitalLabel, value: String },
    #[error("no layout {0}")]
    UnknownLayout(usize),
    #[error("invalid distortion: {0}")]
    Distortion(String),
    #[error("corpus must contain at least one image")]
    EmptyCorpus,
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
