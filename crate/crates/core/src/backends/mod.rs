//! Inference backends for the three model roles: screen segmentation, ROI
//! detection and text recognition.
//!
//! Every backend is wrapped in [`Validating`] before the pipeline sees it, so
//! callers can rely on the interface invariants (confidence >= tau, boxes in
//! bounds, no empty OCR strings) whatever the backend does internally.

mod atlas;
pub mod interchange;
mod manifest;
pub mod mock;
mod template_ocr;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::image::{BinaryMask, ImageBuffer};
use crate::result::Detection;

pub use atlas::{AtlasError, GlyphAtlas, Template};
pub use manifest::{DetectionSection, ModelManifest, OcrSection, SegmentationSection, MODELS_ENV};
pub use mock::{DetectionFrame, MockConfig, MockFixture};
pub use template_ocr::{template_ocr, TemplateOcr, MIN_GLYPH_CORRELATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Segmentation,
    Detection,
    Recognition,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Segmentation => "segmentation",
            Stage::Detection => "detection",
            Stage::Recognition => "recognition",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("no fixture entry for image id {0:?}")]
    UnknownImageId(String),
    #[error("interchange runtime unavailable: {0}")]
    RuntimeUnavailable(String),
    #[error("{stage} inference failed: {message}")]
    InferenceError { stage: Stage, message: String },
    #[error("cannot parse {path}: {message}")]
    ParseError { path: String, message: String },
    #[error("model file {} does not exist", .0.display())]
    MissingModelFile(PathBuf),
    #[error("class list mismatch: {0}")]
    ClassMismatch(String),
    #[error("{stage} backend broke its contract: {message}")]
    Contract { stage: Stage, message: String },
}

impl BackendError {
    pub fn inference(stage: Stage, message: impl fmt::Display) -> Self {
        BackendError::InferenceError {
            stage,
            message: message.to_string(),
        }
    }
}

/// Screen segmentation: one mask for the monitor, or nothing.
pub trait SegmentationBackend {
    /// Called once per image before any inference; `source_id` names the
    /// image. Replay backends use it to select their fixture entry.
    fn begin(&mut self, _source_id: &str) -> Result<(), BackendError> {
        Ok(())
    }

    fn segment(
        &mut self,
        img: &ImageBuffer,
        tau: f64,
    ) -> Result<Option<(BinaryMask, f64)>, BackendError>;
}

/// ROI detection over the (usually rectified) screen image.
pub trait DetectionBackend {
    fn begin(&mut self, _source_id: &str) -> Result<(), BackendError> {
        Ok(())
    }

    fn detect(&mut self, img: &ImageBuffer, tau: f64) -> Result<Vec<Detection>, BackendError>;
}

/// Text recognition of one ROI crop. `None` means no text was found.
pub trait OcrBackend {
    fn begin(&mut self, _source_id: &str) -> Result<(), BackendError> {
        Ok(())
    }

    fn recognize(&mut self, crop: &ImageBuffer) -> Result<Option<(String, f64)>, BackendError>;
}

fn check_confidence(stage: Stage, c: f64) -> Result<(), BackendError> {
    if c.is_finite() && (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(BackendError::Contract {
            stage,
            message: format!("confidence {c} outside [0, 1]"),
        })
    }
}

/// Enforces the interface invariants around any backend: results below tau
/// are dropped, boxes are clipped to the image, masks must match the image
/// size, empty OCR strings become `None`.
pub struct Validating<B>(pub B);

impl<B: SegmentationBackend> SegmentationBackend for Validating<B> {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        self.0.begin(source_id)
    }

    fn segment(
        &mut self,
        img: &ImageBuffer,
        tau: f64,
    ) -> Result<Option<(BinaryMask, f64)>, BackendError> {
        let Some((mask, conf)) = self.0.segment(img, tau)? else {
            return Ok(None);
        };
        check_confidence(Stage::Segmentation, conf)?;
        if !mask.same_dims(img) {
            return Err(BackendError::Contract {
                stage: Stage::Segmentation,
                message: format!(
                    "mask is {}x{}, image is {}x{}",
                    mask.width(),
                    mask.height(),
                    img.width(),
                    img.height()
                ),
            });
        }
        Ok((conf >= tau).then_some((mask, conf)))
    }
}

impl<B: DetectionBackend> DetectionBackend for Validating<B> {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        self.0.begin(source_id)
    }

    fn detect(&mut self, img: &ImageBuffer, tau: f64) -> Result<Vec<Detection>, BackendError> {
        let raw = self.0.detect(img, tau)?;
        let mut out = Vec::with_capacity(raw.len());
        for d in raw {
            check_confidence(Stage::Detection, d.confidence)?;
            if d.confidence < tau {
                continue;
            }
            if let Some(bbox) = d.bbox.clamp_to(img.width(), img.height()) {
                out.push(Detection { bbox, ..d });
            }
        }
        Ok(out)
    }
}

impl<B: OcrBackend> OcrBackend for Validating<B> {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        self.0.begin(source_id)
    }

    fn recognize(&mut self, crop: &ImageBuffer) -> Result<Option<(String, f64)>, BackendError> {
        match self.0.recognize(crop)? {
            Some((text, _)) if text.is_empty() => Ok(None),
            Some((text, score)) => {
                check_confidence(Stage::Recognition, score)?;
                Ok(Some((text, score)))
            }
            None => Ok(None),
        }
    }
}

/// The three backends a pipeline run needs, each behind [`Validating`].
pub struct Backends {
    pub seg: Box<dyn SegmentationBackend + Send>,
    pub det: Box<dyn DetectionBackend + Send>,
    pub ocr: Box<dyn OcrBackend + Send>,
}

impl Backends {
    pub fn new(
        seg: impl SegmentationBackend + Send + 'static,
        det: impl DetectionBackend + Send + 'static,
        ocr: impl OcrBackend + Send + 'static,
    ) -> Self {
        Self {
            seg: Box::new(Validating(seg)),
            det: Box::new(Validating(det)),
            ocr: Box::new(Validating(ocr)),
        }
    }

    /// Replaces the recognizer, keeping segmentation and detection.
    pub fn with_ocr(self, ocr: impl OcrBackend + Send + 'static) -> Self {
        Self {
            ocr: Box::new(Validating(ocr)),
            ..self
        }
    }

    pub fn begin(&mut self, source_id: &str) -> Result<(), (Stage, BackendError)> {
        self.seg
            .begin(source_id)
            .map_err(|e| (Stage::Segmentation, e))?;
        self.det
            .begin(source_id)
            .map_err(|e| (Stage::Detection, e))?;
        self.ocr
            .begin(source_id)
            .map_err(|e| (Stage::Recognition, e))
    }
}
