//! The three-stage extraction run: localize and rectify the screen, detect
//! ROIs on the rectified view, then read and validate each ROI.

use std::time::Instant;

use thiserror::Error;

use crate::backends::{BackendError, Backends, Stage};
use crate::digitizer::Digitizer;
use crate::geometry::{extract_corners, rectify, CanonicalFrame, GeometryError};
use crate::image::ImageBuffer;
use crate::result::{BoundingBox, Detection, ExtractionResult, ScreenLocation, StageTimings};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Confidence threshold for segmentation and detection.
    pub tau: f64,
    pub frame: CanonicalFrame,
    pub digitizer: Digitizer,
    /// Margin added around each ROI before recognition, px.
    pub crop_pad: u32,
    /// When false, detection runs on the photograph itself.
    pub rectify: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 0.8,
            frame: CanonicalFrame::STANDARD,
            digitizer: Digitizer::default(),
            crop_pad: 2,
            rectify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("tau {0} outside (0, 1]")]
    Tau(f64),
    #[error("canonical frame {0}x{1} is degenerate")]
    Frame(u32, u32),
}

impl PipelineConfig {
    pub fn with_tau(tau: f64) -> Result<Self, ConfigError> {
        let cfg = Self {
            tau,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(ConfigError::Tau(self.tau));
        }
        if self.frame.width < 2 || self.frame.height < 2 {
            return Err(ConfigError::Frame(self.frame.width, self.frame.height));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageCause {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage failed: {cause}")]
pub struct StageError {
    pub stage: Stage,
    pub cause: StageCause,
}

impl StageError {
    fn new(stage: Stage, cause: impl Into<StageCause>) -> Self {
        Self {
            stage,
            cause: cause.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("box {bbox:?} does not intersect a {width}x{height} image")]
pub struct EmptyIntersection {
    pub bbox: BoundingBox,
    pub width: u32,
    pub height: u32,
}

/// Sub-image under `bbox` grown by `pad` on every side, clamped to the image.
pub fn crop(
    img: &ImageBuffer,
    bbox: &BoundingBox,
    pad: u32,
) -> Result<ImageBuffer, EmptyIntersection> {
    let (w, h) = (img.width(), img.height());
    if bbox.x_min() >= w || bbox.y_min() >= h {
        return Err(EmptyIntersection {
            bbox: *bbox,
            width: w,
            height: h,
        });
    }
    let x0 = bbox.x_min().saturating_sub(pad);
    let y0 = bbox.y_min().saturating_sub(pad);
    let x1 = bbox.x_max().saturating_add(pad).min(w);
    let y1 = bbox.y_max().saturating_add(pad).min(h);
    let cw = (x1 - x0) as usize;
    let mut data = Vec::with_capacity(cw * (y1 - y0) as usize * 3);
    let src = img.data();
    for y in y0..y1 {
        let start = (y as usize * w as usize + x0 as usize) * 3;
        data.extend_from_slice(&src[start..start + cw * 3]);
    }
    Ok(ImageBuffer::new(x1 - x0, y1 - y0, data).expect("crop dimensions match buffer"))
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Runs the full extraction on one image.
///
/// A frame in which segmentation finds nothing ends after stage one with
/// `screen = None`. Every other backend or geometry failure is reported as
/// a [`StageError`] tagged with the stage that raised it.
pub fn run(
    img: &ImageBuffer,
    source_id: &str,
    cfg: &PipelineConfig,
    backends: &mut Backends,
) -> Result<ExtractionResult, StageError> {
    run_traced(img, source_id, cfg, backends).map(|(r, _)| r)
}

/// [`run`], also returning the detections made on the (rectified) view.
pub fn run_traced(
    img: &ImageBuffer,
    source_id: &str,
    cfg: &PipelineConfig,
    backends: &mut Backends,
) -> Result<(ExtractionResult, Vec<Detection>), StageError> {
    cfg.validate()
        .map_err(|e| StageError::new(Stage::Segmentation, e))?;
    let start = Instant::now();
    backends
        .begin(source_id)
        .map_err(|(stage, e)| StageError::new(stage, e))?;

    let t = Instant::now();
    let segmented = backends
        .seg
        .segment(img, cfg.tau)
        .map_err(|e| StageError::new(Stage::Segmentation, e))?;
    let seg_ms = ms(t);

    let Some((mask, seg_conf)) = segmented else {
        let overhead = (ms(start) - seg_ms).max(0.0);
        let timings = StageTimings::from_parts(seg_ms, 0.0, 0.0, overhead);
        return Ok((ExtractionResult::not_found(source_id, timings), Vec::new()));
    };

    let geometry = |e: GeometryError| StageError::new(Stage::Segmentation, e);
    let corners = extract_corners(&mask).map_err(geometry)?;
    let rectified;
    let view = if cfg.rectify {
        rectified = rectify(img, &corners, cfg.frame).map_err(geometry)?.0;
        &rectified
    } else {
        img
    };

    let t = Instant::now();
    let detections: Vec<Detection> = backends
        .det
        .detect(view, cfg.tau)
        .map_err(|e| StageError::new(Stage::Detection, e))?;
    let det_ms = ms(t);

    let mut ocr_ms = 0.0;
    let mut readings = Vec::with_capacity(detections.len());
    for det in &detections {
        // Validated detections lie inside the view, so the crop is non-empty.
        let roi = crop(view, &det.bbox, cfg.crop_pad).map_err(|e| {
            StageError::new(
                Stage::Detection,
                BackendError::inference(Stage::Detection, e),
            )
        })?;
        let t = Instant::now();
        let read = backends
            .ocr
            .recognize(&roi)
            .map_err(|e| StageError::new(Stage::Recognition, e))?;
        ocr_ms += ms(t);
        readings.push(read);
    }
    let vitals = cfg
        .digitizer
        .assemble(&detections, &readings)
        .expect("one reading per detection");

    let overhead = (ms(start) - seg_ms - det_ms - ocr_ms).max(0.0);
    let result = ExtractionResult {
        source_id: source_id.to_string(),
        screen: Some(ScreenLocation {
            corners,
            confidence: seg_conf,
        }),
        vitals,
        timings: StageTimings::from_parts(seg_ms, det_ms, ocr_ms, overhead),
    };
    Ok((result, detections))
}
