//! Adapters that run exported ONNX graphs: a YOLO-style segmenter and
//! detector, and a CTC text recognizer.
//!
//! The runtime is compiled in with the `onnx` feature. Without it,
//! [`interchange_backend`] fails with [`BackendError::RuntimeUnavailable`]
//! and the mock and template backends remain usable.

pub mod decode;
#[cfg(feature = "onnx")]
mod runtime;

use super::{BackendError, Backends, ModelManifest};

#[cfg(feature = "onnx")]
pub use runtime::{OnnxDetection, OnnxOcr, OnnxSegmentation};

/// Whether this build can execute interchange models.
pub const fn runtime_available() -> bool {
    cfg!(feature = "onnx")
}

fn require<T>(section: Option<T>, name: &str) -> Result<T, BackendError> {
    section.ok_or_else(|| BackendError::ParseError {
        path: "<manifest>".into(),
        message: format!("manifest has no [{name}] section"),
    })
}

/// Loads all three stages described by `manifest`.
#[cfg(feature = "onnx")]
pub fn interchange_backend(manifest: &ModelManifest) -> Result<Backends, BackendError> {
    let seg = OnnxSegmentation::load(&require(manifest.segmentation.clone(), "segmentation")?)?;
    let det = OnnxDetection::load(&require(manifest.detection.clone(), "detection")?)?;
    let ocr = OnnxOcr::load(&require(manifest.ocr.clone(), "ocr")?)?;
    Ok(Backends::new(seg, det, ocr))
}

#[cfg(not(feature = "onnx"))]
pub fn interchange_backend(manifest: &ModelManifest) -> Result<Backends, BackendError> {
    require(manifest.segmentation.as_ref(), "segmentation")?;
    require(manifest.detection.as_ref(), "detection")?;
    require(manifest.ocr.as_ref(), "ocr")?;
    Err(BackendError::RuntimeUnavailable(
        "built without the `onnx` feature; mock and template backends remain available".into(),
    ))
}
