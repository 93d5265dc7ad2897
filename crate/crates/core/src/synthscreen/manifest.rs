use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::{Homography, ScreenQuad};
use crate::label::VitalLabel;
use crate::result::BoundingBox;

/// Glare ellipse added on top of the scene, in scene pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Glare {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    /// Peak brightness added at the center, in 8-bit levels.
    pub intensity: f64,
}

/// Everything needed to reproduce the camera and photometric effects of one
/// scene. Angles are in degrees, noise in 8-bit levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    pub obliqueness_deg: f64,
    pub azimuth_deg: f64,
    pub roll_deg: f64,
    pub scale: f64,
    pub offset: [f64; 2],
    pub noise_sigma: f64,
    pub glare: Option<Glare>,
    pub blur_radius: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthField {
    pub label: VitalLabel,
    /// Canonical value, as the digitizer would render it.
    pub value: String,
    /// Exact string drawn in the box; differs from `value` for the
    /// composite blood-pressure readout ("120/80").
    pub text: String,
    /// Box in canonical 640x480 coordinates.
    pub bbox: BoundingBox,
    /// Whether `value` lies inside the default plausibility gate.
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthImage {
    pub id: String,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub layout: Option<usize>,
    /// True screen corners in the image, `null` when no monitor is present.
    pub screen: Option<ScreenQuad>,
    /// Canonical frame -> image map used to place the screen.
    pub homography: Option<Homography>,
    pub distortion: Option<DistortionParams>,
    pub fields: Vec<GroundTruthField>,
}

impl GroundTruthImage {
    pub fn field(&self, label: VitalLabel) -> Option<&GroundTruthField> {
        self.fields.iter().find(|f| f.label == label)
    }

    /// Whether a correct extractor should report this field. Out-of-range
    /// values must be rejected, and a composite readout is only readable
    /// when both halves are in range.
    pub fn is_reportable(&self, field: &GroundTruthField) -> bool {
        if !field.in_range {
            return false;
        }
        if field.text.contains('/') {
            return self
                .fields
                .iter()
                .filter(|f| f.text == field.text && f.bbox == field.bbox)
                .all(|f| f.in_range);
        }
        true
    }

    /// Fields a perfect extractor returns, in label order.
    pub fn reportable(&self) -> impl Iterator<Item = &GroundTruthField> {
        self.fields.iter().filter(|f| self.is_reportable(f))
    }
}

/// Ground truth for a generated corpus, stored as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthManifest {
    pub seed: u64,
    pub images: Vec<GroundTruthImage>,
}

impl GroundTruthManifest {
    pub fn get(&self, id: &str) -> Option<&GroundTruthImage> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("manifest serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        serde_json::from_str(text).map_err(|e| SynthError::Manifest(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| SynthError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
