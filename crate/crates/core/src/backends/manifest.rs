use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::BackendError;
use crate::label::{label_parse, ClassLabel, VitalLabel};

/// Environment variable naming the directory searched for `manifest.toml`
/// when no manifest path is given.
pub const MODELS_ENV: &str = "VITALSCAN_MODELS";

/// Description of exported models, read from TOML:
///
/// ```toml
/// kind = "onnx"
/// default_tau = 0.8
///
/// [segmentation]
/// model = "screen-seg.onnx"
/// input_size = 640
/// classes = ["SCREEN"]
///
/// [detection]
/// model = "roi-det.onnx"
/// input_size = 640
/// classes = ["HR", "PR", "SPO2", "SYS", "DIA", "MAP", "RR", "TEMP"]
///
/// [ocr]
/// model = "rec.onnx"
/// input_height = 48
/// input_width = 320
/// dictionary = "dict.txt"
/// ```
///
/// Relative paths are resolved against the manifest's directory. Each stage
/// section is optional so single-stage exports load on their own.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifest {
    pub kind: String,
    pub default_tau: f64,
    pub segmentation: Option<SegmentationSection>,
    pub detection: Option<DetectionSection>,
    pub ocr: Option<OcrSection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationSection {
    pub model: PathBuf,
    pub input_size: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSection {
    pub model: PathBuf,
    pub input_size: u32,
    /// Model output class index -> label.
    pub classes: Vec<VitalLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcrSection {
    pub model: PathBuf,
    pub input_height: u32,
    /// Crops are resized to `input_height` and right-padded to this width.
    pub input_width: u32,
    pub dictionary: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    kind: String,
    #[serde(default = "default_tau")]
    default_tau: f64,
    segmentation: Option<RawStage>,
    detection: Option<RawStage>,
    ocr: Option<RawOcr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    model: PathBuf,
    #[serde(default = "default_input")]
    input_size: u32,
    classes: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOcr {
    model: PathBuf,
    #[serde(default = "default_ocr_height")]
    input_height: u32,
    #[serde(default = "default_ocr_width")]
    input_width: u32,
    dictionary: PathBuf,
}

fn default_tau() -> f64 {
    0.8
}

fn default_input() -> u32 {
    640
}

fn default_ocr_height() -> u32 {
    48
}

fn default_ocr_width() -> u32 {
    320
}

impl ModelManifest {
    /// `$VITALSCAN_MODELS/manifest.toml`, if the variable is set.
    pub fn default_path() -> Option<PathBuf> {
        std::env::var_os(MODELS_ENV).map(|d| PathBuf::from(d).join("manifest.toml"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::ParseError {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            BackendError::ParseError { message, .. } => BackendError::ParseError {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Parses manifest text, resolving relative model paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, BackendError> {
        let parse_err = |message: String| BackendError::ParseError {
            path: "<manifest>".into(),
            message,
        };
        let raw: RawManifest = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if raw.kind != "onnx" {
            return Err(parse_err(format!(
                "unsupported kind {:?} (expected \"onnx\")",
                raw.kind
            )));
        }
        if !(raw.default_tau > 0.0 && raw.default_tau <= 1.0) {
            return Err(parse_err(format!(
                "default_tau {} outside (0, 1]",
                raw.default_tau
            )));
        }
        if raw.segmentation.is_none() && raw.detection.is_none() && raw.ocr.is_none() {
            return Err(parse_err("manifest describes no stage".into()));
        }
        let existing = |p: &Path| -> Result<PathBuf, BackendError> {
            let full = base.join(p);
            if full.is_file() {
                Ok(full)
            } else {
                Err(BackendError::MissingModelFile(full))
            }
        };

        let segmentation = match raw.segmentation {
            None => None,
            Some(s) => {
                let ok = s.classes.len() == 1
                    && matches!(label_parse(&s.classes[0]), Ok(ClassLabel::Screen));
                if !ok {
                    return Err(BackendError::ClassMismatch(format!(
                        "segmentation classes must be [\"SCREEN\"], got {:?}",
                        s.classes
                    )));
                }
                Some(SegmentationSection {
                    model: existing(&s.model)?,
                    input_size: s.input_size,
                })
            }
        };

        let detection = match raw.detection {
            None => None,
            Some(d) => {
                let mut classes = Vec::with_capacity(d.classes.len());
                for name in &d.classes {
                    match label_parse(name) {
                        Ok(ClassLabel::Vital(l)) => classes.push(l),
                        _ => {
                            return Err(BackendError::ClassMismatch(format!(
                                "{name:?} is not a vital-sign label"
                            )))
                        }
                    }
                }
                let distinct: BTreeSet<VitalLabel> = classes.iter().copied().collect();
                if classes.len() != VitalLabel::ALL.len() || distinct.len() != classes.len() {
                    return Err(BackendError::ClassMismatch(format!(
                        "detection classes must name each of the {} vital labels once, got {:?}",
                        VitalLabel::ALL.len(),
                        d.classes
                    )));
                }
                Some(DetectionSection {
                    model: existing(&d.model)?,
                    input_size: d.input_size,
                    classes,
                })
            }
        };

        let ocr = match raw.ocr {
            None => None,
            Some(o) => Some(OcrSection {
                model: existing(&o.model)?,
                input_height: o.input_height,
                input_width: o.input_width,
                dictionary: existing(&o.dictionary)?,
            }),
        };

        for (name, size) in [
            ("segmentation", segmentation.as_ref().map(|s| s.input_size)),
            ("detection", detection.as_ref().map(|s| s.input_size)),
            (
                "ocr",
                ocr.as_ref().map(|s| s.input_height.min(s.input_width)),
            ),
        ] {
            if size == Some(0) {
                return Err(parse_err(format!("{name} input size must be positive")));
            }
        }

        Ok(Self {
            kind: raw.kind,
            default_tau: raw.default_tau,
            segmentation,
            detection,
            ocr,
        })
    }
}
