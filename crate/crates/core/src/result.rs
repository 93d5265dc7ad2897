//! Structured output of one extraction run and its JSON form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ScreenQuad;
use crate::label::VitalLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid bounding box [{x_min}, {y_min}, {x_max}, {y_max}]")]
pub struct InvalidBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

/// Pixel box with exclusive max edges, so `width = x_max - x_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct BoundingBox {
    x_min: u32,
    y_min: u32,
    x_max: u32,
    y_max: u32,
}

impl BoundingBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self, InvalidBox> {
        if x_min < x_max && y_min < y_max {
            Ok(Self {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        } else {
            Err(InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        }
    }

    /// Smallest integer box covering the real-valued rectangle, clipped to
    /// `[0, width) x [0, height)`.
    pub fn covering(x0: f64, y0: f64, x1: f64, y1: f64, width: u32, height: u32) -> Option<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return None;
        }
        let clamp = |v: f64, hi: u32| v.clamp(0.0, hi as f64) as u32;
        Self::new(
            clamp(x0.floor(), width),
            clamp(y0.floor(), height),
            clamp(x1.ceil(), width),
            clamp(y1.ceil(), height),
        )
        .ok()
    }

    pub fn x_min(&self) -> u32 {
        self.x_min
    }
    pub fn y_min(&self) -> u32 {
        self.y_min
    }
    pub fn x_max(&self) -> u32 {
        self.x_max
    }
    pub fn y_max(&self) -> u32 {
        self.y_max
    }
    pub fn width(&self) -> u32 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> u32 {
        self.y_max - self.y_min
    }
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn to_array(&self) -> [u32; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        Self::new(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        )
        .ok()
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other).map_or(0, |b| b.area());
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BoundingBox> {
        Self::new(
            self.x_min.min(width),
            self.y_min.min(height),
            self.x_max.min(width),
            self.y_max.min(height),
        )
        .ok()
    }

    pub fn within(&self, width: u32, height: u32) -> bool {
        self.x_max <= width && self.y_max <= height
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }
}

impl TryFrom<[u32; 4]> for BoundingBox {
    type Error = InvalidBox;

    fn try_from([a, b, c, d]: [u32; 4]) -> Result<Self, Self::Error> {
        Self::new(a, b, c, d)
    }
}

impl From<BoundingBox> for [u32; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

/// One ROI produced by the detection stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub label: VitalLabel,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// A validated reading. `value` is the digitizer's canonical rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalRecord {
    pub label: VitalLabel,
    pub value: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenLocation {
    pub corners: ScreenQuad,
    pub confidence: f64,
}

/// Per-stage wall-clock time in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub det_ms: f64,
    pub ocr_ms: f64,
    pub overhead_ms: f64,
    pub seg_ms: f64,
    pub total_ms: f64,
}

impl StageTimings {
    pub fn from_parts(seg_ms: f64, det_ms: f64, ocr_ms: f64, overhead_ms: f64) -> Self {
        Self {
            seg_ms,
            det_ms,
            ocr_ms,
            overhead_ms,
            total_ms: seg_ms + det_ms + ocr_ms + overhead_ms,
        }
    }

    /// Total equals the component sum within 0.1 ms.
    pub fn is_consistent(&self) -> bool {
        let parts = [self.seg_ms, self.det_ms, self.ocr_ms, self.overhead_ms];
        parts.iter().all(|v| *v >= 0.0 && v.is_finite())
            && (parts.iter().sum::<f64>() - self.total_ms).abs() <= 0.1
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResultError {
    #[error("malformed result JSON: {0}")]
    Json(String),
    #[error("result without a screen must not carry vitals")]
    VitalsWithoutScreen,
    #[error("record under key {key} is labelled {record}")]
    LabelMismatch { key: VitalLabel, record: VitalLabel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub source_id: String,
    pub screen: Option<ScreenLocation>,
    pub vitals: BTreeMap<VitalLabel, Vec<VitalRecord>>,
    pub timings: StageTimings,
}

// Wire structs: fields are declared in sorted key order so serde_json emits
// sorted keys; `BTreeMap<VitalLabel, _>` emits labels in reporting order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireResult {
    screen: Option<WireScreen>,
    source_id: String,
    timings: StageTimings,
    vitals: BTreeMap<VitalLabel, Vec<WireRecord>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireScreen {
    conf: f64,
    corners: ScreenQuad,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    bbox: BoundingBox,
    conf: f64,
    value: String,
}

impl ExtractionResult {
    /// Result for a frame in which no monitor was found.
    pub fn not_found(source_id: impl Into<String>, timings: StageTimings) -> Self {
        Self {
            source_id: source_id.into(),
            screen: None,
            vitals: BTreeMap::new(),
            timings,
        }
    }

    pub fn validate(&self) -> Result<(), ResultError> {
        if self.screen.is_none() && !self.vitals.is_empty() {
            return Err(ResultError::VitalsWithoutScreen);
        }
        for (key, records) in &self.vitals {
            if let Some(r) = records.iter().find(|r| r.label != *key) {
                return Err(ResultError::LabelMismatch {
                    key: *key,
                    record: r.label,
                });
            }
        }
        Ok(())
    }

    /// Highest-confidence record for a label; first one wins ties.
    pub fn best(&self, label: VitalLabel) -> Option<&VitalRecord> {
        self.vitals
            .get(&label)?
            .iter()
            .fold(None, |best: Option<&VitalRecord>, r| match best {
                Some(b) if b.confidence >= r.confidence => Some(b),
                _ => Some(r),
            })
    }

    pub fn record_count(&self) -> usize {
        self.vitals.values().map(Vec::len).sum()
    }

    /// Copy with all timings zeroed, for comparisons that ignore wall-clock.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }

    fn to_wire(&self) -> WireResult {
        WireResult {
            screen: self.screen.map(|s| WireScreen {
                conf: s.confidence,
                corners: s.corners,
            }),
            source_id: self.source_id.clone(),
            timings: self.timings,
            vitals: self
                .vitals
                .iter()
                .map(|(k, v)| {
                    let records = v
                        .iter()
                        .map(|r| WireRecord {
                            bbox: r.bbox,
                            conf: r.confidence,
                            value: r.value.clone(),
                        })
                        .collect();
                    (*k, records)
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("result serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("result serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, ResultError> {
        let wire: WireResult =
            serde_json::from_str(text).map_err(|e| ResultError::Json(e.to_string()))?;
        let result = Self {
            source_id: wire.source_id,
            screen: wire.screen.map(|s| ScreenLocation {
                corners: s.corners,
                confidence: s.conf,
            }),
            vitals: wire
                .vitals
                .into_iter()
                .map(|(label, v)| {
                    let records = v
                        .into_iter()
                        .map(|r| VitalRecord {
                            label,
                            value: r.value,
                            confidence: r.conf,
                            bbox: r.bbox,
                        })
                        .collect();
                    (label, records)
                })
                .collect(),
            timings: wire.timings,
        };
        result.validate()?;
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bbox(a: u32, b: u32, c: u32, d: u32) -> BoundingBox {
        BoundingBox::new(a, b, c, d).unwrap()
    }

    #[test]
    fn empty_result_json() {
        let r = ExtractionResult::not_found("img-1", StageTimings::from_parts(1.5, 0.0, 0.0, 0.25));
        assert_eq!(
            r.to_json(),
            r#"{"screen":null,"source_id":"img-1","timings":{"det_ms":0.0,"ocr_ms":0.0,"overhead_ms":0.25,"seg_ms":1.5,"total_ms":1.75},"vitals":{}}"#
        );
    }

    #[test]
    fn single_record_json() {
        let mut vitals = BTreeMap::new();
        vitals.insert(
            VitalLabel::Hr,
            vec![VitalRecord {
                label: VitalLabel::Hr,
                value: "120".into(),
                confidence: 0.97,
                bbox: bbox(10, 20, 60, 50),
            }],
        );
        let r = ExtractionResult {
            source_id: "x".into(),
            screen: Some(ScreenLocation {
                corners: ScreenQuad::rect(1.0, 2.0, 300.0, 200.0).unwrap(),
                confidence: 0.9,
            }),
            vitals,
            timings: StageTimings::default(),
        };
        let json = r.to_json();
        assert!(
            json.contains(r#""HR":[{"bbox":[10,20,60,50],"conf":0.97,"value":"120"}]"#),
            "{json}"
        );
        assert!(json.contains(
            r#""screen":{"conf":0.9,"corners":[[1.0,2.0],[300.0,2.0],[300.0,200.0],[1.0,200.0]]}"#
        ));
    }

    #[test]
    fn labels_serialize_in_reporting_order() {
        let mut vitals = BTreeMap::new();
        for l in VitalLabel::ALL.iter().rev() {
            vitals.insert(
                *l,
                vec![VitalRecord {
                    label: *l,
                    value: "1".into(),
                    confidence: 1.0,
                    bbox: bbox(0, 0, 1, 1),
                }],
            );
        }
        let r = ExtractionResult {
            source_id: String::new(),
            screen: Some(ScreenLocation {
                corners: ScreenQuad::rect(0.0, 0.0, 5.0, 5.0).unwrap(),
                confidence: 1.0,
            }),
            vitals,
            timings: StageTimings::default(),
        };
        let json = r.to_json();
        let positions: Vec<usize> = VitalLabel::ALL
            .iter()
            .map(|l| json.find(&format!("\"{l}\":")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_vitals_without_screen() {
        let text = r#"{"screen":null,"source_id":"a","timings":{"det_ms":0,"ocr_ms":0,"overhead_ms":0,"seg_ms":0,"total_ms":0},"vitals":{"HR":[{"bbox":[0,0,1,1],"conf":0.5,"value":"70"}]}}"#;
        assert_eq!(
            ExtractionResult::from_json(text),
            Err(ResultError::VitalsWithoutScreen)
        );
    }

    #[test]
    fn box_geometry() {
        let a = bbox(0, 0, 2, 2);
        let b = bbox(1, 0, 3, 2);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert!(BoundingBox::new(3, 0, 3, 1).is_err());
        assert_eq!(
            bbox(5, 5, 20, 20).clamp_to(10, 10),
            Some(bbox(5, 5, 10, 10))
        );
        assert_eq!(bbox(12, 5, 20, 20).clamp_to(10, 10), None);
    }

    #[test]
    fn timings_ledger() {
        let t = StageTimings::from_parts(75.7, 79.1, 222.9, 15.0);
        assert!((t.total_ms - 392.7).abs() < 1e-9);
        assert!(t.is_consistent());
        let mut bad = t;
        bad.total_ms += 0.2;
        assert!(!bad.is_consistent());
    }

    fn arb_record(label: VitalLabel) -> impl Strategy<Value = VitalRecord> {
        (
            0u32..600,
            0u32..400,
            1u32..40,
            1u32..40,
            0.0f64..=1.0,
            0u32..400,
        )
            .prop_map(move |(x, y, w, h, conf, v)| VitalRecord {
                label,
                value: v.to_string(),
                confidence: conf,
                bbox: BoundingBox::new(x, y, x + w, y + h).unwrap(),
            })
    }

    fn arb_result() -> impl Strategy<Value = ExtractionResult> {
        let vitals =
            proptest::collection::btree_map(0usize..8, 0usize..3, 0..8).prop_flat_map(|m| {
                let parts: Vec<_> = m
                    .into_iter()
                    .map(|(i, n)| {
                        let l = VitalLabel::ALL[i];
                        proptest::collection::vec(arb_record(l), n + 1).prop_map(move |v| (l, v))
                    })
                    .collect();
                parts.prop_map(|v| v.into_iter().collect::<BTreeMap<_, _>>())
            });
        (
            "[a-z0-9_./-]{0,12}",
            any::<bool>(),
            vitals,
            (0.0f64..100.0, 0.0f64..100.0, 0.0f64..100.0, 0.0f64..20.0),
            (0.0f64..50.0, 0.0f64..50.0, 0.0f64..=1.0),
        )
            .prop_map(|(id, has_screen, vitals, (s, d, o, h), (x, y, conf))| {
                let screen = has_screen.then(|| ScreenLocation {
                    corners: ScreenQuad::rect(x, y, x + 100.5, y + 80.25).unwrap(),
                    confidence: conf,
                });
                ExtractionResult {
                    source_id: id,
                    vitals: if has_screen { vitals } else { BTreeMap::new() },
                    screen,
                    timings: StageTimings::from_parts(s, d, o, h),
                }
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(r in arb_result()) {
            let text = r.to_json();
            let back = ExtractionResult::from_json(&text).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
