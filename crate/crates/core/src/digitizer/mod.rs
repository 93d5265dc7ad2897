//! Validation of raw OCR text: character-confusion repair, per-label numeric
//! parsing, and physiological range gating.
//!
//! Rejection is a value ([`ValidationOutcome::Rejected`]), not an error; the
//! pipeline simply drops rejected readings.

mod config;

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::label::VitalLabel;
use crate::result::{Detection, VitalRecord};

pub use config::{ConfigError, CorrectionTable, DigitizerConfig, GateBounds, RangeGate, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    NonNumeric,
    OutOfRange,
    LowScore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationOutcome {
    Accepted(String),
    Rejected(Rejection),
}

impl ValidationOutcome {
    pub fn accepted(&self) -> Option<&str> {
        match self {
            ValidationOutcome::Accepted(v) => Some(v),
            ValidationOutcome::Rejected(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{detections} detections but {ocr} OCR results")]
pub struct LengthMismatch {
    pub detections: usize,
    pub ocr: usize,
}

static UNIT_SUFFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(%|°c|℃|°|bpm|mmhg)$").expect("valid unit regex"));

/// Strips whitespace and trailing unit markers, maps confusable characters
/// to digits, and drops every decimal point after the first.
pub fn syntactic_correct(raw: &str, table: &CorrectionTable) -> String {
    let mut s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    // Units go before the mapping ("BPM" must not become "8PM") and again
    // after dot collapsing, which can expose a suffix (".%." -> ".%").
    strip_units(&mut s);
    let mut seen_dot = false;
    let mut s: String = s
        .chars()
        .map(|c| table.get(c).unwrap_or(c))
        .filter(|&c| {
            if c == '.' {
                let keep = !seen_dot;
                seen_dot = true;
                keep
            } else {
                true
            }
        })
        .collect();
    strip_units(&mut s);
    s
}

fn strip_units(s: &mut String) {
    while let Some(m) = UNIT_SUFFIX.find(s) {
        s.truncate(m.start());
    }
}

/// Canonical rendering of `text` for the given value kind, without range
/// checks: integers lose leading zeros, one-decimal values get exactly one
/// fractional digit.
pub fn canonical_number(text: &str, kind: ValueKind) -> Option<(String, f64)> {
    match kind {
        ValueKind::Integer => {
            if text.is_empty() || text.len() > 6 || !text.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let v: u64 = text.parse().ok()?;
            Some((v.to_string(), v as f64))
        }
        ValueKind::OneDecimal => {
            let (int, frac) = match text.split_once('.') {
                Some((i, f)) => (i, f),
                None => (text, ""),
            };
            if int.is_empty()
                || int.len() > 4
                || frac.len() > 1
                || !int.bytes().all(|b| b.is_ascii_digit())
                || !frac.bytes().all(|b| b.is_ascii_digit())
            {
                return None;
            }
            let whole: u64 = int.parse().ok()?;
            let tenth: u64 = if frac.is_empty() {
                0
            } else {
                frac.parse().ok()?
            };
            let tenths = whole * 10 + tenth;
            Some((
                format!("{}.{}", tenths / 10, tenths % 10),
                tenths as f64 / 10.0,
            ))
        }
    }
}

/// The validation stage, bundling correction table, gates and score cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Digitizer {
    pub corrections: CorrectionTable,
    pub gate: RangeGate,
    pub min_score: f64,
}

impl Default for Digitizer {
    fn default() -> Self {
        DigitizerConfig::default().into()
    }
}

impl From<DigitizerConfig> for Digitizer {
    fn from(cfg: DigitizerConfig) -> Self {
        Self {
            corrections: cfg.corrections,
            gate: cfg.gates,
            min_score: cfg.min_score,
        }
    }
}

impl Digitizer {
    pub fn validate(&self, raw: &str, score: f64, label: VitalLabel) -> ValidationOutcome {
        validate(
            raw,
            score,
            label,
            &self.gate,
            &self.corrections,
            self.min_score,
        )
    }

    /// Canonical form of an already-clean value string, used to compare
    /// readings against ground truth.
    pub fn canonicalize(&self, label: VitalLabel, text: &str) -> Option<String> {
        canonical_number(text, self.gate.bounds(label).kind).map(|(s, _)| s)
    }

    pub fn assemble(
        &self,
        detections: &[Detection],
        ocr_results: &[Option<(String, f64)>],
    ) -> Result<BTreeMap<VitalLabel, Vec<VitalRecord>>, LengthMismatch> {
        if detections.len() != ocr_results.len() {
            return Err(LengthMismatch {
                detections: detections.len(),
                ocr: ocr_results.len(),
            });
        }
        let mut out: BTreeMap<VitalLabel, Vec<VitalRecord>> = BTreeMap::new();
        for (det, ocr) in detections.iter().zip(ocr_results) {
            let Some((text, score)) = ocr else { continue };
            if let ValidationOutcome::Accepted(value) = self.validate(text, *score, det.label) {
                out.entry(det.label).or_default().push(VitalRecord {
                    label: det.label,
                    value,
                    confidence: *score,
                    bbox: det.bbox,
                });
            }
        }
        Ok(out)
    }
}

fn gated(text: &str, bounds: &GateBounds) -> Result<String, Rejection> {
    let (canonical, value) = canonical_number(text, bounds.kind).ok_or(Rejection::NonNumeric)?;
    if bounds.admits(value) {
        Ok(canonical)
    } else {
        Err(Rejection::OutOfRange)
    }
}

pub fn validate(
    raw: &str,
    score: f64,
    label: VitalLabel,
    gate: &RangeGate,
    table: &CorrectionTable,
    min_score: f64,
) -> ValidationOutcome {
    if score.is_nan() || score < min_score {
        return ValidationOutcome::Rejected(Rejection::LowScore);
    }
    let clean = syntactic_correct(raw, table);

    // Composite "SYS/DIA" readouts: split only for blood-pressure ROIs, and
    // only when both halves pass their own gates.
    if let Some((sys, dia)) = clean.split_once('/') {
        let side = match label {
            VitalLabel::Sys => 0,
            VitalLabel::Dia => 1,
            _ => return ValidationOutcome::Rejected(Rejection::NonNumeric),
        };
        return match (
            gated(sys, gate.bounds(VitalLabel::Sys)),
            gated(dia, gate.bounds(VitalLabel::Dia)),
        ) {
            (Ok(s), Ok(d)) => ValidationOutcome::Accepted(if side == 0 { s } else { d }),
            _ => ValidationOutcome::Rejected(Rejection::NonNumeric),
        };
    }

    match gated(&clean, gate.bounds(label)) {
        Ok(v) => ValidationOutcome::Accepted(v),
        Err(r) => ValidationOutcome::Rejected(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::result::BoundingBox;
    use proptest::prelude::*;

    fn d() -> Digitizer {
        Digitizer::default()
    }

    #[test]
    fn correction_examples() {
        let t = CorrectionTable::default();
        assert_eq!(syntactic_correct("1OO", &t), "100");
        assert_eq!(syntactic_correct("S8", &t), "58");
        assert_eq!(syntactic_correct("98 %", &t), "98");
        assert_eq!(syntactic_correct(" 37,2 °C", &t), "37.2");
        assert_eq!(syntactic_correct("72bpm", &t), "72");
        assert_eq!(syntactic_correct("120 mmHg", &t), "120");
        assert_eq!(syntactic_correct("3..7.2", &t), "3.72");
        assert_eq!(syntactic_correct("BG|Z", &t), "8612");
        assert_eq!(syntactic_correct("98BPM", &t), "98");
        assert_eq!(syntactic_correct(".%.", &t), ".");
    }

    #[test]
    fn validation_examples() {
        let d = d();
        use Rejection::*;
        use ValidationOutcome::*;
        assert_eq!(
            d.validate("1O1", 0.95, VitalLabel::Spo2),
            Rejected(OutOfRange)
        );
        assert_eq!(
            d.validate("350", 0.95, VitalLabel::Hr),
            Rejected(OutOfRange)
        );
        assert_eq!(d.validate("5", 0.95, VitalLabel::Hr), Rejected(OutOfRange));
        assert_eq!(
            d.validate("37,2", 0.95, VitalLabel::Temp),
            Accepted("37.2".into())
        );
        assert_eq!(d.validate("--", 0.95, VitalLabel::Rr), Rejected(NonNumeric));
        assert_eq!(d.validate("98", 0.2, VitalLabel::Spo2), Rejected(LowScore));
        assert_eq!(
            d.validate("098", 0.9, VitalLabel::Spo2),
            Accepted("98".into())
        );
        assert_eq!(
            d.validate("37", 0.9, VitalLabel::Temp),
            Accepted("37.0".into())
        );
        assert_eq!(
            d.validate("37.25", 0.9, VitalLabel::Temp),
            Rejected(NonNumeric)
        );
        assert_eq!(
            d.validate("72.0", 0.9, VitalLabel::Hr),
            Rejected(NonNumeric)
        );
        assert_eq!(d.validate("", 0.9, VitalLabel::Hr), Rejected(NonNumeric));
    }

    #[test]
    fn hard_bounds_are_inclusive() {
        let d = d();
        assert!(d.validate("10", 1.0, VitalLabel::Hr).accepted().is_some());
        assert!(d.validate("300", 1.0, VitalLabel::Hr).accepted().is_some());
        assert!(d.validate("9", 1.0, VitalLabel::Hr).accepted().is_none());
        assert!(d.validate("301", 1.0, VitalLabel::Hr).accepted().is_none());
        assert!(d
            .validate("100", 1.0, VitalLabel::Spo2)
            .accepted()
            .is_some());
        assert!(d
            .validate("101", 1.0, VitalLabel::Spo2)
            .accepted()
            .is_none());
    }

    #[test]
    fn composite_blood_pressure() {
        let d = d();
        use ValidationOutcome::*;
        assert_eq!(
            d.validate("120/80", 0.9, VitalLabel::Sys),
            Accepted("120".into())
        );
        assert_eq!(
            d.validate("120/80", 0.9, VitalLabel::Dia),
            Accepted("80".into())
        );
        assert_eq!(
            d.validate("12O/8O mmHg", 0.9, VitalLabel::Dia),
            Accepted("80".into())
        );
        assert_eq!(
            d.validate("120/80", 0.9, VitalLabel::Map),
            Rejected(Rejection::NonNumeric)
        );
        assert_eq!(
            d.validate("120/500", 0.9, VitalLabel::Sys),
            Rejected(Rejection::NonNumeric)
        );
        assert_eq!(
            d.validate("120/", 0.9, VitalLabel::Sys),
            Rejected(Rejection::NonNumeric)
        );
    }

    #[test]
    fn assemble_paths() {
        let d = d();
        let det = |l| Detection {
            label: l,
            bbox: BoundingBox::new(0, 0, 10, 10).unwrap(),
            confidence: 0.9,
        };
        let dets = [det(VitalLabel::Hr), det(VitalLabel::Spo2)];
        assert!(d.assemble(&dets, &[None, None]).unwrap().is_empty());

        let out = d
            .assemble(
                &dets,
                &[Some(("72".into(), 0.93)), Some(("1O1".into(), 0.99))],
            )
            .unwrap();
        assert_eq!(out.len(), 1);
        let hr = &out[&VitalLabel::Hr];
        assert_eq!((hr[0].value.as_str(), hr[0].confidence), ("72", 0.93));

        assert_eq!(
            d.assemble(&dets, &[None]),
            Err(LengthMismatch {
                detections: 2,
                ocr: 1
            })
        );
    }

    #[test]
    fn assemble_keeps_detection_order() {
        let d = d();
        let det = |x| Detection {
            label: VitalLabel::Hr,
            bbox: BoundingBox::new(x, 0, x + 10, 10).unwrap(),
            confidence: 0.9,
        };
        let out = d
            .assemble(
                &[det(0), det(20)],
                &[Some(("80".into(), 0.7)), Some(("81".into(), 0.9))],
            )
            .unwrap();
        let values: Vec<_> = out[&VitalLabel::Hr]
            .iter()
            .map(|r| r.value.as_str())
            .collect();
        assert_eq!(values, ["80", "81"]);
    }

    fn arb_text() -> impl Strategy<Value = String> {
        let alphabet: Vec<char> = "0123456789.,/ %°CbpmHgOoQIl|ZSsBGx-".chars().collect();
        proptest::collection::vec(proptest::sample::select(alphabet), 0..9)
            .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn correction_is_idempotent(s in arb_text()) {
            let t = CorrectionTable::default();
            let once = syntactic_correct(&s, &t);
            prop_assert_eq!(syntactic_correct(&once, &t), once);
        }

        #[test]
        fn accepted_values_are_inside_gate(s in arb_text(), idx in 0usize..8) {
            let d = d();
            let label = VitalLabel::ALL[idx];
            if let ValidationOutcome::Accepted(v) = d.validate(&s, 1.0, label) {
                let bounds = d.gate.bounds(label);
                let (canon, value) = canonical_number(&v, bounds.kind).unwrap();
                prop_assert_eq!(canon, v);
                prop_assert!(bounds.admits(value));
            }
        }
    }
}
