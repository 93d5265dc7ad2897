use std::collections::BTreeMap;

use serde::Serialize;

use super::table::{fixed, Table};
use crate::digitizer::Digitizer;
use crate::label::VitalLabel;
use crate::result::ExtractionResult;
use crate::synthscreen::GroundTruthManifest;

/// `(image id, label)`.
pub type FieldKey = (String, VitalLabel);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    /// `None` for the overall row.
    pub label: Option<VitalLabel>,
    pub correct: usize,
    pub total: usize,
    /// `correct / total`; `None` when `total` is zero.
    pub accuracy: Option<f64>,
}

impl FieldRow {
    fn new(label: Option<VitalLabel>, correct: usize, total: usize) -> Self {
        Self {
            label,
            correct,
            total,
            accuracy: (total > 0).then(|| correct as f64 / total as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldAccuracyReport {
    pub labels: Vec<FieldRow>,
    pub overall: FieldRow,
    /// Predicted fields with no ground-truth counterpart.
    pub unexpected: usize,
}

fn canonical(d: &Digitizer, label: VitalLabel, text: &str) -> String {
    d.canonicalize(label, text)
        .unwrap_or_else(|| text.to_string())
}

/// Scores predicted values against ground truth, one instance per truth
/// entry. Both sides are compared in the digitizer's canonical rendering,
/// so `"098"` matches `"98"`.
pub fn field_accuracy(
    predictions: &BTreeMap<FieldKey, String>,
    truth: &BTreeMap<FieldKey, String>,
    digitizer: &Digitizer,
) -> FieldAccuracyReport {
    let mut counts = [(0usize, 0usize); 8];
    for ((id, label), want) in truth {
        let slot = &mut counts[label.index()];
        slot.1 += 1;
        if let Some(got) = predictions.get(&(id.clone(), *label)) {
            if canonical(digitizer, *label, got) == canonical(digitizer, *label, want) {
                slot.0 += 1;
            }
        }
    }
    let labels: Vec<FieldRow> = VitalLabel::ALL
        .iter()
        .map(|&l| FieldRow::new(Some(l), counts[l.index()].0, counts[l.index()].1))
        .collect();
    let overall = FieldRow::new(
        None,
        labels.iter().map(|r| r.correct).sum(),
        labels.iter().map(|r| r.total).sum(),
    );
    FieldAccuracyReport {
        labels,
        overall,
        unexpected: predictions
            .keys()
            .filter(|k| !truth.contains_key(*k))
            .count(),
    }
}

/// The highest-confidence record per label of each result.
pub fn predictions_from_results<'a>(
    results: impl IntoIterator<Item = &'a ExtractionResult>,
) -> BTreeMap<FieldKey, String> {
    let mut out = BTreeMap::new();
    for r in results {
        for &label in r.vitals.keys() {
            if let Some(best) = r.best(label) {
                out.insert((r.source_id.clone(), label), best.value.clone());
            }
        }
    }
    out
}

/// Fields a correct extractor reports: in-range values whose readout is
/// readable as a whole.
pub fn truth_from_manifest(manifest: &GroundTruthManifest) -> BTreeMap<FieldKey, String> {
    manifest
        .images
        .iter()
        .flat_map(|img| {
            img.reportable()
                .map(|f| ((img.id.clone(), f.label), f.value.clone()))
        })
        .collect()
}

impl FieldAccuracyReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Field", "Correct", "Total", "Accuracy (%)"]);
        for row in self.labels.iter().chain(std::iter::once(&self.overall)) {
            t.push([
                row.label.map_or("Overall".to_string(), |l| l.to_string()),
                row.correct.to_string(),
                row.total.to_string(),
                fixed(row.accuracy.map(|a| a * 100.0), 2),
            ]);
        }
        t
    }
}
