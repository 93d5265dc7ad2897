//! Evaluation metrics for each stage and for end-to-end latency.
//!
//! Every report serializes to JSON and renders as an aligned text table or
//! CSV.

mod detection;
mod fields;
mod latency;
mod seg;
mod table;

pub use detection::{
    average_precision, confusion, detection_scores, ClassDetectionRow, ConfusionMatrix,
    DetectionScores, GtBox, ImageDetections, COCO_THRESHOLDS,
};
pub use fields::{
    field_accuracy, predictions_from_results, truth_from_manifest, FieldAccuracyReport, FieldKey,
    FieldRow,
};
pub use latency::{latency_aggregate, EmptySample, LatencyReport, LatencyRow, LatencySample};
pub use seg::{mask_scores, seg_scores, DimensionMismatch, MaskScores, MeanStd, SegScores};
pub use table::Table;
