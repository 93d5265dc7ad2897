use std::collections::HashMap;

use serde::Serialize;
use vitalscan_core::digitizer::Digitizer;
use vitalscan_core::evalkit::{
    confusion, detection_scores, field_accuracy, mask_scores, predictions_from_results, seg_scores,
    truth_from_manifest, ConfusionMatrix, DetectionScores, GtBox, ImageDetections, COCO_THRESHOLDS,
};
use vitalscan_core::{BinaryMask, ExtractionResult};

use super::{digitizer, emit};
use crate::backend::load_ground_truth;
use crate::io::{read_lines, DetectionLine};
use crate::{CliError, EvalArgs, EvalKind};

fn parse_results(args: &EvalArgs) -> Result<Vec<ExtractionResult>, CliError> {
    read_lines(&args.pred)?
        .iter()
        .enumerate()
        .map(|(i, l)| {
            ExtractionResult::from_json(l)
                .map_err(|e| CliError::BadArgs(format!("{}:{}: {e}", args.pred.display(), i + 1)))
        })
        .collect()
}

#[derive(Serialize)]
struct DetectionReport<'a> {
    scores: &'a DetectionScores,
    confusion: &'a ConfusionMatrix,
    confusion_normalized: Vec<Vec<Option<f64>>>,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let gt = load_ground_truth(&args.gt)?;
    let out = args.out.as_deref();
    match args.kind {
        EvalKind::Ocr => {
            let d = Digitizer::from(digitizer(args.gates.as_deref())?);
            let results = parse_results(&args)?;
            let report = field_accuracy(
                &predictions_from_results(&results),
                &truth_from_manifest(&gt),
                &d,
            );
            emit(args.format, &[report.table()], &report, out)
        }
        EvalKind::Seg => {
            let results = parse_results(&args)?;
            let by_id: HashMap<&str, &ExtractionResult> =
                results.iter().map(|r| (r.source_id.as_str(), r)).collect();
            let mut instances = Vec::with_capacity(gt.images.len());
            for img in &gt.images {
                let (w, h) = (img.width, img.height);
                let pred = by_id
                    .get(img.id.as_str())
                    .and_then(|r| r.screen)
                    .map_or_else(|| BinaryMask::new(w, h), |s| s.corners.rasterize(w, h));
                let truth = img
                    .screen
                    .map_or_else(|| BinaryMask::new(w, h), |q| q.rasterize(w, h));
                instances.push(mask_scores(&pred, &truth).expect("masks share the image size"));
            }
            let report = seg_scores(&instances);
            emit(args.format, &[report.table()], &report, out)
        }
        EvalKind::Det => {
            let mut by_id: HashMap<String, DetectionLine> = HashMap::new();
            for (i, l) in read_lines(&args.pred)?.iter().enumerate() {
                let line: DetectionLine = serde_json::from_str(l).map_err(|e| {
                    CliError::BadArgs(format!("{}:{}: {e}", args.pred.display(), i + 1))
                })?;
                by_id.insert(line.source_id.clone(), line);
            }
            let images: Vec<ImageDetections> = gt
                .images
                .iter()
                .map(|img| ImageDetections {
                    preds: by_id
                        .get(&img.id)
                        .map(|l| l.to_detections())
                        .unwrap_or_default(),
                    gts: img
                        .fields
                        .iter()
                        .map(|f| GtBox {
                            label: f.label,
                            bbox: f.bbox,
                        })
                        .collect(),
                })
                .collect();
            let scores = detection_scores(&images, &COCO_THRESHOLDS);
            let matrix = confusion(&images, 0.5);
            let report = DetectionReport {
                scores: &scores,
                confusion: &matrix,
                confusion_normalized: matrix.column_normalized(),
            };
            emit(
                args.format,
                &[scores.table(), matrix.table(), matrix.normalized_table()],
                &report,
                out,
            )
        }
    }
}
