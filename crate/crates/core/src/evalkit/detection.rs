use serde::Serialize;

use super::table::{fixed, Table};
use crate::label::VitalLabel;
use crate::result::{BoundingBox, Detection};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub const COCO_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

const K: usize = VitalLabel::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GtBox {
    pub label: VitalLabel,
    pub bbox: BoundingBox,
}

/// Predictions and ground truth for one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageDetections {
    pub preds: Vec<Detection>,
    pub gts: Vec<GtBox>,
}

/// Predictions of one class across all images, highest confidence first.
/// Ties keep image order, then prediction order.
fn ranked(images: &[ImageDetections], label: VitalLabel) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, img)| {
            img.preds
                .iter()
                .enumerate()
                .filter(move |(_, d)| d.label == label)
                .map(move |(j, _)| (i, j))
        })
        .collect();
    order.sort_by(|a, b| {
        let (ca, cb) = (
            images[a.0].preds[a.1].confidence,
            images[b.0].preds[b.1].confidence,
        );
        cb.total_cmp(&ca)
    });
    order
}

/// True/false-positive flags in rank order for one class at IoU `t`. Each
/// prediction takes the best-overlapping unmatched ground truth of its class.
fn match_class(images: &[ImageDetections], label: VitalLabel, t: f64) -> Vec<bool> {
    let mut taken: Vec<Vec<bool>> = images
        .iter()
        .map(|img| vec![false; img.gts.len()])
        .collect();
    ranked(images, label)
        .into_iter()
        .map(|(i, j)| {
            let pred = &images[i].preds[j];
            let best = images[i]
                .gts
                .iter()
                .enumerate()
                .filter(|(g, gt)| gt.label == label && !taken[i][*g])
                .map(|(g, gt)| (g, pred.bbox.iou(&gt.bbox)))
                .fold(None, |acc: Option<(usize, f64)>, (g, iou)| match acc {
                    Some((_, b)) if b >= iou => acc,
                    _ => Some((g, iou)),
                });
            match best {
                Some((g, iou)) if iou >= t => {
                    taken[i][g] = true;
                    true
                }
                _ => false,
            }
        })
        .collect()
}

/// 101-point interpolated average precision of a ranked TP/FP list against
/// `n_gt` ground-truth instances. `None` when there is nothing to find.
pub fn average_precision(tp: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut hits = Vec::with_capacity(tp.len());
    let mut precision = Vec::with_capacity(tp.len());
    let mut count = 0usize;
    for (k, &is_tp) in tp.iter().enumerate() {
        count += is_tp as usize;
        hits.push(count);
        precision.push(count as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut sum = 0.0;
    let mut at = 0;
    for r in 0..=100usize {
        // First rank whose recall hits/n_gt reaches r/100, compared exactly.
        while at < hits.len() && hits[at] * 100 < r * n_gt {
            at += 1;
        }
        if at < hits.len() {
            sum += precision[at];
        }
    }
    Some(sum / 101.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDetectionRow {
    /// `None` for the mean row.
    pub label: Option<VitalLabel>,
    pub gt_count: usize,
    pub pred_count: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub ap50: Option<f64>,
    /// AP averaged over the requested thresholds.
    pub ap50_95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionScores {
    pub thresholds: Vec<f64>,
    pub classes: Vec<ClassDetectionRow>,
    /// Arithmetic mean of the defined class values.
    pub mean: ClassDetectionRow,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-class precision and recall at IoU 0.5 over all given predictions,
/// AP@50, and AP averaged over `thresholds`.
pub fn detection_scores(images: &[ImageDetections], thresholds: &[f64]) -> DetectionScores {
    let classes: Vec<ClassDetectionRow> = VitalLabel::ALL
        .iter()
        .map(|&label| {
            let gt_count = images
                .iter()
                .flat_map(|i| &i.gts)
                .filter(|g| g.label == label)
                .count();
            let at50 = match_class(images, label, 0.5);
            let tp = at50.iter().filter(|&&t| t).count();
            let ap_range = mean_of(
                thresholds
                    .iter()
                    .map(|&t| average_precision(&match_class(images, label, t), gt_count)),
            );
            ClassDetectionRow {
                label: Some(label),
                gt_count,
                pred_count: at50.len(),
                precision: (!at50.is_empty()).then(|| tp as f64 / at50.len() as f64),
                recall: (gt_count > 0).then(|| tp as f64 / gt_count as f64),
                ap50: average_precision(&at50, gt_count),
                ap50_95: if gt_count > 0 { ap_range } else { None },
            }
        })
        .collect();
    let mean = ClassDetectionRow {
        label: None,
        gt_count: classes.iter().map(|c| c.gt_count).sum(),
        pred_count: classes.iter().map(|c| c.pred_count).sum(),
        precision: mean_of(classes.iter().map(|c| c.precision)),
        recall: mean_of(classes.iter().map(|c| c.recall)),
        ap50: mean_of(classes.iter().map(|c| c.ap50)),
        ap50_95: mean_of(classes.iter().map(|c| c.ap50_95)),
    };
    DetectionScores {
        thresholds: thresholds.to_vec(),
        classes,
        mean,
    }
}

impl DetectionScores {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "Class",
            "GT",
            "Pred",
            "Precision",
            "Recall",
            "mAP@50",
            "mAP@50-95",
        ]);
        for row in self.classes.iter().chain(std::iter::once(&self.mean)) {
            t.push([
                row.label.map_or("all".to_string(), |l| l.to_string()),
                row.gt_count.to_string(),
                row.pred_count.to_string(),
                fixed(row.precision, 4),
                fixed(row.recall, 4),
                fixed(row.ap50, 4),
                fixed(row.ap50_95, 4),
            ]);
        }
        t
    }
}

/// `(K+1) x (K+1)` counts. Rows are predicted classes and columns are
/// ground-truth classes; index `K` is background, so row `K` holds missed
/// ground truth and column `K` holds predictions that matched nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self {
            labels: VitalLabel::ALL
                .iter()
                .map(|l| l.to_string())
                .chain(std::iter::once("background".to_string()))
                .collect(),
            counts: vec![vec![0; K + 1]; K + 1],
        }
    }
}

impl ConfusionMatrix {
    pub const BACKGROUND: usize = K;

    pub fn get(&self, predicted: usize, truth: usize) -> u64 {
        self.counts[predicted][truth]
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..=K)
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    /// Each column divided by its sum; empty columns stay `None`.
    pub fn column_normalized(&self) -> Vec<Vec<Option<f64>>> {
        let sums = self.column_sums();
        self.counts
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&sums)
                    .map(|(&c, &s)| (s > 0).then(|| c as f64 / s as f64))
                    .collect()
            })
            .collect()
    }

    fn grid(&self, cell: impl Fn(usize, usize) -> String) -> Table {
        let mut t = Table::new(
            std::iter::once("pred \\ true".to_string()).chain(self.labels.iter().cloned()),
        );
        for r in 0..=K {
            t.push(std::iter::once(self.labels[r].clone()).chain((0..=K).map(|c| cell(r, c))));
        }
        t
    }

    pub fn table(&self) -> Table {
        self.grid(|r, c| self.counts[r][c].to_string())
    }

    pub fn normalized_table(&self) -> Table {
        let n = self.column_normalized();
        self.grid(|r, c| fixed(n[r][c], 4))
    }
}

/// Confusion counts at IoU `iou_match`. Within each image, predictions in
/// descending confidence take the best-overlapping unmatched ground truth of
/// any class.
pub fn confusion(images: &[ImageDetections], iou_match: f64) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for img in images {
        let mut order: Vec<usize> = (0..img.preds.len()).collect();
        order.sort_by(|&a, &b| img.preds[b].confidence.total_cmp(&img.preds[a].confidence));
        let mut taken = vec![false; img.gts.len()];
        for j in order {
            let pred = &img.preds[j];
            let best = img
                .gts
                .iter()
                .enumerate()
                .filter(|(g, _)| !taken[*g])
                .map(|(g, gt)| (g, pred.bbox.iou(&gt.bbox)))
                .fold(None, |acc: Option<(usize, f64)>, (g, iou)| match acc {
                    Some((_, b)) if b >= iou => acc,
                    _ => Some((g, iou)),
                });
            let col = match best {
                Some((g, iou)) if iou >= iou_match => {
                    taken[g] = true;
                    img.gts[g].label.index()
                }
                _ => K,
            };
            m.counts[pred.label.index()][col] += 1;
        }
        for (g, gt) in img.gts.iter().enumerate() {
            if !taken[g] {
                m.counts[K][gt.label.index()] += 1;
            }
        }
    }
    m
}
