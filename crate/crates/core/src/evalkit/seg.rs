use serde::Serialize;
use thiserror::Error;

use super::table::{fixed, Table};
use crate::image::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("mask dimensions differ: {pred:?} vs {gt:?}")]
pub struct DimensionMismatch {
    pub pred: (u32, u32),
    pub gt: (u32, u32),
}

/// Pixel-set overlap scores for one predicted mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaskScores {
    pub iou: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Overlap of `pred` with `gt`. Two empty masks agree perfectly; otherwise
/// a ratio with an empty denominator is 0.
pub fn mask_scores(pred: &BinaryMask, gt: &BinaryMask) -> Result<MaskScores, DimensionMismatch> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(DimensionMismatch {
            pred: (pred.width(), pred.height()),
            gt: (gt.width(), gt.height()),
        });
    }
    let (mut inter, mut p, mut g) = (0u64, 0u64, 0u64);
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        inter += (a && b) as u64;
        p += a as u64;
        g += b as u64;
    }
    if p == 0 && g == 0 {
        return Ok(MaskScores {
            iou: 1.0,
            dice: 1.0,
            precision: 1.0,
            recall: 1.0,
        });
    }
    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    Ok(MaskScores {
        iou: ratio(inter, p + g - inter),
        dice: ratio(2 * inter, p + g),
        precision: ratio(inter, p),
        recall: ratio(inter, g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegScores {
    pub count: usize,
    pub iou: Option<MeanStd>,
    pub dice: Option<MeanStd>,
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
}

pub fn seg_scores(instances: &[MaskScores]) -> SegScores {
    let pick =
        |f: fn(&MaskScores) -> f64| MeanStd::of(&instances.iter().map(f).collect::<Vec<_>>());
    SegScores {
        count: instances.len(),
        iou: pick(|s| s.iou),
        dice: pick(|s| s.dice),
        precision: pick(|s| s.precision),
        recall: pick(|s| s.recall),
    }
}

impl SegScores {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Metric", "Mean", "Std"]);
        for (name, v) in [
            ("IoU", self.iou),
            ("Dice", self.dice),
            ("Precision", self.precision),
            ("Recall", self.recall),
        ] {
            t.push([
                name.to_string(),
                fixed(v.map(|m| m.mean), 4),
                fixed(v.map(|m| m.std), 4),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: u32, h: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
    }

    #[test]
    fn identical_masks_score_one() {
        let m = rect(8, 8, 1, 1, 5, 6);
        let s = mask_scores(&m, &m).unwrap();
        assert_eq!((s.iou, s.dice, s.precision, s.recall), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn half_overlap() {
        let s = mask_scores(&rect(4, 2, 0, 0, 2, 2), &rect(4, 2, 1, 0, 3, 2)).unwrap();
        assert!((s.iou - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.dice - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_cases() {
        let e = BinaryMask::new(4, 4);
        assert_eq!(mask_scores(&e, &e).unwrap().iou, 1.0);
        let s = mask_scores(&e, &rect(4, 4, 0, 0, 2, 2)).unwrap();
        assert_eq!((s.iou, s.dice, s.precision, s.recall), (0.0, 0.0, 0.0, 0.0));
        assert!(mask_scores(&e, &BinaryMask::new(4, 5)).is_err());
    }

    #[test]
    fn aggregates() {
        let a = MaskScores {
            iou: 0.8,
            dice: 0.9,
            precision: 1.0,
            recall: 0.5,
        };
        let b = MaskScores { iou: 0.6, ..a };
        let s = seg_scores(&[a, b]);
        let iou = s.iou.unwrap();
        assert!((iou.mean - 0.7).abs() < 1e-12 && (iou.std - 0.1).abs() < 1e-12);
        assert_eq!(s.recall.unwrap().std, 0.0);
        assert!(seg_scores(&[]).dice.is_none());
    }
}
