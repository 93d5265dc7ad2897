//! Brute-force reference implementations of the evaluation metrics, and
//! generators of small random instances to compare them on. Shared with the
//! acceptance harness through `#[path]`.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use vitalscan_core::evalkit::{GtBox, ImageDetections};
use vitalscan_core::{BinaryMask, BoundingBox, Detection, VitalLabel};

// ---- masks -----------------------------------------------------------------

pub struct MaskOracle {
    pub iou: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
}

fn pixels(m: &BinaryMask) -> HashSet<(u32, u32)> {
    let mut s = HashSet::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.get(x, y) {
                s.insert((x, y));
            }
        }
    }
    s
}

pub fn mask_oracle(pred: &BinaryMask, gt: &BinaryMask) -> MaskOracle {
    let (p, g) = (pixels(pred), pixels(gt));
    if p.is_empty() && g.is_empty() {
        return MaskOracle {
            iou: 1.0,
            dice: 1.0,
            precision: 1.0,
            recall: 1.0,
        };
    }
    let inter = p.intersection(&g).count() as f64;
    let union = p.union(&g).count() as f64;
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    MaskOracle {
        iou: div(inter, union),
        dice: div(2.0 * inter, (p.len() + g.len()) as f64),
        precision: div(inter, p.len() as f64),
        recall: div(inter, g.len() as f64),
    }
}

pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32) -> BinaryMask {
    match rng.random_range(0..4) {
        0 => BinaryMask::new(w, h),
        1 => {
            let p = rng.random::<f64>();
            BinaryMask::from_fn(w, h, |_, _| rng.random_bool(p))
        }
        _ => {
            let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
            let (x1, y1) = (rng.random_range(x0..=w), rng.random_range(y0..=h));
            BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
        }
    }
}

// ---- boxes -----------------------------------------------------------------

pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let [ax0, ay0, ax1, ay1] = a.to_array().map(|v| v as i64);
    let [bx0, by0, bx1, by1] = b.to_array().map(|v| v as i64);
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0);
    let inter = iw * ih;
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    inter as f64 / union as f64
}

fn random_box(rng: &mut impl Rng) -> BoundingBox {
    let (x0, y0) = (rng.random_range(0..16u32), rng.random_range(0..16u32));
    let (w, h) = (rng.random_range(1..10u32), rng.random_range(1..10u32));
    BoundingBox::new(x0, y0, x0 + w, y0 + h).unwrap()
}

/// One or two images, at most `max_boxes` predictions and ground-truth
/// boxes in total, drawn from `labels`. Predictions are often jittered
/// copies of ground truth; confidences are distinct.
pub fn random_instance(
    rng: &mut impl Rng,
    labels: &[VitalLabel],
    max_boxes: usize,
) -> Vec<ImageDetections> {
    let n_images = rng.random_range(1..=2);
    let mut images: Vec<ImageDetections> =
        (0..n_images).map(|_| ImageDetections::default()).collect();
    let n_gt = rng.random_range(0..=max_boxes);
    for _ in 0..n_gt {
        let i = rng.random_range(0..n_images);
        let label = labels[rng.random_range(0..labels.len())];
        images[i].gts.push(GtBox {
            label,
            bbox: random_box(rng),
        });
    }
    let n_pred = rng.random_range(0..=max_boxes);
    let mut confs: Vec<f64> = (0..n_pred)
        .map(|k| (k + 1) as f64 / (n_pred + 1) as f64)
        .collect();
    confs.shuffle(rng);
    for conf in confs {
        let i = rng.random_range(0..n_images);
        let copy = !images[i].gts.is_empty() && rng.random_bool(0.7);
        let (label, bbox) = if copy {
            let g = images[i].gts[rng.random_range(0..images[i].gts.len())];
            let [x0, y0, x1, y1] = g.bbox.to_array();
            let dx = rng.random_range(0..3u32);
            let dy = rng.random_range(0..3u32);
            let label = if rng.random_bool(0.8) {
                g.label
            } else {
                labels[rng.random_range(0..labels.len())]
            };
            (
                label,
                BoundingBox::new(x0 + dx, y0 + dy, x1 + dx, y1 + dy).unwrap(),
            )
        } else {
            (labels[rng.random_range(0..labels.len())], random_box(rng))
        };
        images[i].preds.push(Detection {
            label,
            bbox,
            confidence: conf,
        });
    }
    images
}

/// Enumerates every injective partial assignment of `preds` (listed in
/// processing order) to `candidates`, and returns the unique one in which
/// each prediction holds the lowest-indexed best-overlapping candidate
/// still free, or nothing when that overlap is below `t`.
fn greedy_assignment(
    preds: &[BoundingBox],
    candidates: &[Vec<(usize, BoundingBox)>],
    t: f64,
) -> Vec<Option<usize>> {
    let mut found: Vec<Vec<Option<usize>>> = Vec::new();
    let mut current = vec![None; preds.len()];
    fn rec(
        k: usize,
        preds: &[BoundingBox],
        candidates: &[Vec<(usize, BoundingBox)>],
        current: &mut Vec<Option<usize>>,
        t: f64,
        found: &mut Vec<Vec<Option<usize>>>,
    ) {
        if k == preds.len() {
            if consistent(preds, candidates, current, t) {
                found.push(current.clone());
            }
            return;
        }
        current[k] = None;
        rec(k + 1, preds, candidates, current, t, found);
        for &(g, _) in &candidates[k] {
            if !current[..k].contains(&Some(g)) {
                current[k] = Some(g);
                rec(k + 1, preds, candidates, current, t, found);
            }
        }
        current[k] = None;
    }
    rec(0, preds, candidates, &mut current, t, &mut found);
    assert_eq!(found.len(), 1, "greedy assignment must be unique");
    found.pop().unwrap()
}

fn consistent(
    preds: &[BoundingBox],
    candidates: &[Vec<(usize, BoundingBox)>],
    a: &[Option<usize>],
    t: f64,
) -> bool {
    for k in 0..preds.len() {
        let free: Vec<(usize, f64)> = candidates[k]
            .iter()
            .filter(|(g, _)| !a[..k].contains(&Some(*g)))
            .map(|(g, b)| (*g, box_iou(&preds[k], b)))
            .collect();
        let best = free
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let expected = if free.is_empty() || best < t {
            None
        } else {
            free.iter()
                .filter(|(_, v)| *v == best)
                .map(|(g, _)| *g)
                .min()
        };
        if a[k] != expected {
            return false;
        }
    }
    true
}

/// Ranked TP flags for one class: all predictions of the class across
/// images, by descending confidence (ties by image, then position).
pub fn class_tp_oracle(images: &[ImageDetections], label: VitalLabel, t: f64) -> Vec<bool> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (j, p) in img.preds.iter().enumerate() {
            if p.label == label {
                order.push((i, j));
            }
        }
    }
    order.sort_by(|a, b| {
        images[b.0].preds[b.1]
            .confidence
            .partial_cmp(&images[a.0].preds[a.1].confidence)
            .unwrap()
            .then(a.cmp(b))
    });
    let preds: Vec<BoundingBox> = order
        .iter()
        .map(|&(i, j)| images[i].preds[j].bbox)
        .collect();
    // Ground truth gets a global index so images never share candidates.
    let mut offset = vec![0; images.len() + 1];
    for (i, img) in images.iter().enumerate() {
        offset[i + 1] = offset[i] + img.gts.len();
    }
    let candidates: Vec<Vec<(usize, BoundingBox)>> = order
        .iter()
        .map(|&(i, _)| {
            images[i]
                .gts
                .iter()
                .enumerate()
                .filter(|(_, g)| g.label == label)
                .map(|(g, gt)| (offset[i] + g, gt.bbox))
                .collect()
        })
        .collect();
    greedy_assignment(&preds, &candidates, t)
        .into_iter()
        .map(|a| a.is_some())
        .collect()
}

/// 101-point interpolated AP, each point by scanning every rank.
pub fn ap_oracle(tp: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut points = Vec::new();
    let mut hits = 0;
    for (k, &t) in tp.iter().enumerate() {
        if t {
            hits += 1;
        }
        points.push((hits as f64 / n_gt as f64, hits as f64 / (k + 1) as f64));
    }
    let total: f64 = (0..=100)
        .map(|r| {
            let r = r as f64 / 100.0;
            points
                .iter()
                .filter(|(rec, _)| *rec >= r)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
        .sum();
    Some(total / 101.0)
}

/// `(counts[pred][truth])` built by exhaustive per-image assignment.
pub fn confusion_oracle(images: &[ImageDetections], t: f64) -> Vec<Vec<u64>> {
    let k = VitalLabel::ALL.len();
    let mut m = vec![vec![0u64; k + 1]; k + 1];
    for img in images {
        let mut order: Vec<usize> = (0..img.preds.len()).collect();
        order.sort_by(|&a, &b| {
            img.preds[b]
                .confidence
                .partial_cmp(&img.preds[a].confidence)
                .unwrap()
                .then(a.cmp(&b))
        });
        let preds: Vec<BoundingBox> = order.iter().map(|&j| img.preds[j].bbox).collect();
        let all: Vec<(usize, BoundingBox)> = img
            .gts
            .iter()
            .enumerate()
            .map(|(g, gt)| (g, gt.bbox))
            .collect();
        let candidates = vec![all; preds.len()];
        let assignment = greedy_assignment(&preds, &candidates, t);
        for (pos, &j) in order.iter().enumerate() {
            let col = assignment[pos].map_or(k, |g| img.gts[g].label.index());
            m[img.preds[j].label.index()][col] += 1;
        }
        for (g, gt) in img.gts.iter().enumerate() {
            if !assignment.contains(&Some(g)) {
                m[k][gt.label.index()] += 1;
            }
        }
    }
    m
}

// ---- fields ----------------------------------------------------------------

/// Reference comparator: both sides rendered as `id|LABEL|value` lines, the
/// value normalized by numeric parsing, then matched line by line.
pub fn field_oracle(
    predictions: &BTreeMap<(String, VitalLabel), String>,
    truth: &BTreeMap<(String, VitalLabel), String>,
) -> BTreeMap<VitalLabel, (usize, usize)> {
    let norm = |label: VitalLabel, v: &str| -> String {
        match v.parse::<f64>() {
            Ok(x) if label == VitalLabel::Temp => format!("{}", (x * 10.0).round() as i64),
            Ok(x) => format!("{}", x as i64),
            Err(_) => v.to_string(),
        }
    };
    let lines: Vec<String> = predictions
        .iter()
        .map(|((id, l), v)| format!("{id}|{l}|{}", norm(*l, v)))
        .collect();
    let mut out = BTreeMap::new();
    for ((id, l), v) in truth {
        let needle = format!("{id}|{l}|{}", norm(*l, v));
        let e = out.entry(*l).or_insert((0, 0));
        e.1 += 1;
        if lines.contains(&needle) {
            e.0 += 1;
        }
    }
    out
}

/// Well-formed value strings, sometimes padded with leading or trailing
/// zeros, so canonicalization matters.
pub fn random_value(rng: &mut impl Rng, label: VitalLabel) -> String {
    if label == VitalLabel::Temp {
        let tenths = rng.random_range(340..=420);
        match rng.random_range(0..3) {
            0 => format!("{}.{}", tenths / 10, tenths % 10),
            1 if tenths % 10 == 0 => format!("{}", tenths / 10),
            _ => format!("0{}.{}", tenths / 10, tenths % 10),
        }
    } else {
        let v = rng.random_range(0..=250);
        if rng.random_bool(0.2) {
            format!("0{v}")
        } else {
            v.to_string()
        }
    }
}

pub type FieldMaps = (
    BTreeMap<(String, VitalLabel), String>,
    BTreeMap<(String, VitalLabel), String>,
);

pub fn random_fields(rng: &mut impl Rng) -> FieldMaps {
    let mut truth = BTreeMap::new();
    let mut preds = BTreeMap::new();
    for img in 0..rng.random_range(0..5) {
        for &label in &VitalLabel::ALL {
            let key = (format!("{img:04}"), label);
            let in_truth = rng.random_bool(0.7);
            let v = random_value(rng, label);
            if in_truth {
                truth.insert(key.clone(), v.clone());
            }
            match rng.random_range(0..4) {
                0 => {}
                1 => {
                    preds.insert(key, random_value(rng, label));
                }
                _ => {
                    // Same number, possibly rendered differently.
                    let p = if rng.random_bool(0.5) {
                        format!("0{v}")
                    } else {
                        v
                    };
                    preds.insert(key, p);
                }
            }
        }
    }
    (preds, truth)
}
