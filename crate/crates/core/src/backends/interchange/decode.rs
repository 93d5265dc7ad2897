//! Pre- and post-processing around exported graphs. Pure functions, so they
//! are tested whether or not the runtime is compiled in.

use crate::image::{BinaryMask, ImageBuffer};
use crate::label::VitalLabel;
use crate::result::{BoundingBox, Detection};

/// Gray used for letterbox padding.
pub const PAD_VALUE: u8 = 114;
/// Suppression threshold for same-class boxes.
pub const NMS_IOU: f64 = 0.5;

/// Placement of the source image inside the square network input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Letterbox {
    pub size: u32,
    pub scale: f64,
    pub pad_x: f64,
    pub pad_y: f64,
}

impl Letterbox {
    pub fn new(width: u32, height: u32, size: u32) -> Self {
        let scale = (size as f64 / width as f64).min(size as f64 / height as f64);
        let (nw, nh) = (
            (width as f64 * scale).round(),
            (height as f64 * scale).round(),
        );
        Self {
            size,
            scale,
            pad_x: ((size as f64 - nw) / 2.0).floor(),
            pad_y: ((size as f64 - nh) / 2.0).floor(),
        }
    }

    /// Network-input coordinates -> source image coordinates.
    pub fn unmap(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale)
    }

    /// Source image coordinates -> network-input coordinates.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.pad_x, y * self.scale + self.pad_y)
    }
}

/// Resizes `img` (bilinear) into a `size x size` canvas padded with
/// [`PAD_VALUE`], as planar RGB floats in `[0, 1]`.
pub fn letterbox(img: &ImageBuffer, size: u32) -> (Vec<f32>, Letterbox) {
    let lb = Letterbox::new(img.width(), img.height(), size);
    let s = size as usize;
    let plane = s * s;
    let mut out = vec![PAD_VALUE as f32 / 255.0; 3 * plane];
    let (max_x, max_y) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
    let nw = (img.width() as f64 * lb.scale).round() as usize;
    let nh = (img.height() as f64 * lb.scale).round() as usize;
    let (px, py) = (lb.pad_x as usize, lb.pad_y as usize);
    for y in 0..nh {
        // Sample at pixel centers.
        let sy = ((y as f64 + 0.5) / lb.scale - 0.5).clamp(0.0, max_y);
        for x in 0..nw {
            let sx = ((x as f64 + 0.5) / lb.scale - 0.5).clamp(0.0, max_x);
            let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
            let (x1, y1) = (
                (x0 + 1).min(img.width() - 1),
                (y0 + 1).min(img.height() - 1),
            );
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let (a, b, c, d) = (
                img.pixel(x0, y0),
                img.pixel(x1, y0),
                img.pixel(x0, y1),
                img.pixel(x1, y1),
            );
            let idx = (py + y) * s + px + x;
            for ch in 0..3 {
                let v = (1.0 - fx) * (1.0 - fy) * a[ch] as f64
                    + fx * (1.0 - fy) * b[ch] as f64
                    + (1.0 - fx) * fy * c[ch] as f64
                    + fx * fy * d[ch] as f64;
                out[ch * plane + idx] = (v / 255.0) as f32;
            }
        }
    }
    (out, lb)
}

/// Greedy per-class non-maximum suppression; survivors keep descending
/// confidence order.
pub fn nms(mut dets: Vec<Detection>, iou: f64) -> Vec<Detection> {
    dets.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut keep: Vec<Detection> = Vec::with_capacity(dets.len());
    for d in dets {
        if keep
            .iter()
            .all(|k| k.label != d.label || k.bbox.iou(&d.bbox) <= iou)
        {
            keep.push(d);
        }
    }
    keep
}

/// Decodes a YOLO-style detection head laid out as `[1, 4 + classes, n]`
/// (center x, center y, width, height, then one score per class), filters at
/// `tau`, maps boxes back through the letterbox and applies NMS.
pub fn decode_detections(
    output: &[f32],
    anchors: usize,
    classes: &[VitalLabel],
    tau: f64,
    lb: &Letterbox,
    width: u32,
    height: u32,
) -> Vec<Detection> {
    let rows = 4 + classes.len();
    assert_eq!(
        output.len(),
        rows * anchors,
        "detection head has unexpected size"
    );
    let at = |r: usize, j: usize| output[r * anchors + j] as f64;
    let mut dets = Vec::new();
    for j in 0..anchors {
        let Some((k, score)) = (0..classes.len())
            .map(|k| (k, at(4 + k, j)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            continue;
        };
        if !(score >= tau) {
            continue;
        }
        let (cx, cy, w, h) = (at(0, j), at(1, j), at(2, j), at(3, j));
        let (x0, y0) = lb.unmap(cx - w / 2.0, cy - h / 2.0);
        let (x1, y1) = lb.unmap(cx + w / 2.0, cy + h / 2.0);
        if let Some(bbox) = BoundingBox::covering(x0, y0, x1, y1, width, height) {
            dets.push(Detection {
                label: classes[k],
                bbox,
                confidence: score.min(1.0),
            });
        }
    }
    nms(dets, NMS_IOU)
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Decodes a YOLO segmentation head: `head` is `[1, 4 + 1 + m, n]` (box,
/// screen score, mask coefficients) and `protos` is `[1, m, ph, pw]`. The
/// best-scoring instance at or above `tau` becomes a full-resolution mask,
/// restricted to its box.
#[allow(clippy::too_many_arguments)]
pub fn decode_segmentation(
    head: &[f32],
    anchors: usize,
    protos: &[f32],
    proto_dims: (usize, usize, usize),
    tau: f64,
    lb: &Letterbox,
    width: u32,
    height: u32,
) -> Option<(BinaryMask, f64)> {
    let (m, ph, pw) = proto_dims;
    assert_eq!(
        head.len(),
        (5 + m) * anchors,
        "segmentation head has unexpected size"
    );
    assert_eq!(
        protos.len(),
        m * ph * pw,
        "prototype tensor has unexpected size"
    );
    let at = |r: usize, j: usize| head[r * anchors + j] as f64;
    let best = (0..anchors)
        .filter(|&j| at(4, j) >= tau)
        .max_by(|&a, &b| at(4, a).total_cmp(&at(4, b)))?;
    let score = at(4, best).min(1.0);
    let (cx, cy, w, h) = (at(0, best), at(1, best), at(2, best), at(3, best));
    let (bx0, by0, bx1, by1) = (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
    let coeffs: Vec<f64> = (0..m).map(|k| at(5 + k, best)).collect();
    let (sx, sy) = (pw as f64 / lb.size as f64, ph as f64 / lb.size as f64);

    let mask = BinaryMask::from_fn(width, height, |x, y| {
        let (nx, ny) = lb.map(x as f64, y as f64);
        if nx < bx0 || nx > bx1 || ny < by0 || ny > by1 {
            return false;
        }
        let (u, v) = ((nx * sx) as usize, (ny * sy) as usize);
        if u >= pw || v >= ph {
            return false;
        }
        let logit: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * protos[k * ph * pw + v * pw + u] as f64)
            .sum();
        sigmoid(logit) > 0.5
    });
    (mask.count() > 0).then_some((mask, score))
}

/// Recognizer input: the crop resized to `height` keeping its aspect ratio
/// (capped at `width`), scaled to `[-1, 1]` and right-padded with zeros.
pub fn recognizer_input(crop: &ImageBuffer, height: u32, width: u32) -> Vec<f32> {
    let (h, w) = (height as usize, width as usize);
    let scaled_w =
        ((crop.width() as f64 * height as f64 / crop.height() as f64).ceil() as usize).clamp(1, w);
    let mut out = vec![0f32; 3 * h * w];
    let (fx, fy) = (
        crop.width() as f64 / scaled_w as f64,
        crop.height() as f64 / h as f64,
    );
    for y in 0..h {
        let sy = (((y as f64 + 0.5) * fy) as u32).min(crop.height() - 1);
        for x in 0..scaled_w {
            let sx = (((x as f64 + 0.5) * fx) as u32).min(crop.width() - 1);
            let p = crop.pixel(sx, sy);
            for c in 0..3 {
                out[c * h * w + y * w + x] = (p[c] as f32 / 255.0 - 0.5) / 0.5;
            }
        }
    }
    out
}

/// Greedy CTC decoding of `[steps, classes]` probabilities where class 0 is
/// the blank and class `i > 0` is `dictionary[i - 1]`. The score is the mean
/// probability of the emitted characters.
pub fn ctc_greedy(
    probs: &[f32],
    steps: usize,
    classes: usize,
    dictionary: &[char],
) -> Option<(String, f64)> {
    assert_eq!(
        probs.len(),
        steps * classes,
        "recognizer output has unexpected size"
    );
    let mut text = String::new();
    let mut total = 0.0;
    let mut prev = 0usize;
    for t in 0..steps {
        let row = &probs[t * classes..(t + 1) * classes];
        let (k, p) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, p)| (k, *p as f64))
            .expect("at least one class");
        if k != 0 && k != prev {
            if let Some(&ch) = dictionary.get(k - 1) {
                text.push(ch);
                total += p;
            }
        }
        prev = k;
    }
    let n = text.chars().count();
    (n > 0).then(|| (text, (total / n as f64).clamp(0.0, 1.0)))
}

/// One character per line; blank lines are skipped.
pub fn parse_dictionary(text: &str) -> Vec<char> {
    text.lines()
        .filter_map(|l| l.trim_end_matches('\r').chars().next())
        .collect()
}
