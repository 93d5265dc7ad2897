use super::atlas::GlyphAtlas;
use super::{BackendError, OcrBackend};
use crate::image::ImageBuffer;

/// Glyphs whose best correlation falls below this are discarded.
pub const MIN_GLYPH_CORRELATION: f64 = 0.6;

// Crops whose brightest and darkest pixels differ by less than this hold no text.
const MIN_CONTRAST: u8 = 32;

#[derive(Debug, Clone)]
struct Reference {
    ch: char,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Reference recognizer: Otsu binarization, column segmentation and
/// normalized cross-correlation against an atlas.
#[derive(Debug, Clone)]
pub struct TemplateOcr {
    refs: Vec<Reference>,
}

pub fn template_ocr(crop: &ImageBuffer, atlas: &GlyphAtlas) -> Option<(String, f64)> {
    TemplateOcr::new(atlas).read(crop)
}

impl TemplateOcr {
    pub fn new(atlas: &GlyphAtlas) -> Self {
        let refs = atlas
            .templates()
            .filter_map(|t| {
                let ink = |x: u32| (0..t.height).any(|y| t.get(x, y) > 127);
                let x0 = (0..t.width).find(|&x| ink(x))?;
                let x1 = (0..t.width).rev().find(|&x| ink(x))? + 1;
                let mut data = Vec::with_capacity(((x1 - x0) * t.height) as usize);
                for y in 0..t.height {
                    for x in x0..x1 {
                        data.push(if t.get(x, y) > 127 { 1.0 } else { 0.0 });
                    }
                }
                Some(Reference {
                    ch: t.ch,
                    width: (x1 - x0) as usize,
                    height: t.height as usize,
                    data,
                })
            })
            .collect();
        Self { refs }
    }

    pub fn read(&self, crop: &ImageBuffer) -> Option<(String, f64)> {
        let (w, h) = (crop.width() as usize, crop.height() as usize);
        let gray = crop.max_channel();
        let (lo, hi) = gray
            .iter()
            .fold((u8::MAX, 0u8), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi.saturating_sub(lo) < MIN_CONTRAST {
            return None;
        }
        let t = otsu_threshold(&gray);
        let mut fg: Vec<bool> = gray.iter().map(|&v| v > t).collect();
        if fg.iter().filter(|&&b| b).count() * 2 > fg.len() {
            fg.iter_mut().for_each(|b| *b = !*b);
        }

        // Runs of columns holding ink; runs lighter than half a font dot are specks.
        let min_ink = (h * h / 120).max(2);
        let column_ink: Vec<usize> = (0..w)
            .map(|x| (0..h).filter(|&y| fg[y * w + x]).count())
            .collect();
        let mut runs = Vec::new();
        let mut x = 0;
        while x < w {
            if column_ink[x] == 0 {
                x += 1;
                continue;
            }
            let start = x;
            while x < w && column_ink[x] > 0 {
                x += 1;
            }
            if column_ink[start..x].iter().sum::<usize>() >= min_ink {
                runs.push((start, x));
            }
        }
        if runs.is_empty() {
            return None;
        }

        let row_has_ink = |y: usize| runs.iter().any(|&(a, b)| (a..b).any(|x| fg[y * w + x]));
        let top = (0..h).find(|&y| row_has_ink(y))?;
        let bottom = (0..h).rev().find(|&y| row_has_ink(y))? + 1;
        let line_h = bottom - top;

        let mut text = String::new();
        let mut total = 0.0;
        let mut n = 0usize;
        for (x0, x1) in runs {
            let seg_w = x1 - x0;
            let seg: Vec<f64> = (top..bottom)
                .flat_map(|y| (x0..x1).map(move |x| (y, x)))
                .map(|(y, x)| if fg[y * w + x] { 1.0 } else { 0.0 })
                .collect();
            let seg_aspect = seg_w as f64 / line_h as f64;
            let best = self
                .refs
                .iter()
                .map(|r| {
                    let resized = resample(&seg, seg_w, line_h, r.width, r.height);
                    let ncc = correlation(&resized, &r.data);
                    let ref_aspect = r.width as f64 / r.height as f64;
                    let shape = (seg_aspect.min(ref_aspect) / seg_aspect.max(ref_aspect)).sqrt();
                    (r.ch, ncc, ncc * shape)
                })
                .max_by(|a, b| a.2.total_cmp(&b.2));
            if let Some((ch, ncc, _)) = best {
                if ncc >= MIN_GLYPH_CORRELATION {
                    text.push(ch);
                    total += ncc;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (text, (total / n as f64).clamp(0.0, 1.0)))
    }
}

impl OcrBackend for TemplateOcr {
    fn recognize(&mut self, crop: &ImageBuffer) -> Result<Option<(String, f64)>, BackendError> {
        Ok(self.read(crop))
    }
}

/// Threshold maximizing between-class variance; pixels `> t` are one class.
pub(crate) fn otsu_threshold(gray: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &v in gray {
        hist[v as usize] += 1;
    }
    let total = gray.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best_t, mut best_var) = (0u8, -1.0);
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    best_t
}

// For each destination cell, the source cells it overlaps and the overlap lengths.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let (a, b) = (i as f64 * scale, (i + 1) as f64 * scale);
            let mut w = Vec::new();
            let mut j = a.floor() as usize;
            while (j as f64) < b && j < src {
                let overlap = (b.min(j as f64 + 1.0) - a.max(j as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((j, overlap / scale));
                }
                j += 1;
            }
            w
        })
        .collect()
}

/// Area-averaging resize of a row-major `sw x sh` plane to `dw x dh`.
fn resample(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    let wx = area_weights(sw, dw);
    let wy = area_weights(sh, dh);
    let mut rows = vec![0.0; sh * dw];
    for y in 0..sh {
        for (x, ws) in wx.iter().enumerate() {
            rows[y * dw + x] = ws.iter().map(|&(j, f)| src[y * sw + j] * f).sum();
        }
    }
    let mut out = vec![0.0; dh * dw];
    for (y, ws) in wy.iter().enumerate() {
        for x in 0..dw {
            out[y * dw + x] = ws.iter().map(|&(j, f)| rows[j * dw + x] * f).sum();
        }
    }
    out
}

/// Pearson correlation of two equal-length planes; 0 when either is flat.
fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (x - ma, y - mb);
        num += p * q;
        da += p * p;
        db += q * q;
    }
    if da <= 1e-12 || db <= 1e-12 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn render(text: &str, cell: u32) -> ImageBuffer {
        let atlas = GlyphAtlas::builtin();
        let (w, h) = atlas.text_extent(text, cell).unwrap();
        let mut img = ImageBuffer::filled(w + 4, h + 4, [14, 18, 24]);
        atlas
            .draw_text(&mut img, 2, 2, cell, text, [40, 230, 90])
            .unwrap();
        img
    }

    #[test]
    fn reads_own_render() {
        let atlas = GlyphAtlas::builtin();
        let (text, score) = template_ocr(&render("98", 6), &atlas).unwrap();
        assert_eq!(text, "98");
        assert!(score >= 0.99, "score {score}");
    }

    #[test]
    fn closed_loop_on_every_glyph_and_size() {
        let atlas = GlyphAtlas::builtin();
        let ocr = TemplateOcr::new(&atlas);
        for text in ["0123", "4567", "89", "120/80", "37.2", "1", "11", "7/1"] {
            for cell in [4, 5, 6, 7, 8] {
                let got = ocr.read(&render(text, cell)).map(|(t, _)| t);
                assert_eq!(got.as_deref(), Some(text), "cell {cell}");
            }
        }
    }

    #[test]
    fn blank_crops_are_absent() {
        let atlas = GlyphAtlas::builtin();
        assert_eq!(template_ocr(&ImageBuffer::black(40, 30), &atlas), None);
        assert_eq!(
            template_ocr(&ImageBuffer::filled(40, 30, [90, 90, 90]), &atlas),
            None
        );
    }

    #[test]
    fn dark_text_on_light_background() {
        let atlas = GlyphAtlas::builtin();
        let (w, h) = atlas.text_extent("64", 6).unwrap();
        let mut img = ImageBuffer::filled(w + 6, h + 6, [235, 235, 235]);
        atlas
            .draw_text(&mut img, 3, 3, 6, "64", [10, 10, 10])
            .unwrap();
        assert_eq!(template_ocr(&img, &atlas).unwrap().0, "64");
    }

    #[test]
    fn tolerates_gaussian_noise() {
        let atlas = GlyphAtlas::builtin();
        let noise = Normal::new(0.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut img = render("37.2", 6);
            for v in img.data_mut() {
                *v = (*v as f64 + noise.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8;
            }
            let (text, score) = template_ocr(&img, &atlas).unwrap();
            assert_eq!(text, "37.2");
            assert!(score >= 0.8);
        }
    }

    #[test]
    fn otsu_splits_bimodal() {
        let mut v = vec![20u8; 100];
        v.extend(std::iter::repeat_n(200u8, 30));
        let t = otsu_threshold(&v);
        assert!((20..200).contains(&t));
    }

    #[test]
    fn resample_preserves_mass() {
        let src: Vec<f64> = (0..35).map(|i| (i % 3) as f64).collect();
        let out = resample(&src, 5, 7, 3, 4);
        let mean_src = src.iter().sum::<f64>() / 35.0;
        let mean_out = out.iter().sum::<f64>() / 12.0;
        assert!((mean_src - mean_out).abs() < 1e-12);
        assert_eq!(resample(&src, 5, 7, 5, 7), src);
    }
}
