use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distort::{
    background, distort, max_offset, max_scale, DistortionSpec, SCENE_HEIGHT, SCENE_WIDTH,
};
use super::layout::LAYOUTS;
use super::manifest::{
    DistortionParams, Glare, GroundTruthField, GroundTruthImage, GroundTruthManifest,
};
use super::render::{render, ScreenSpec};
use super::SynthError;
use crate::backends::GlyphAtlas;
use crate::digitizer::{RangeGate, ValueKind};
use crate::geometry::order_corners;
use crate::image::ImageBuffer;
use crate::label::VitalLabel;

/// Obliqueness buckets, in degrees; image `i` falls in bucket `(i / 3) % 3`.
pub const SEVERITY_BUCKETS: [(f64, f64); 3] = [(0.0, 10.0), (10.0, 20.0), (20.0, 35.0)];

/// Knobs for corpus generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusOptions {
    /// Images with a monitor.
    pub count: usize,
    /// Extra scenes without a monitor, appended after the others.
    pub absent: usize,
    pub seed: u64,
    /// Per-image noise sigma is drawn from `[0, max_noise_sigma]` (8-bit levels).
    pub max_noise_sigma: f64,
    pub out_of_range_rate: f64,
    /// Chance that a screen shows no temperature.
    pub temp_missing_rate: f64,
    pub glare_rate: f64,
    pub blur_rate: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            count: 200,
            absent: 0,
            seed: 0,
            max_noise_sigma: 10.0,
            out_of_range_rate: 0.1,
            temp_missing_rate: 0.12,
            glare_rate: 0.3,
            blur_rate: 0.25,
        }
    }
}

/// One generated image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub image: ImageBuffer,
    pub truth: GroundTruthImage,
}

fn image_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 step so neighbouring indices get unrelated streams
    let mut z = seed
        ^ (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn image_id(index: usize) -> String {
    format!("{index:04}")
}

fn render_value(kind: ValueKind, tenths_or_int: i64) -> String {
    match kind {
        ValueKind::Integer => tenths_or_int.to_string(),
        ValueKind::OneDecimal => format!("{}.{}", tenths_or_int / 10, tenths_or_int % 10),
    }
}

/// Draws a plausible value for every label, then replaces some with values
/// outside the default gate that still fit the label's slot.
fn sample_values(
    rng: &mut ChaCha8Rng,
    opts: &CorpusOptions,
) -> BTreeMap<VitalLabel, (String, bool)> {
    let gate = RangeGate::default();
    let hr = rng.random_range(40..=180);
    let sys = rng.random_range(90..=180);
    let dia = rng.random_range(50..=(sys - 25).min(110));
    let normal: [(VitalLabel, i64); 8] = [
        (VitalLabel::Hr, hr),
        (
            VitalLabel::Pr,
            (hr + rng.random_range(-3..=3)).clamp(10, 300),
        ),
        (VitalLabel::Spo2, rng.random_range(85..=100)),
        (VitalLabel::Sys, sys),
        (VitalLabel::Dia, dia),
        (VitalLabel::Map, (sys + 2 * dia + 1) / 3),
        (VitalLabel::Rr, rng.random_range(8..=35)),
        (VitalLabel::Temp, rng.random_range(350..=400)),
    ];
    let mut out = BTreeMap::new();
    for (label, v) in normal {
        let kind = gate.bounds(label).kind;
        let outlier = rng.random_bool(opts.out_of_range_rate);
        let v = if outlier {
            // (low range, high range) of implausible values that fit the slot
            let (low, high): ((i64, i64), (i64, i64)) = match label {
                VitalLabel::Hr | VitalLabel::Pr => ((0, 9), (301, 999)),
                VitalLabel::Spo2 => ((101, 150), (151, 199)),
                VitalLabel::Sys => ((0, 29), (301, 999)),
                VitalLabel::Dia => ((0, 9), (201, 999)),
                VitalLabel::Map => ((0, 19), (251, 999)),
                VitalLabel::Rr => ((0, 1), (81, 99)),
                VitalLabel::Temp => ((100, 249), (451, 999)),
            };
            let (a, b) = if rng.random_bool(0.3) { low } else { high };
            rng.random_range(a..=b)
        } else {
            v
        };
        let text = render_value(kind, v);
        let numeric = match kind {
            ValueKind::Integer => v as f64,
            ValueKind::OneDecimal => v as f64 / 10.0,
        };
        out.insert(label, (text, gate.bounds(label).admits(numeric)));
    }
    out
}

fn sample_distortion(
    rng: &mut ChaCha8Rng,
    index: usize,
    opts: &CorpusOptions,
) -> Result<DistortionParams, SynthError> {
    let (lo, hi) = SEVERITY_BUCKETS[(index / 3) % 3];
    for _ in 0..64 {
        let mut p = DistortionParams {
            obliqueness_deg: if hi == 35.0 {
                rng.random_range(lo..=hi)
            } else {
                rng.random_range(lo..hi)
            },
            azimuth_deg: rng.random_range(0.0..360.0),
            roll_deg: rng.random_range(-8.0..=8.0),
            scale: 1.0,
            offset: [0.0, 0.0],
            noise_sigma: if opts.max_noise_sigma > 0.0 {
                rng.random_range(0.0..=opts.max_noise_sigma)
            } else {
                0.0
            },
            glare: None,
            blur_radius: 0,
            seed: rng.random(),
        };
        let fit = max_scale(&p, SCENE_WIDTH, SCENE_HEIGHT);
        p.scale = rng.random_range(0.95..1.3f64).min(fit);
        let room = max_offset(&p, p.scale, SCENE_WIDTH, SCENE_HEIGHT);
        p.offset = [
            rng.random_range(-1.0..=1.0) * room[0],
            rng.random_range(-1.0..=1.0) * room[1],
        ];
        if rng.random_bool(opts.glare_rate) {
            p.glare = Some(Glare {
                cx: rng.random_range(0.0..SCENE_WIDTH as f64),
                cy: rng.random_range(0.0..SCENE_HEIGHT as f64),
                rx: rng.random_range(80.0..250.0),
                ry: rng.random_range(80.0..250.0),
                intensity: rng.random_range(15.0..45.0),
            });
        }
        if rng.random_bool(opts.blur_rate) {
            p.blur_radius = 1;
        }
        // Keep only views whose corner order survives the top-left rule, so
        // the stored quad is the one a corner extractor reports.
        let Ok(d) = DistortionSpec::from_params(&p, SCENE_WIDTH, SCENE_HEIGHT) else {
            continue;
        };
        let quad = d.quad()?;
        if order_corners(*quad.corners()).is_ok_and(|q| q == quad) {
            return Ok(p);
        }
    }
    Err(SynthError::Distortion(
        "no admissible camera pose found".into(),
    ))
}

/// Generates image `index` of the corpus described by `opts`. Images at
/// `index >= opts.count` are monitor-absent scenes.
pub fn synthesize(
    index: usize,
    opts: &CorpusOptions,
    atlas: &GlyphAtlas,
) -> Result<SyntheticImage, SynthError> {
    let seed = image_seed(opts.seed, index);
    let id = image_id(index);
    let file = format!("{id}.png");
    if index >= opts.count {
        let image = background(SCENE_WIDTH, SCENE_HEIGHT, seed);
        return Ok(SyntheticImage {
            image,
            truth: GroundTruthImage {
                id,
                file,
                width: SCENE_WIDTH,
                height: SCENE_HEIGHT,
                layout: None,
                screen: None,
                homography: None,
                distortion: None,
                fields: Vec::new(),
            },
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = index % LAYOUTS.len();
    let mut sampled = sample_values(&mut rng, opts);
    if rng.random_bool(opts.temp_missing_rate) {
        sampled.remove(&VitalLabel::Temp);
    }
    let params = sample_distortion(&mut rng, index, opts)?;
    let spec = ScreenSpec {
        layout,
        values: sampled.iter().map(|(l, (v, _))| (*l, v.clone())).collect(),
        seed: rng.random(),
    };
    let (canonical, rendered) = render(&spec, atlas)?;
    let d = DistortionSpec::from_params(&params, SCENE_WIDTH, SCENE_HEIGHT)?;
    let (image, quad) = distort(&canonical, &d)?;
    let fields = rendered
        .into_iter()
        .map(|f| GroundTruthField {
            in_range: sampled[&f.label].1,
            label: f.label,
            value: f.value,
            text: f.text,
            bbox: f.bbox,
        })
        .collect();
    Ok(SyntheticImage {
        image,
        truth: GroundTruthImage {
            id,
            file,
            width: SCENE_WIDTH,
            height: SCENE_HEIGHT,
            layout: Some(layout),
            screen: Some(quad),
            homography: Some(d.homography),
            distortion: Some(params),
            fields,
        },
    })
}

/// All images of a corpus in memory, generated in parallel.
pub fn synthesize_all(
    opts: &CorpusOptions,
    atlas: &GlyphAtlas,
) -> Result<Vec<SyntheticImage>, SynthError> {
    (0..opts.count + opts.absent)
        .into_par_iter()
        .map(|i| synthesize(i, opts, atlas))
        .collect()
}

/// Writes `NNNN.png` files and `manifest.json` into `out_dir`.
pub fn generate_corpus(
    opts: &CorpusOptions,
    atlas: &GlyphAtlas,
    out_dir: impl AsRef<Path>,
) -> Result<GroundTruthManifest, SynthError> {
    let out_dir = out_dir.as_ref();
    if opts.count + opts.absent == 0 {
        return Err(SynthError::EmptyCorpus);
    }
    std::fs::create_dir_all(out_dir).map_err(|e| SynthError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let images: Vec<GroundTruthImage> = (0..opts.count + opts.absent)
        .into_par_iter()
        .map(|i| {
            let s = synthesize(i, opts, atlas)?;
            let path = out_dir.join(&s.truth.file);
            s.image.save_png(&path).map_err(|e| SynthError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(s.truth)
        })
        .collect::<Result<_, SynthError>>()?;
    let manifest = GroundTruthManifest {
        seed: opts.seed,
        images,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}
