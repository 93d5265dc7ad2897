//! Replay backends driven by a synthetic corpus manifest.
//!
//! The three backends share one fixture. Detection queues the text of every
//! box it emits and recognition pops that queue, so the recognizer returns
//! the string drawn in the ROI it is shown, in detection order.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    BackendError, Backends, DetectionBackend, GlyphAtlas, OcrBackend, SegmentationBackend,
    TemplateOcr,
};
use crate::digitizer::CorrectionTable;
use crate::geometry::{Point2D, ScreenQuad};
use crate::image::{BinaryMask, ImageBuffer};
use crate::result::{BoundingBox, Detection};
use crate::synthscreen::{GroundTruthImage, GroundTruthManifest};

/// Coordinate system of replayed detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionFrame {
    /// Boxes in the rectified 640x480 frame, as stored in the manifest.
    #[default]
    Canonical,
    /// Boxes projected into the original photograph: the axis-aligned hull
    /// of the canonical box mapped through the corpus homography. Used when
    /// rectification is switched off.
    Scene,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockConfig {
    /// Standard deviation of Gaussian noise added to each true corner, px.
    pub corner_jitter: f64,
    pub seg_confidence: f64,
    pub det_confidence: f64,
    pub ocr_confidence: f64,
    /// Confidences are drawn uniformly from `base +- spread`, clipped to [0, 1].
    pub confidence_spread: f64,
    /// Per-character probability of replacing a character in OCR output.
    pub substitution_rate: f64,
    pub seed: u64,
    pub frame: DetectionFrame,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            corner_jitter: 0.0,
            seg_confidence: 0.95,
            det_confidence: 0.9,
            ocr_confidence: 0.97,
            confidence_spread: 0.0,
            substitution_rate: 0.0,
            seed: 0,
            frame: DetectionFrame::Canonical,
        }
    }
}

/// FNV-1a; stable across platforms and runs, unlike `DefaultHasher`.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

struct Shared {
    manifest: GroundTruthManifest,
    index: HashMap<String, usize>,
    config: MockConfig,
    // Digit -> characters the recognizer may confuse it with.
    confusions: BTreeMap<char, Vec<char>>,
}

impl Shared {
    fn lookup(&self, id: &str) -> Result<usize, BackendError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| BackendError::UnknownImageId(id.to_string()))
    }

    fn image(&self, i: usize) -> &GroundTruthImage {
        &self.manifest.images[i]
    }

    fn rng(&self, id: &str, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed ^ stable_hash(id) ^ salt)
    }

    fn confidence(&self, rng: &mut ChaCha8Rng, base: f64) -> f64 {
        let s = self.config.confidence_spread;
        if s > 0.0 {
            (base + rng.random_range(-s..=s)).clamp(0.0, 1.0)
        } else {
            base
        }
    }
}

// Texts of emitted boxes not yet recognized.
type Pending = Arc<Mutex<VecDeque<String>>>;

/// Ground-truth replay shared by the three mock backends.
#[derive(Clone)]
pub struct MockFixture {
    shared: Arc<Shared>,
    pending: Pending,
}

impl MockFixture {
    pub fn new(manifest: GroundTruthManifest, config: MockConfig) -> Self {
        let index = manifest
            .images
            .iter()
            .enumerate()
            .map(|(i, img)| (img.id.clone(), i))
            .collect();
        let mut confusions: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for (from, to) in CorrectionTable::default().entries() {
            confusions.entry(to).or_default().push(from);
        }
        Self {
            shared: Arc::new(Shared {
                manifest,
                index,
                config,
                confusions,
            }),
            pending: Pending::default(),
        }
    }

    pub fn manifest(&self) -> &GroundTruthManifest {
        &self.shared.manifest
    }

    pub fn segmentation(&self) -> MockSegmentation {
        MockSegmentation {
            shared: Arc::clone(&self.shared),
            current: None,
        }
    }

    /// Detection and recognition built separately share the fixture's text
    /// queue; use [`MockFixture::backends`] for independent sets.
    pub fn detection(&self) -> MockDetection {
        self.detection_with(Arc::clone(&self.pending))
    }

    pub fn recognition(&self) -> MockOcr {
        self.recognition_with(Arc::clone(&self.pending))
    }

    fn detection_with(&self, pending: Pending) -> MockDetection {
        MockDetection {
            shared: Arc::clone(&self.shared),
            pending,
            current: None,
        }
    }

    fn recognition_with(&self, pending: Pending) -> MockOcr {
        MockOcr {
            shared: Arc::clone(&self.shared),
            pending,
            rng: None,
        }
    }

    /// All three stages replayed from the fixture, with a text queue of
    /// their own so several sets can run concurrently.
    pub fn backends(&self) -> Backends {
        let pending = Pending::default();
        Backends::new(
            self.segmentation(),
            self.detection_with(Arc::clone(&pending)),
            self.recognition_with(pending),
        )
    }

    /// Replayed segmentation and detection with a real recognizer reading
    /// the pixels through `atlas`.
    pub fn template_backends(&self, atlas: &GlyphAtlas) -> Backends {
        self.backends().with_ocr(TemplateOcr::new(atlas))
    }
}

pub struct MockSegmentation {
    shared: Arc<Shared>,
    current: Option<(usize, ChaCha8Rng)>,
}

impl SegmentationBackend for MockSegmentation {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        let i = self.shared.lookup(source_id)?;
        self.current = Some((i, self.shared.rng(source_id, 0x0073_6567)));
        Ok(())
    }

    fn segment(
        &mut self,
        img: &ImageBuffer,
        _tau: f64,
    ) -> Result<Option<(BinaryMask, f64)>, BackendError> {
        let (i, rng) = self
            .current
            .as_mut()
            .ok_or_else(|| BackendError::UnknownImageId("<none selected>".into()))?;
        let truth = self.shared.image(*i);
        let Some(quad) = truth.screen else {
            return Ok(None);
        };
        let sigma = self.shared.config.corner_jitter;
        let quad = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            let jittered = quad
                .corners()
                .map(|p| Point2D::new(p.x + normal.sample(rng), p.y + normal.sample(rng)));
            ScreenQuad::new(jittered).unwrap_or(quad)
        } else {
            quad
        };
        let conf = self
            .shared
            .confidence(rng, self.shared.config.seg_confidence);
        Ok(Some((quad.rasterize(img.width(), img.height()), conf)))
    }
}

pub struct MockDetection {
    shared: Arc<Shared>,
    pending: Pending,
    current: Option<(usize, ChaCha8Rng, ChaCha8Rng)>,
}

impl DetectionBackend for MockDetection {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        let i = self.shared.lookup(source_id)?;
        self.current = Some((
            i,
            self.shared.rng(source_id, 0x0064_6574),
            self.shared.rng(source_id, 0x0073_7562),
        ));
        self.pending.lock().expect("mock queue poisoned").clear();
        Ok(())
    }

    fn detect(&mut self, img: &ImageBuffer, tau: f64) -> Result<Vec<Detection>, BackendError> {
        let (i, rng, sub_rng) = self
            .current
            .as_mut()
            .ok_or_else(|| BackendError::UnknownImageId("<none selected>".into()))?;
        let shared = &self.shared;
        let truth = shared.image(*i);
        let mut pending = self.pending.lock().expect("mock queue poisoned");
        pending.clear();
        let mut out = Vec::new();
        for f in &truth.fields {
            let conf = shared.confidence(rng, shared.config.det_confidence);
            let bbox = match shared.config.frame {
                DetectionFrame::Canonical => f.bbox.clamp_to(img.width(), img.height()),
                DetectionFrame::Scene => truth
                    .homography
                    .and_then(|h| project_box(&h, &f.bbox, img.width(), img.height())),
            };
            // Mirror the validating wrapper so queued texts stay aligned
            // with the boxes the pipeline actually sees.
            let Some(bbox) = bbox else { continue };
            if conf < tau {
                continue;
            }
            out.push(Detection {
                label: f.label,
                bbox,
                confidence: conf,
            });
            pending.push_back(corrupt(&f.text, shared, sub_rng));
        }
        Ok(out)
    }
}

fn project_box(
    h: &crate::geometry::Homography,
    b: &BoundingBox,
    width: u32,
    height: u32,
) -> Option<BoundingBox> {
    let (x0, y0, x1, y1) = (
        b.x_min() as f64,
        b.y_min() as f64,
        b.x_max() as f64,
        b.y_max() as f64,
    );
    let pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        .into_iter()
        .map(|(x, y)| h.apply(Point2D::new(x, y)))
        .collect::<Option<Vec<_>>>()?;
    let (mut lx, mut ly, mut hx, mut hy) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in pts {
        lx = lx.min(p.x);
        ly = ly.min(p.y);
        hx = hx.max(p.x);
        hy = hy.max(p.y);
    }
    BoundingBox::covering(lx, ly, hx, hy, width, height)
}

/// Replaces characters at the configured rate: mostly with a look-alike
/// the correction table repairs, otherwise with a different digit.
fn corrupt(text: &str, shared: &Shared, rng: &mut ChaCha8Rng) -> String {
    let p = shared.config.substitution_rate;
    if p <= 0.0 {
        return text.to_string();
    }
    text.chars()
        .map(|c| {
            if !rng.random_bool(p) {
                return c;
            }
            match shared.confusions.get(&c) {
                Some(alts) if rng.random_bool(0.8) => alts[rng.random_range(0..alts.len())],
                _ if c.is_ascii_digit() => {
                    let d = c as u8 - b'0';
                    (b'0' + (d + rng.random_range(1..10)) % 10) as char
                }
                _ => c,
            }
        })
        .collect()
}

pub struct MockOcr {
    shared: Arc<Shared>,
    pending: Pending,
    rng: Option<ChaCha8Rng>,
}

impl OcrBackend for MockOcr {
    fn begin(&mut self, source_id: &str) -> Result<(), BackendError> {
        self.shared.lookup(source_id)?;
        self.rng = Some(self.shared.rng(source_id, 0x006f_6372));
        Ok(())
    }

    fn recognize(&mut self, _crop: &ImageBuffer) -> Result<Option<(String, f64)>, BackendError> {
        let rng = self
            .rng
            .as_mut()
            .ok_or_else(|| BackendError::UnknownImageId("<none selected>".into()))?;
        let next = self
            .pending
            .lock()
            .expect("mock queue poisoned")
            .pop_front();
        Ok(next.map(|t| {
            let conf = self
                .shared
                .confidence(rng, self.shared.config.ocr_confidence);
            (t, conf)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::VitalLabel;
    use crate::synthscreen::GroundTruthField;

    fn fixture() -> GroundTruthManifest {
        let field = |label, text: &str, b: [u32; 4]| GroundTruthField {
            label,
            value: text.to_string(),
            text: text.to_string(),
            bbox: BoundingBox::try_from(b).unwrap(),
            in_range: true,
        };
        GroundTruthManifest {
            seed: 0,
            images: vec![
                GroundTruthImage {
                    id: "a".into(),
                    file: "a.png".into(),
                    width: 100,
                    height: 80,
                    layout: Some(0),
                    screen: Some(ScreenQuad::rect(10.0, 10.0, 89.0, 69.0).unwrap()),
                    homography: None,
                    distortion: None,
                    fields: vec![
                        field(VitalLabel::Hr, "72", [1, 1, 20, 10]),
                        field(VitalLabel::Spo2, "98", [30, 1, 50, 10]),
                    ],
                },
                GroundTruthImage {
                    id: "empty".into(),
                    file: "empty.png".into(),
                    width: 100,
                    height: 80,
                    layout: None,
                    screen: None,
                    homography: None,
                    distortion: None,
                    fields: vec![],
                },
            ],
        }
    }

    #[test]
    fn replays_truth() {
        let f = MockFixture::new(fixture(), MockConfig::default());
        let img = ImageBuffer::black(100, 80);
        let (mut seg, mut det, mut ocr) = (f.segmentation(), f.detection(), f.recognition());
        seg.begin("a").unwrap();
        det.begin("a").unwrap();
        ocr.begin("a").unwrap();
        let (mask, conf) = seg.segment(&img, 0.8).unwrap().unwrap();
        assert_eq!(conf, 0.95);
        assert_eq!(
            mask,
            ScreenQuad::rect(10.0, 10.0, 89.0, 69.0)
                .unwrap()
                .rasterize(100, 80)
        );
        let dets = det.detect(&ImageBuffer::black(640, 480), 0.8).unwrap();
        assert_eq!(dets.len(), 2);
        assert_eq!(ocr.recognize(&img).unwrap().unwrap().0, "72");
        assert_eq!(ocr.recognize(&img).unwrap().unwrap().0, "98");
        assert_eq!(ocr.recognize(&img).unwrap(), None);
    }

    #[test]
    fn absent_monitor_and_unknown_id() {
        let f = MockFixture::new(fixture(), MockConfig::default());
        let mut seg = f.segmentation();
        seg.begin("empty").unwrap();
        assert_eq!(
            seg.segment(&ImageBuffer::black(100, 80), 0.8).unwrap(),
            None
        );
        assert_eq!(
            seg.begin("zzz"),
            Err(BackendError::UnknownImageId("zzz".into()))
        );
    }

    #[test]
    fn tau_filters_detections() {
        let f = MockFixture::new(fixture(), MockConfig::default());
        let mut det = f.detection();
        det.begin("a").unwrap();
        assert!(det
            .detect(&ImageBuffer::black(640, 480), 0.95)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn noise_is_seeded() {
        let config = MockConfig {
            corner_jitter: 2.0,
            substitution_rate: 0.5,
            confidence_spread: 0.05,
            seed: 11,
            ..Default::default()
        };
        let run = || {
            let f = MockFixture::new(fixture(), config);
            let mut b = f.backends();
            b.begin("a").unwrap();
            let img = ImageBuffer::black(100, 80);
            let mask = b.seg.segment(&img, 0.5).unwrap();
            let dets = b.det.detect(&ImageBuffer::black(640, 480), 0.5).unwrap();
            let texts: Vec<_> = dets
                .iter()
                .map(|_| b.ocr.recognize(&img).unwrap())
                .collect();
            (mask, dets, texts)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn substitutions_prefer_repairable_lookalikes() {
        let f = MockFixture::new(
            fixture(),
            MockConfig {
                substitution_rate: 1.0,
                ..Default::default()
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lookalike = 0;
        for _ in 0..200 {
            let s = corrupt("0", &f.shared, &mut rng);
            assert_ne!(s, "0");
            if ["O", "o", "Q"].contains(&s.as_str()) {
                lookalike += 1;
            }
        }
        assert!((130..=190).contains(&lookalike), "{lookalike}");
    }
}
