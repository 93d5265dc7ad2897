mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vitalscan_core::digitizer::Digitizer;
use vitalscan_core::evalkit::*;
use vitalscan_core::VitalLabel;

use oracles::*;

const CASES: usize = 1000;

#[test]
fn mask_scores_match_pixel_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..CASES {
        let (w, h) = (rng.random_range(1..=32), rng.random_range(1..=32));
        let (p, g) = (random_mask(&mut rng, w, h), random_mask(&mut rng, w, h));
        let s = mask_scores(&p, &g).unwrap();
        let o = mask_oracle(&p, &g);
        assert_eq!(
            (s.iou, s.dice, s.precision, s.recall),
            (o.iou, o.dice, o.precision, o.recall)
        );
        assert!((s.dice - 2.0 * s.iou / (1.0 + s.iou)).abs() < 1e-12);
    }
}

#[test]
fn detection_scores_match_exhaustive_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels = [VitalLabel::Hr, VitalLabel::Pr];
    for _ in 0..CASES {
        let images = random_instance(&mut rng, &labels, 6);
        let scores = detection_scores(&images, &COCO_THRESHOLDS);
        for row in &scores.classes {
            let label = row.label.unwrap();
            let n_gt = images
                .iter()
                .flat_map(|i| &i.gts)
                .filter(|g| g.label == label)
                .count();
            let tp50 = class_tp_oracle(&images, label, 0.5);
            assert_eq!(row.ap50, ap_oracle(&tp50, n_gt), "{label} {images:?}");
            let aps: Vec<f64> = COCO_THRESHOLDS
                .iter()
                .filter_map(|&t| ap_oracle(&class_tp_oracle(&images, label, t), n_gt))
                .collect();
            let expected = (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64);
            match (row.ap50_95, expected) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
            let hits = tp50.iter().filter(|&&t| t).count();
            assert_eq!(row.recall, (n_gt > 0).then(|| hits as f64 / n_gt as f64));
            assert_eq!(
                row.precision,
                (!tp50.is_empty()).then(|| hits as f64 / tp50.len() as f64)
            );
            for v in [row.precision, row.recall, row.ap50, row.ap50_95]
                .into_iter()
                .flatten()
            {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn confusion_matches_exhaustive_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels = [VitalLabel::Hr, VitalLabel::Pr, VitalLabel::Temp];
    for _ in 0..CASES {
        let images = random_instance(&mut rng, &labels, 5);
        let m = confusion(&images, 0.5);
        assert_eq!(m.counts, confusion_oracle(&images, 0.5));
        let sums = m.column_sums();
        for l in VitalLabel::ALL {
            let n = images
                .iter()
                .flat_map(|i| &i.gts)
                .filter(|g| g.label == l)
                .count() as u64;
            assert_eq!(sums[l.index()], n);
        }
    }
}

#[test]
fn field_accuracy_matches_line_comparator() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = Digitizer::default();
    for _ in 0..CASES {
        let (preds, truth) = random_fields(&mut rng);
        let report = field_accuracy(&preds, &truth, &d);
        let oracle = field_oracle(&preds, &truth);
        for row in &report.labels {
            let (c, t) = oracle.get(&row.label.unwrap()).copied().unwrap_or((0, 0));
            assert_eq!((row.correct, row.total), (c, t), "{:?}", row.label);
        }
        let (c, t) = oracle.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        assert_eq!((report.overall.correct, report.overall.total), (c, t));
    }
}
