//! Repeated timed pipeline runs aggregated into a latency report.

use serde::Serialize;
use thiserror::Error;

use crate::backends::Backends;
use crate::evalkit::{latency_aggregate, LatencyReport, LatencySample};
use crate::image::ImageBuffer;
use crate::pipeline::{run, PipelineConfig, StageError};
use crate::result::ExtractionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Measured runs per image.
    pub repeat: usize,
    /// Discarded runs before measuring, cycling over the images.
    pub warmup: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repeat: 3,
            warmup: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("repeat must be at least 1")]
    ZeroRepeat,
    #[error("no images to benchmark")]
    EmptyCorpus,
    #[error("{id}: {source}")]
    Run { id: String, source: StageError },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchOutcome {
    pub tau: f64,
    pub images: usize,
    pub repeat: usize,
    pub warmup: usize,
    /// Vital records reported across the first measured run of each image.
    pub records: usize,
    pub report: LatencyReport,
    #[serde(skip)]
    pub results: Vec<ExtractionResult>,
}

/// A run succeeds when it locates the screen and reports at least one
/// reading; its confidence is the mean confidence of those readings.
pub fn sample_of(result: &ExtractionResult) -> LatencySample {
    let confs: Vec<f64> = result
        .vitals
        .values()
        .flatten()
        .map(|r| r.confidence)
        .collect();
    LatencySample {
        timings: result.timings,
        confidence: (!confs.is_empty()).then(|| confs.iter().sum::<f64>() / confs.len() as f64),
        success: result.screen.is_some() && !confs.is_empty(),
    }
}

pub fn bench(
    images: &[(String, ImageBuffer)],
    cfg: &PipelineConfig,
    backends: &mut Backends,
    opts: BenchOptions,
) -> Result<BenchOutcome, BenchError> {
    if opts.repeat == 0 {
        return Err(BenchError::ZeroRepeat);
    }
    if images.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let once = |backends: &mut Backends, (id, img): &(String, ImageBuffer)| {
        run(img, id, cfg, backends).map_err(|source| BenchError::Run {
            id: id.clone(),
            source,
        })
    };
    for item in images.iter().cycle().take(opts.warmup) {
        once(backends, item)?;
    }
    let mut samples = Vec::with_capacity(images.len() * opts.repeat);
    let mut results = Vec::with_capacity(images.len());
    for item in images {
        for k in 0..opts.repeat {
            let r = once(backends, item)?;
            samples.push(sample_of(&r));
            if k == 0 {
                results.push(r);
            }
        }
    }
    let report = latency_aggregate(&samples).expect("at least one sample");
    Ok(BenchOutcome {
        tau: cfg.tau,
        images: images.len(),
        repeat: opts.repeat,
        warmup: opts.warmup,
        records: results.iter().map(|r| r.record_count()).sum(),
        report,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{GlyphAtlas, MockConfig, MockFixture};
    use crate::synthscreen::{synthesize_all, CorpusOptions, GroundTruthManifest};

    fn corpus() -> (Vec<(String, ImageBuffer)>, MockFixture) {
        let opts = CorpusOptions {
            count: 6,
            absent: 1,
            seed: 5,
            ..CorpusOptions::default()
        };
        let all = synthesize_all(&opts, &GlyphAtlas::builtin()).unwrap();
        let manifest = GroundTruthManifest {
            seed: 5,
            images: all.iter().map(|s| s.truth.clone()).collect(),
        };
        let images = all.into_iter().map(|s| (s.truth.id, s.image)).collect();
        (images, MockFixture::new(manifest, MockConfig::default()))
    }

    #[test]
    fn report_rows_follow_ledger() {
        let (images, fixture) = corpus();
        let out = bench(
            &images,
            &PipelineConfig::default(),
            &mut fixture.backends(),
            BenchOptions::default(),
        )
        .unwrap();
        assert_eq!(out.report.samples, 7 * 3);
        assert!((out.report.success_rate - 6.0 / 7.0).abs() < 1e-12);
        assert!(out.report.mean.is_consistent());
        for row in &out.report.rows {
            if let Some(fps) = row.fps {
                assert!((fps * row.mean_ms - 1000.0).abs() < 1e-9);
            }
        }
        assert_eq!(out.results.len(), 7);
    }

    #[test]
    fn rejects_bad_options() {
        let (images, fixture) = corpus();
        let zero = BenchOptions {
            repeat: 0,
            warmup: 0,
        };
        let cfg = PipelineConfig::default();
        assert_eq!(
            bench(&images, &cfg, &mut fixture.backends(), zero),
            Err(BenchError::ZeroRepeat)
        );
        let none = bench(&[], &cfg, &mut fixture.backends(), BenchOptions::default());
        assert_eq!(none, Err(BenchError::EmptyCorpus));
    }
}
