use serde::Serialize;
use thiserror::Error;

use super::table::{fixed, Table};
use crate::result::StageTimings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("latency aggregation needs at least one sample")]
pub struct EmptySample;

/// One timed run. `confidence` is the mean confidence of what the run
/// reported, if it reported anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySample {
    pub timings: StageTimings,
    pub confidence: Option<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub stage: String,
    pub mean_ms: f64,
    /// `1000 / mean_ms`; `None` for a stage that took no time.
    pub fps: Option<f64>,
}

impl LatencyRow {
    fn new(stage: &str, mean_ms: f64) -> Self {
        Self {
            stage: stage.to_string(),
            mean_ms,
            fps: (mean_ms > 0.0).then(|| 1000.0 / mean_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub samples: usize,
    /// Mean per-stage timings; their total is the sum of the stage means.
    pub mean: StageTimings,
    /// Segmentation, detection, recognition, overhead, then total.
    pub rows: Vec<LatencyRow>,
    pub success_rate: f64,
    pub avg_confidence: Option<f64>,
}

/// Arithmetic means over `samples`; warmup runs are the caller's to drop.
pub fn latency_aggregate(samples: &[LatencySample]) -> Result<LatencyReport, EmptySample> {
    if samples.is_empty() {
        return Err(EmptySample);
    }
    let n = samples.len() as f64;
    let avg = |f: fn(&StageTimings) -> f64| samples.iter().map(|s| f(&s.timings)).sum::<f64>() / n;
    let mean = StageTimings::from_parts(
        avg(|t| t.seg_ms),
        avg(|t| t.det_ms),
        avg(|t| t.ocr_ms),
        avg(|t| t.overhead_ms),
    );
    let rows = vec![
        LatencyRow::new("segmentation", mean.seg_ms),
        LatencyRow::new("detection", mean.det_ms),
        LatencyRow::new("recognition", mean.ocr_ms),
        LatencyRow::new("overhead", mean.overhead_ms),
        LatencyRow::new("total", mean.total_ms),
    ];
    let confs: Vec<f64> = samples.iter().filter_map(|s| s.confidence).collect();
    Ok(LatencyReport {
        samples: samples.len(),
        mean,
        rows,
        success_rate: samples.iter().filter(|s| s.success).count() as f64 / n,
        avg_confidence: (!confs.is_empty()).then(|| confs.iter().sum::<f64>() / confs.len() as f64),
    })
}

impl LatencyReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Stage", "Latency (ms)", "FPS"]);
        for row in &self.rows {
            t.push([
                row.stage.clone(),
                format!("{:.2}", row.mean_ms),
                fixed(row.fps, 2),
            ]);
        }
        t.push([
            "success (%)".to_string(),
            format!("{:.2}", self.success_rate * 100.0),
            String::new(),
        ]);
        t.push([
            "avg. conf.".to_string(),
            fixed(self.avg_confidence, 4),
            String::new(),
        ]);
        t
    }
}
