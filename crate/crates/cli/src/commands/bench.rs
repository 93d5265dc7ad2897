use serde::Serialize;
use vitalscan_core::bench::{bench, BenchError, BenchOptions, BenchOutcome};
use vitalscan_core::evalkit::{
    field_accuracy, predictions_from_results, truth_from_manifest, FieldAccuracyReport, Table,
};
use vitalscan_core::ImageBuffer;

use super::{emit, pipeline_config};
use crate::backend::Factory;
use crate::io::{image_dir, list_images, source_id};
use crate::{BenchArgs, CliError};

#[derive(Serialize)]
struct BenchReport<'a> {
    #[serde(flatten)]
    outcome: &'a BenchOutcome,
    /// Field accuracy of the first measured run, when ground truth is known.
    field_accuracy: Option<FieldAccuracyReport>,
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    if args.repeat == 0 {
        return Err(CliError::BadArgs("--repeat must be at least 1".into()));
    }
    let cfg = pipeline_config(&args.pipeline)?;
    let paths = list_images(&args.input)?;
    let factory = Factory::new(&args.backend, &image_dir(&args.input), cfg.rectify)?;
    let mut images = Vec::with_capacity(paths.len());
    for p in &paths {
        images.push((
            source_id(p),
            ImageBuffer::load(p).map_err(|e| CliError::io(p, e))?,
        ));
    }
    let opts = BenchOptions {
        repeat: args.repeat,
        warmup: args.warmup,
    };
    let outcome = bench(&images, &cfg, &mut factory.make()?, opts).map_err(|e| match e {
        BenchError::ZeroRepeat | BenchError::EmptyCorpus => CliError::BadArgs(e.to_string()),
        BenchError::Run { .. } => CliError::Backend(e.to_string()),
    })?;
    let accuracy = factory.ground_truth().map(|gt| {
        field_accuracy(
            &predictions_from_results(&outcome.results),
            &truth_from_manifest(gt),
            &cfg.digitizer,
        )
    });

    let mut summary = Table::new(["Setting", "Value"]);
    summary.push(["tau".to_string(), outcome.tau.to_string()]);
    summary.push(["images".to_string(), outcome.images.to_string()]);
    summary.push(["repeat".to_string(), outcome.repeat.to_string()]);
    summary.push(["warmup".to_string(), outcome.warmup.to_string()]);
    summary.push(["records".to_string(), outcome.records.to_string()]);
    let mut tables = vec![summary, outcome.report.table()];
    if let Some(a) = &accuracy {
        tables.push(a.table());
    }
    let report = BenchReport {
        outcome: &outcome,
        field_accuracy: accuracy,
    };
    emit(args.format, &tables, &report, args.out.as_deref())
}
