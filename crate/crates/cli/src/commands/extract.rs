use std::path::PathBuf;

use vitalscan_core::pipeline::{run_traced, PipelineConfig};
use vitalscan_core::ImageBuffer;

use super::{pipeline_config, stage_error};
use crate::backend::Factory;
use crate::io::{image_dir, list_images, sink, source_id, write_all, DetectionLine};
use crate::{CliError, ExtractArgs};

/// Result and detection JSON lines for one image.
pub(crate) fn process(
    path: &PathBuf,
    cfg: &PipelineConfig,
    backends: &mut vitalscan_core::backends::Backends,
    redact: bool,
) -> Result<(String, String), CliError> {
    let img = ImageBuffer::load(path).map_err(|e| CliError::io(path, e))?;
    let id = source_id(path);
    let (result, dets) = run_traced(&img, &id, cfg, backends).map_err(|e| stage_error(&id, e))?;
    let result = if redact {
        result.without_timings()
    } else {
        result
    };
    let det_line =
        serde_json::to_string(&DetectionLine::new(&id, &dets)).expect("detections serialize");
    Ok((result.to_json(), det_line))
}

pub fn run(args: ExtractArgs) -> Result<(), CliError> {
    if args.jobs == 0 {
        return Err(CliError::BadArgs("--jobs must be at least 1".into()));
    }
    let cfg = pipeline_config(&args.pipeline)?;
    let paths = list_images(&args.input)?;
    let factory = Factory::new(&args.backend, &image_dir(&args.input), cfg.rectify)?;

    let jobs = args.jobs.min(paths.len().max(1));
    let chunk = paths.len().div_ceil(jobs).max(1);
    let outcomes: Vec<Result<(String, String), CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .chunks(chunk)
            .map(|part| {
                let (factory, cfg) = (&factory, &cfg);
                s.spawn(move || -> Vec<Result<(String, String), CliError>> {
                    let mut backends = match factory.make() {
                        Ok(b) => b,
                        Err(e) => {
                            return part
                                .iter()
                                .map(|_| Err(CliError::Backend(e.to_string())))
                                .collect()
                        }
                    };
                    part.iter()
                        .map(|p| process(p, cfg, &mut backends, args.redact_timings))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("extract worker panicked"))
            .collect()
    });

    let mut results = String::new();
    let mut detections = String::new();
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok((r, d)) => {
                results.push_str(&r);
                results.push('\n');
                detections.push_str(&d);
                detections.push('\n');
            }
            Err(e) => {
                eprintln!("vitalscan: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    let mut out = sink(args.out.as_deref())?;
    write_all(&mut *out, &results, args.out.as_deref())?;
    if let Some(p) = &args.detections {
        let mut d = sink(Some(p))?;
        write_all(&mut *d, &detections, Some(p))?;
    }
    first_error.map_or(Ok(()), Err)
}
