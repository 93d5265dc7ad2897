mod bench;
mod eval;
mod extract;
mod ingest;
mod synth;

use std::path::Path;

use serde::Serialize;
use vitalscan_core::digitizer::{ConfigError, Digitizer, DigitizerConfig};
use vitalscan_core::evalkit::Table;
use vitalscan_core::pipeline::{PipelineConfig, StageError};

use crate::io::{sink, write_all};
use crate::{CliError, Command, Format, PipelineArgs};

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Extract(a) => extract::run(a),
        Command::Ingest(a) => ingest::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Atlas(a) => synth::atlas(a),
        Command::Eval(a) => eval::run(a),
        Command::Bench(a) => bench::run(a),
    }
}

pub(crate) fn digitizer(gates: Option<&Path>) -> Result<DigitizerConfig, CliError> {
    match gates {
        None => Ok(DigitizerConfig::default()),
        Some(p) => DigitizerConfig::load(p).map_err(|e| match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::BadArgs(format!("{}: {other}", p.display())),
        }),
    }
}

pub(crate) fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig, CliError> {
    let mut dcfg = digitizer(args.gates.as_deref())?;
    if let Some(s) = args.min_score {
        if !(0.0..=1.0).contains(&s) {
            return Err(CliError::BadArgs(format!(
                "--min-score must lie in [0, 1], got {s}"
            )));
        }
        dcfg.min_score = s;
    }
    let cfg = PipelineConfig {
        tau: args.tau,
        digitizer: Digitizer::from(dcfg),
        crop_pad: args.crop_pad,
        rectify: !args.no_rectify,
        ..PipelineConfig::default()
    };
    cfg.validate()
        .map_err(|e| CliError::BadArgs(format!("--tau: {e}")))?;
    Ok(cfg)
}

pub(crate) fn stage_error(id: &str, e: StageError) -> CliError {
    CliError::Backend(format!("{id}: {e}"))
}

/// Writes `tables` (blank-line separated) or `json` in the chosen format.
pub(crate) fn emit(
    format: Format,
    tables: &[Table],
    json: &impl Serialize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Table => tables
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Csv => tables
            .iter()
            .map(|t| t.to_csv())
            .collect::<Vec<_>>()
            .join("\n"),
    };
    let mut w = sink(out)?;
    write_all(&mut *w, &text, out)
}
