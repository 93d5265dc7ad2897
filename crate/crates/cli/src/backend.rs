use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use vitalscan_core::backends::interchange::interchange_backend;
use vitalscan_core::backends::{
    AtlasError, Backends, DetectionFrame, GlyphAtlas, MockConfig, MockFixture, ModelManifest,
};
use vitalscan_core::synthscreen::{GroundTruthManifest, SynthError};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Replay a corpus manifest.
    Mock,
    /// Replayed localization and detection, template-matching OCR.
    Template,
    /// Exported ONNX models described by a model manifest.
    Interchange,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Interchange)]
    pub backend: BackendKind,
    /// Model manifest; defaults to $VITALSCAN_MODELS/manifest.toml.
    #[arg(long, value_name = "FILE")]
    pub models: Option<PathBuf>,
    /// Corpus manifest for mock and template; defaults to manifest.json
    /// beside the images.
    #[arg(long, value_name = "FILE")]
    pub fixture: Option<PathBuf>,
    /// Glyph atlas directory for template OCR; the built-in font when omitted.
    #[arg(long, value_name = "DIR")]
    pub atlas: Option<PathBuf>,
    /// Seed for mock noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mock: probability that a recognized digit is substituted.
    #[arg(long, default_value_t = 0.0)]
    pub mock_substitution: f64,
    /// Mock: corner noise standard deviation, px.
    #[arg(long, default_value_t = 0.0)]
    pub mock_jitter: f64,
    /// Mock: confidences drawn from base +- spread.
    #[arg(long, default_value_t = 0.0)]
    pub mock_spread: f64,
}

pub fn load_atlas(dir: Option<&Path>) -> Result<GlyphAtlas, CliError> {
    match dir {
        None => Ok(GlyphAtlas::builtin()),
        Some(d) => GlyphAtlas::load(d).map_err(|e| match e {
            AtlasError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::BadArgs(other.to_string()),
        }),
    }
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruthManifest, CliError> {
    GroundTruthManifest::load(path).map_err(|e| match e {
        SynthError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::BadArgs(format!("{}: {other}", path.display())),
    })
}

/// Builds fresh backend sets; one per worker.
pub enum Factory {
    Mock(MockFixture),
    Template(MockFixture, GlyphAtlas),
    Interchange(ModelManifest),
}

impl Factory {
    /// `image_dir` locates the default fixture.
    pub fn new(args: &BackendArgs, image_dir: &Path, rectify: bool) -> Result<Self, CliError> {
        for (name, v) in [
            ("mock-substitution", args.mock_substitution),
            ("mock-spread", args.mock_spread),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::BadArgs(format!(
                    "--{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !(args.mock_jitter >= 0.0 && args.mock_jitter.is_finite()) {
            return Err(CliError::BadArgs(format!(
                "--mock-jitter must be non-negative, got {}",
                args.mock_jitter
            )));
        }
        let fixture = || -> Result<MockFixture, CliError> {
            let path = args
                .fixture
                .clone()
                .unwrap_or_else(|| image_dir.join("manifest.json"));
            let manifest = load_ground_truth(&path)?;
            Ok(MockFixture::new(
                manifest,
                MockConfig {
                    corner_jitter: args.mock_jitter,
                    confidence_spread: args.mock_spread,
                    substitution_rate: args.mock_substitution,
                    seed: args.seed,
                    frame: if rectify {
                        DetectionFrame::Canonical
                    } else {
                        DetectionFrame::Scene
                    },
                    ..MockConfig::default()
                },
            ))
        };
        Ok(match args.backend {
            BackendKind::Mock => Factory::Mock(fixture()?),
            BackendKind::Template => {
                Factory::Template(fixture()?, load_atlas(args.atlas.as_deref())?)
            }
            BackendKind::Interchange => {
                let path = args
                    .models
                    .clone()
                    .or_else(ModelManifest::default_path)
                    .ok_or_else(|| {
                        CliError::BadArgs(
                            "interchange backend needs --models or VITALSCAN_MODELS".into(),
                        )
                    })?;
                Factory::Interchange(
                    ModelManifest::load(&path).map_err(|e| CliError::Backend(e.to_string()))?,
                )
            }
        })
    }

    pub fn make(&self) -> Result<Backends, CliError> {
        match self {
            Factory::Mock(f) => Ok(f.backends()),
            Factory::Template(f, atlas) => Ok(f.template_backends(atlas)),
            Factory::Interchange(m) => {
                interchange_backend(m).map_err(|e| CliError::Backend(e.to_string()))
            }
        }
    }

    /// Ground truth, when the backend replays one.
    pub fn ground_truth(&self) -> Option<&GroundTruthManifest> {
        match self {
            Factory::Mock(f) | Factory::Template(f, _) => Some(f.manifest()),
            Factory::Interchange(_) => None,
        }
    }
}
