use vitalscan_core::backends::{AtlasError, GlyphAtlas};
use vitalscan_core::synthscreen::{generate_corpus, CorpusOptions, SynthError};

use crate::backend::load_atlas;
use crate::{AtlasArgs, CliError, SynthArgs};

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    if !(args.max_noise >= 0.0 && args.max_noise.is_finite()) {
        return Err(CliError::BadArgs(format!(
            "--max-noise must be non-negative, got {}",
            args.max_noise
        )));
    }
    let atlas = load_atlas(args.atlas.as_deref())?;
    let opts = CorpusOptions {
        count: args.count,
        absent: args.absent,
        seed: args.seed,
        max_noise_sigma: args.max_noise,
        ..CorpusOptions::default()
    };
    let manifest = generate_corpus(&opts, &atlas, &args.out).map_err(|e| match e {
        SynthError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::BadArgs(other.to_string()),
    })?;
    eprintln!(
        "wrote {} images to {}",
        manifest.images.len(),
        args.out.display()
    );
    Ok(())
}

pub fn atlas(args: AtlasArgs) -> Result<(), CliError> {
    GlyphAtlas::builtin().save(&args.out).map_err(|e| match e {
        AtlasError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::BadArgs(other.to_string()),
    })
}
