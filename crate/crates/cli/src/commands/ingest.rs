use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Duration;

use super::pipeline_config;
use crate::backend::Factory;
use crate::commands::extract::process;
use crate::io::{append_line, list_images, read_lines};
use crate::{CliError, IngestArgs};

fn file_name(p: &std::path::Path) -> String {
    p.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

pub fn run(args: IngestArgs) -> Result<(), CliError> {
    if !args.watch_dir.is_dir() {
        return Err(CliError::io(&args.watch_dir, "not a directory"));
    }
    let cfg = pipeline_config(&args.pipeline)?;
    let factory = Factory::new(&args.backend, &args.watch_dir, cfg.rectify)?;
    let mut backends = factory.make()?;
    let processed_path = args.processed.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".processed");
        PathBuf::from(p)
    });
    let mut processed: BTreeSet<String> = if processed_path.exists() {
        read_lines(&processed_path)?.into_iter().collect()
    } else {
        BTreeSet::new()
    };
    // Size seen at the previous poll; a file is taken once it stops growing.
    let mut sizes: HashMap<PathBuf, u64> = HashMap::new();

    loop {
        for path in list_images(&args.watch_dir)? {
            let name = file_name(&path);
            if processed.contains(&name) {
                continue;
            }
            let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
            let stable = sizes.insert(path.clone(), size) == Some(size);
            if !args.once && !stable {
                continue;
            }
            match process(&path, &cfg, &mut backends, args.redact_timings) {
                Ok((line, _)) => append_line(&args.out, &line)?,
                Err(e) => eprintln!("vitalscan: skipping {}: {e}", path.display()),
            }
            append_line(&processed_path, &name)?;
            processed.insert(name);
            sizes.remove(&path);
        }
        if args.once {
            return Ok(());
        }
        std::thread::sleep(Duration::from_millis(args.poll_ms));
    }
}
