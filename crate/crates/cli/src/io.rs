use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vitalscan_core::{BoundingBox, Detection, VitalLabel};

use crate::CliError;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// `path` itself if it is a file, else the images directly inside it,
/// sorted by name.
pub fn list_images(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let meta = std::fs::metadata(path).map_err(|e| CliError::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| CliError::io(path, e))? {
        let p = entry.map_err(|e| CliError::io(path, e))?.path();
        if p.is_file() && is_image(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// The file stem, which corpus manifests use as the image id.
pub fn source_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Directory that holds `input`, or `input` itself if it is a directory.
pub fn image_dir(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.to_path_buf()
    } else {
        input
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    }
}

/// Stdout, or a file created (truncated) at the given path.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
    })
}

pub fn write_all(out: &mut dyn Write, text: &str, path: Option<&Path>) -> Result<(), CliError> {
    let name = path.unwrap_or(Path::new("<stdout>"));
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(name, e))
}

/// Appends `line` and a newline with a single write, then syncs.
pub fn append_line(path: &Path, line: &str) -> Result<(), CliError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    f.write_all(&buf)
        .and_then(|_| f.sync_data())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub bbox: BoundingBox,
    pub conf: f64,
    pub label: VitalLabel,
}

/// One line of `extract --detections` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionLine {
    pub detections: Vec<DetectionRecord>,
    pub source_id: String,
}

impl DetectionLine {
    pub fn new(source_id: &str, dets: &[Detection]) -> Self {
        Self {
            detections: dets
                .iter()
                .map(|d| DetectionRecord {
                    bbox: d.bbox,
                    conf: d.confidence,
                    label: d.label,
                })
                .collect(),
            source_id: source_id.to_string(),
        }
    }

    pub fn to_detections(&self) -> Vec<Detection> {
        self.detections
            .iter()
            .map(|d| Detection {
                label: d.label,
                bbox: d.bbox,
                confidence: d.conf,
            })
            .collect()
    }
}
