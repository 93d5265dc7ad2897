use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::label::VitalLabel;

const DEFAULT_CONFIG: &str = include_str!("default_digitizer.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed digitizer config: {0}")]
    Parse(String),
    #[error("correction {key:?} -> {value:?}: keys must be one non-digit character, values one of 0-9 or '.'")]
    InvalidCorrection { key: String, value: String },
    #[error("gate for {label}: {reason}")]
    InvalidGate { label: String, reason: String },
    #[error("min_score must lie in [0, 1], got {0}")]
    InvalidMinScore(f64),
}

/// Confusable character -> digit (or decimal point).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionTable {
    map: BTreeMap<char, char>,
}

impl CorrectionTable {
    pub fn new(map: BTreeMap<char, char>) -> Result<Self, ConfigError> {
        for (&k, &v) in &map {
            // Keys that are themselves outputs would make correction order-dependent.
            if !(v.is_ascii_digit() || v == '.') || k.is_ascii_digit() || k == '.' {
                return Err(ConfigError::InvalidCorrection {
                    key: k.to_string(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, c: char) -> Option<char> {
        self.map.get(&c).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
}

impl Default for CorrectionTable {
    fn default() -> Self {
        DigitizerConfig::default().corrections
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Integer,
    OneDecimal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateBounds {
    pub min: f64,
    pub max: f64,
    pub kind: ValueKind,
    #[serde(default)]
    pub unit: String,
}

impl GateBounds {
    /// Inclusive on both ends.
    pub fn admits(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

/// Plausibility bounds for every label.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGate {
    bounds: [GateBounds; 8],
}

impl RangeGate {
    pub fn bounds(&self, label: VitalLabel) -> &GateBounds {
        &self.bounds[label.index()]
    }

    pub fn set(&mut self, label: VitalLabel, bounds: GateBounds) -> Result<(), ConfigError> {
        check_bounds(label.as_str(), &bounds)?;
        self.bounds[label.index()] = bounds;
        Ok(())
    }
}

impl Default for RangeGate {
    fn default() -> Self {
        DigitizerConfig::default().gates
    }
}

fn check_bounds(label: &str, b: &GateBounds) -> Result<(), ConfigError> {
    if !(b.min.is_finite() && b.max.is_finite() && b.min < b.max) {
        return Err(ConfigError::InvalidGate {
            label: label.to_string(),
            reason: format!("need finite min < max, got [{}, {}]", b.min, b.max),
        });
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    min_score: Option<f64>,
    corrections: Option<BTreeMap<String, String>>,
    #[serde(default)]
    gates: BTreeMap<String, GateBounds>,
}

/// Digitizer settings as loaded from TOML.
///
/// A user file is layered over the embedded defaults: `min_score` and
/// individual `[gates.LABEL]` tables override their defaults, while a
/// `[corrections]` table, when present, replaces the default table whole.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitizerConfig {
    pub min_score: f64,
    pub corrections: CorrectionTable,
    pub gates: RangeGate,
}

impl Default for DigitizerConfig {
    fn default() -> Self {
        let raw: RawConfig = toml::from_str(DEFAULT_CONFIG).expect("embedded config parses");
        let corrections = parse_corrections(raw.corrections.unwrap_or_default())
            .expect("embedded corrections are valid");
        let mut slots: Vec<Option<GateBounds>> = vec![None; 8];
        for (name, b) in raw.gates {
            let label: VitalLabel = name.parse().expect("embedded gate labels are valid");
            slots[label.index()] = Some(b);
        }
        let bounds: [GateBounds; 8] = slots
            .into_iter()
            .map(|b| b.expect("embedded config covers every label"))
            .collect::<Vec<_>>()
            .try_into()
            .expect("eight labels");
        Self {
            min_score: raw.min_score.expect("embedded min_score"),
            corrections,
            gates: RangeGate { bounds },
        }
    }
}

fn parse_corrections(raw: BTreeMap<String, String>) -> Result<CorrectionTable, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, v) in raw {
        let (mut kc, mut vc) = (k.chars(), v.chars());
        match (kc.next(), kc.next(), vc.next(), vc.next()) {
            (Some(key), None, Some(value), None) => {
                map.insert(key, value);
            }
            _ => return Err(ConfigError::InvalidCorrection { key: k, value: v }),
        }
    }
    CorrectionTable::new(map)
}

impl DigitizerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut cfg = Self::default();
        if let Some(s) = raw.min_score {
            if !(0.0..=1.0).contains(&s) {
                return Err(ConfigError::InvalidMinScore(s));
            }
            cfg.min_score = s;
        }
        if let Some(c) = raw.corrections {
            cfg.corrections = parse_corrections(c)?;
        }
        for (name, bounds) in raw.gates {
            let label: VitalLabel = name.parse().map_err(|_| ConfigError::InvalidGate {
                label: name.clone(),
                reason: "unknown label".into(),
            })?;
            cfg.gates.set(label, bounds)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
