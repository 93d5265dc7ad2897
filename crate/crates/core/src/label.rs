use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label {0:?}")]
pub struct UnknownLabel(pub String);

/// The eight numeric readouts the ROI detector localizes.
///
/// `Ord` follows the fixed reporting order (cardiac, blood pressure, other),
/// which is also the key order of serialized results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VitalLabel {
    Hr,
    Pr,
    Spo2,
    Sys,
    Dia,
    Map,
    Rr,
    Temp,
}

impl VitalLabel {
    pub const ALL: [VitalLabel; 8] = [
        VitalLabel::Hr,
        VitalLabel::Pr,
        VitalLabel::Spo2,
        VitalLabel::Sys,
        VitalLabel::Dia,
        VitalLabel::Map,
        VitalLabel::Rr,
        VitalLabel::Temp,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            VitalLabel::Hr => "HR",
            VitalLabel::Pr => "PR",
            VitalLabel::Spo2 => "SPO2",
            VitalLabel::Sys => "SYS",
            VitalLabel::Dia => "DIA",
            VitalLabel::Map => "MAP",
            VitalLabel::Rr => "RR",
            VitalLabel::Temp => "TEMP",
        }
    }

    /// Position in [`VitalLabel::ALL`]; used as the class index by detectors.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for VitalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VitalLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label_parse(s)? {
            ClassLabel::Vital(v) => Ok(v),
            ClassLabel::Screen => Err(UnknownLabel(s.to_string())),
        }
    }
}

impl Serialize for VitalLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for VitalLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every class any model in the pipeline can emit. The screen class belongs
/// to the segmentation stage only and never appears among ROI detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Screen,
    Vital(VitalLabel),
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Screen => f.write_str("SCREEN"),
            ClassLabel::Vital(v) => v.fmt(f),
        }
    }
}

/// Case-insensitive parse over the nine class names.
pub fn label_parse(text: &str) -> Result<ClassLabel, UnknownLabel> {
    let upper = text.trim().to_ascii_uppercase();
    if upper == "SCREEN" {
        return Ok(ClassLabel::Screen);
    }
    VitalLabel::ALL
        .iter()
        .find(|l| l.as_str() == upper)
        .map(|&l| ClassLabel::Vital(l))
        .ok_or_else(|| UnknownLabel(text.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        assert_eq!(label_parse("SpO2"), Ok(ClassLabel::Vital(VitalLabel::Spo2)));
        assert_eq!(label_parse("hr"), Ok(ClassLabel::Vital(VitalLabel::Hr)));
        assert_eq!(label_parse("Screen"), Ok(ClassLabel::Screen));
        assert_eq!(label_parse("ECG"), Err(UnknownLabel("ECG".into())));
        assert!("SCREEN".parse::<VitalLabel>().is_err());
    }

    #[test]
    fn format_parse_round_trip() {
        for l in VitalLabel::ALL {
            assert_eq!(l.to_string().parse::<VitalLabel>().unwrap(), l);
            assert_eq!(VitalLabel::from_index(l.index()), Some(l));
        }
        assert_eq!(
            label_parse(&ClassLabel::Screen.to_string()),
            Ok(ClassLabel::Screen)
        );
    }

    proptest! {
        #[test]
        fn parse_is_case_insensitive(idx in 0usize..8, mask in proptest::collection::vec(any::<bool>(), 4)) {
            let l = VitalLabel::ALL[idx];
            let mixed: String = l
                .as_str()
                .chars()
                .zip(mask.iter().cycle())
                .map(|(c, &up)| if up { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
                .collect();
            prop_assert_eq!(mixed.parse::<VitalLabel>().unwrap(), l);
        }
    }
}
