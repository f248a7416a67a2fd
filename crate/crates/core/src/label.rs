//! Class labels, classification tasks and auscultation locations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Label attached to a recording or segment.
///
/// The murmur task uses `Present`, `Unknown` and `Absent`; the abnormality
/// task uses `Normal` and `Abnormal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Present,
    Unknown,
    Absent,
    Normal,
    Abnormal,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Present,
        ClassLabel::Unknown,
        ClassLabel::Absent,
        ClassLabel::Normal,
        ClassLabel::Abnormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Present => "Present",
            ClassLabel::Unknown => "Unknown",
            ClassLabel::Absent => "Absent",
            ClassLabel::Normal => "Normal",
            ClassLabel::Abnormal => "Abnormal",
        }
    }

    /// Precedence used to break voting ties; higher wins.
    pub fn severity(self) -> u8 {
        match self {
            ClassLabel::Present | ClassLabel::Abnormal => 2,
            ClassLabel::Unknown => 1,
            ClassLabel::Absent | ClassLabel::Normal => 0,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "present" => Ok(ClassLabel::Present),
            "unknown" => Ok(ClassLabel::Unknown),
            "absent" => Ok(ClassLabel::Absent),
            "normal" | "-1" => Ok(ClassLabel::Normal),
            "abnormal" | "1" => Ok(ClassLabel::Abnormal),
            other => Err(CoreError::UnknownLabel(other.to_string())),
        }
    }
}

/// A classification task fixes the ordered class set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Present / Unknown / Absent.
    Murmur,
    /// Present / Absent, unknown recordings excluded.
    MurmurBinary,
    /// Normal / Abnormal.
    Abnormality,
}

impl Task {
    /// Class order used for confusion matrices and network outputs.
    ///
    /// The murmur order follows the expert/classifier table convention:
    /// Present, Unknown, Absent.
    pub fn classes(self) -> &'static [ClassLabel] {
        match self {
            Task::Murmur => &[ClassLabel::Present, ClassLabel::Unknown, ClassLabel::Absent],
            Task::MurmurBinary => &[ClassLabel::Present, ClassLabel::Absent],
            Task::Abnormality => &[ClassLabel::Normal, ClassLabel::Abnormal],
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    pub fn index_of(self, label: ClassLabel) -> Option<usize> {
        self.classes().iter().position(|&c| c == label)
    }

    pub fn contains(self, label: ClassLabel) -> bool {
        self.index_of(label).is_some()
    }
}

/// Chest position a recording was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Location {
    AV,
    PV,
    TV,
    MV,
    Phc,
    /// Single precordial location of the 2016 recordings.
    Single,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::AV => "AV",
            Location::PV => "PV",
            Location::TV => "TV",
            Location::MV => "MV",
            Location::Phc => "Phc",
            Location::Single => "Single",
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Location {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "AV" => Ok(Location::AV),
            "PV" => Ok(Location::PV),
            "TV" => Ok(Location::TV),
            "MV" => Ok(Location::MV),
            "Phc" | "PhC" => Ok(Location::Phc),
            "Single" => Ok(Location::Single),
            other => Err(CoreError::UnknownLocation(other.to_string())),
        }
    }
}

/// Source dataset of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    #[serde(rename = "PCG2022")]
    Pcg2022,
    #[serde(rename = "PCG2016")]
    Pcg2016,
}

impl DatasetTag {
    pub fn native_rate_hz(self) -> u32 {
        match self {
            DatasetTag::Pcg2022 => 4000,
            DatasetTag::Pcg2016 => 2000,
        }
    }

    pub fn accepts(self, label: ClassLabel) -> bool {
        match self {
            DatasetTag::Pcg2022 => Task::Murmur.contains(label),
            DatasetTag::Pcg2016 => Task::Abnormality.contains(label),
        }
    }
}

/// Human-readable statement of the relabeling rule.
pub const RELABEL_RULE: &str = "only Present -> Unknown and Absent -> Unknown relabels are allowed; \
     Present and Absent never swap and Unknown never becomes Present or Absent";

/// Whether a segment whose original label is `from` may be relabeled to `to`.
///
/// Identity transitions are confirmations, not relabels, and are not covered
/// here.
pub fn relabel_allowed(from: ClassLabel, to: ClassLabel) -> bool {
    matches!(
        (from, to),
        (ClassLabel::Present, ClassLabel::Unknown) | (ClassLabel::Absent, ClassLabel::Unknown)
    )
}
