//! Train/validation/test dataset assembly and the on-disk manifest.
//!
//! The manifest is a TOML file listing the domain, the optional
//! derived-definition side file, and one entry per instance with its split
//! and state-space size.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SpaceError;

/// Training instances above this many transitions are excluded.
pub const DEFAULT_MAX_TRAIN_TRANSITIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// Expansion statistics for one candidate instance. `test_only` marks
/// instances that skip expansion and are always assigned to the test split.
#[derive(Debug, Clone)]
pub struct InstanceSummary {
    pub path: String,
    pub states: usize,
    pub transitions: usize,
    pub test_only: bool,
}

/// How to split instances, after sorting by ascending state count.
#[derive(Debug, Clone, Copy)]
pub enum SplitRule {
    /// First `train` instances to train, next `validation` to validation,
    /// rest to test.
    Counts { train: usize, validation: usize },
    /// Fractions of the expandable instances (rounded down, but at least one
    /// training instance when any instance exists).
    Fractions { train: f64, validation: f64 },
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule::Fractions { train: 0.5, validation: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub split: Split,
    pub states: usize,
    pub transitions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<String>,
    pub max_train_transitions: usize,
    #[serde(rename = "instance")]
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<(), SpaceError> {
        let text = toml::to_string_pretty(self).map_err(|e| SpaceError::Manifest(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SpaceError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| SpaceError::Manifest(e.to_string()))
    }

    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Assigns instances to splits by ascending state-space size under the given
/// rule. Training instances above the transition cap are excluded with a
/// warning; an empty training split is an error.
pub fn build_dataset(
    domain_path: &str,
    derived_path: Option<&str>,
    summaries: &[InstanceSummary],
    rule: SplitRule,
    max_train_transitions: usize,
) -> Result<DatasetManifest, SpaceError> {
    if summaries.is_empty() {
        return Err(SpaceError::EmptyTrainingSplit);
    }
    let mut expandable: Vec<&InstanceSummary> = summaries.iter().filter(|s| !s.test_only).collect();
    expandable.sort_by(|a, b| (a.states, a.path.as_str()).cmp(&(b.states, b.path.as_str())));

    let (train_count, validation_count) = match rule {
        SplitRule::Counts { train, validation } => (train, validation),
        SplitRule::Fractions { train, validation } => {
            let n = expandable.len() as f64;
            let t = ((n * train) as usize).max(1);
            let v = (n * validation) as usize;
            (t, v)
        }
    };

    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (i, s) in expandable.iter().enumerate() {
        let split = if i < train_count {
            Split::Train
        } else if i < train_count + validation_count {
            Split::Validation
        } else {
            Split::Test
        };
        if split == Split::Train && s.transitions > max_train_transitions {
            log::warn!(
                "excluding training instance {} ({} transitions over the {} cap)",
                s.path,
                s.transitions,
                max_train_transitions
            );
            continue;
        }
        entries.push(ManifestEntry {
            path: s.path.clone(),
            split,
            states: s.states,
            transitions: s.transitions,
        });
    }
    for s in summaries.iter().filter(|s| s.test_only) {
        entries.push(ManifestEntry { path: s.path.clone(), split: Split::Test, states: 0, transitions: 0 });
    }

    if !entries.iter().any(|e| e.split == Split::Train) {
        return Err(SpaceError::EmptyTrainingSplit);
    }
    Ok(DatasetManifest {
        domain: domain_path.to_string(),
        derived: derived_path.map(str::to_string),
        max_train_transitions,
        entries,
    })
}
