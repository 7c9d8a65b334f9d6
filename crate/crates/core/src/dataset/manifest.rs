//! Corpus manifest: JSON Lines index of every persisted patch pair.
//!
//! The first line is a header object (`version`, `seed`, `kind`, counts);
//! every following line is one ordered-pair entry with patch paths relative
//! to the manifest's directory. The format is line-oriented so corpora can
//! be inspected and streamed with ordinary text tools.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, OrderedPair};
use crate::distortion::{DistortionKind, DistortionSpec, LcaDirection};
use crate::imaging::{load_image, Patch, Rect, PATCH_SIZE};
use crate::seeding;

/// Dataset partition an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// Split assignment by source id, 80/10/10.
    ///
    /// Depends only on the id (not the corpus seed), so a source can never
    /// leak across splits between corpus builds.
    pub fn for_source_id(id: &str) -> Split {
        match seeding::stable_hash(&format!("split:{id}")) % 100 {
            0..=79 => Split::Train,
            80..=89 => Split::Val,
            _ => Split::Test,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Val => write!(f, "val"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// Entry totals per split, plus pairs dropped for lack of qualifying ROIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub skipped_pairs: usize,
}

/// First manifest line: build parameters and totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    pub seed: u64,
    pub kind: DistortionKind,
    pub counts: SplitCounts,
}

/// One persisted ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source_id: String,
    pub kind: DistortionKind,
    pub level_a: f64,
    pub level_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<LcaDirection>,
    /// ROI rectangle in source coordinates, `[x, y, w, h]`.
    pub rect: [usize; 4],
    pub patch_a_path: String,
    pub patch_b_path: String,
    pub split: Split,
}

impl ManifestEntry {
    pub fn rect(&self) -> Rect {
        Rect::new(self.rect[0], self.rect[1], self.rect[2], self.rect[3])
    }

    /// Reconstructs the pair's distortion specs from the recorded fields.
    pub fn specs(&self) -> Result<(DistortionSpec, DistortionSpec), DatasetError> {
        let make = |level: f64| match self.kind {
            DistortionKind::Lca => self
                .direction
                .map(|direction| DistortionSpec::Lca {
                    shift: level,
                    direction,
                })
                .ok_or_else(|| {
                    DatasetError::InvalidPair(format!(
                        "LCA entry for {} lacks a direction",
                        self.source_id
                    ))
                }),
            DistortionKind::Moire => Ok(DistortionSpec::Moire { factor: level }),
        };
        Ok((make(self.level_a)?, make(self.level_b)?))
    }
}

/// In-memory manifest: header plus all entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    /// Writes the manifest as JSON Lines (header first).
    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "{}", serde_json::to_string(&self.header).expect("header serializes"))?;
        for entry in &self.entries {
            writeln!(w, "{}", serde_json::to_string(entry).expect("entry serializes"))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a manifest file, reporting the 1-based line of any bad line.
    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header_line) = lines.next().ok_or(DatasetError::ManifestParse {
            line: 1,
            msg: "empty manifest".into(),
        })?;
        let header: ManifestHeader =
            serde_json::from_str(header_line).map_err(|e| DatasetError::ManifestParse {
                line: 1,
                msg: e.to_string(),
            })?;
        if header.version != 1 {
            return Err(DatasetError::ManifestParse {
                line: 1,
                msg: format!("unsupported manifest version {}", header.version),
            });
        }
        let mut entries = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let entry: ManifestEntry =
                serde_json::from_str(line).map_err(|e| DatasetError::ManifestParse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(CorpusManifest { header, entries })
    }

    /// Entries belonging to one split.
    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Loads and validates the patch pairs of one split; `base_dir` is the
    /// directory the manifest's relative paths are resolved against.
    pub fn load_pairs(&self, base_dir: &Path, split: Split) -> Result<Vec<OrderedPair>, DatasetError> {
        let mut pairs = Vec::new();
        for entry in self.entries_for(split) {
            let load_patch = |rel: &str| -> Result<Patch, DatasetError> {
                let img = load_image(&base_dir.join(rel))?;
                if img.width() != PATCH_SIZE || img.height() != PATCH_SIZE {
                    return Err(DatasetError::InvalidPair(format!(
                        "{rel}: {}x{} patch file, expected {PATCH_SIZE}x{PATCH_SIZE}",
                        img.width(),
                        img.height()
                    )));
                }
                Ok(Patch::from_data(img.data().to_vec(), entry.rect())?)
            };
            let patch_a = load_patch(&entry.patch_a_path)?;
            let patch_b = load_patch(&entry.patch_b_path)?;
            let (spec_a, spec_b) = entry.specs()?;
            pairs.push(OrderedPair::new(
                patch_a,
                patch_b,
                spec_a,
                spec_b,
                entry.source_id.clone(),
                entry.rect(),
            )?);
        }
        Ok(pairs)
    }
}
