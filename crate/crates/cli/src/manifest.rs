//! JSON manifests listing the stems (and optional F0 annotations) of each
//! song section.
//!
//! ```json
//! { "sections": [
//!     { "song": "er", "section": "S",
//!       "stems": ["er/s1.wav", "er/s2.wav"],
//!       "annotations": ["er/s1.csv", "er/s2.csv"] } ] }
//! ```
//!
//! A file holding a single entry object is accepted too. Relative paths are
//! resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use unison_core::Section;

#[derive(Debug, Clone, Deserialize)]
pub struct SectionManifest {
    #[serde(default)]
    pub song: Option<String>,
    pub section: Section,
    pub stems: Vec<PathBuf>,
    #[serde(default)]
    pub annotations: Option<Vec<PathBuf>>,
}

impl SectionManifest {
    pub fn song_id(&self) -> &str {
        self.song.as_deref().unwrap_or("song")
    }

    /// `<song>_<section>`, safe for file names.
    pub fn key(&self) -> String {
        let song: String = self.song_id().chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        format!("{song}_{}", self.section.label())
    }

    fn validate(&self) -> Result<()> {
        if self.stems.is_empty() {
            bail!("{}: no stems listed", self.key());
        }
        if let Some(a) = &self.annotations {
            if a.len() != self.stems.len() {
                bail!("{}: {} annotations for {} stems", self.key(), a.len(), self.stems.len());
            }
        }
        Ok(())
    }

    fn resolve(mut self, base: &Path) -> Self {
        let join = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        self.stems = self.stems.iter().map(join).collect();
        self.annotations = self.annotations.map(|a| a.iter().map(join).collect());
        self
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Many { sections: Vec<SectionManifest> },
    One(SectionManifest),
}

/// Entries of every manifest, sorted by song then section.
pub fn load(paths: &[PathBuf]) -> Result<Vec<SectionManifest>> {
    let mut entries = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let parsed: ManifestFile =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let list = match parsed {
            ManifestFile::Many { sections } => sections,
            ManifestFile::One(entry) => vec![entry],
        };
        for entry in list {
            entry.validate().with_context(|| format!("in manifest {}", path.display()))?;
            entries.push(entry.resolve(base));
        }
    }
    entries.sort_by(|a, b| (a.song_id(), a.section).cmp(&(b.song_id(), b.section)));
    Ok(entries)
}
