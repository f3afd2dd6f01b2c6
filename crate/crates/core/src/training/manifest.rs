//! JSON-lines training manifest: one line per word, pointing at a record
//! of an alignment file and of a feature file.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::TrainingExample;
use crate::error::{Error, Result};
use crate::lexicon::{read_alignment_file, Source, WordAlignment};
use crate::prosody::{read_feature_file, FeatureRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Alignment file, relative paths resolved against the manifest's directory.
    pub alignments: PathBuf,
    pub features: PathBuf,
    /// Zero-based record index within both files.
    pub record: usize,
    pub source: Source,
    pub split: Split,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let inner = || -> Result<Vec<ManifestEntry>> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| Error::record(i, e))?);
        }
        Ok(entries)
    };
    inner().map_err(|e| e.in_file(path))
}

pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.in_file(path))
}

/// Load every manifest entry as a training example, tagged with its split.
pub fn load_examples(manifest: impl AsRef<Path>) -> Result<Vec<(Split, TrainingExample)>> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(manifest)?;
    let mut alignments: HashMap<PathBuf, Vec<WordAlignment>> = HashMap::new();
    let mut features: HashMap<PathBuf, Vec<FeatureRecord>> = HashMap::new();
    let mut out = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let wrap = |e: Error| Error::record(i, e).in_file(manifest);
        let apath = base.join(&entry.alignments);
        let fpath = base.join(&entry.features);
        if !alignments.contains_key(&apath) {
            alignments.insert(apath.clone(), read_alignment_file(&apath)?);
        }
        if !features.contains_key(&fpath) {
            features.insert(fpath.clone(), read_feature_file(&fpath)?);
        }
        let word = alignments[&apath].get(entry.record).ok_or_else(|| {
            wrap(Error::Corpus(format!(
                "{} has no record {}",
                apath.display(),
                entry.record
            )))
        })?;
        let feat = features[&fpath].get(entry.record).ok_or_else(|| {
            wrap(Error::Corpus(format!(
                "{} has no record {}",
                fpath.display(),
                entry.record
            )))
        })?;
        if feat.word != word.word || feat.speaker_id != word.speaker_id {
            return Err(wrap(Error::Corpus(format!(
                "feature record ({}, {}) does not match alignment ({}, {})",
                feat.word, feat.speaker_id, word.word, word.speaker_id
            ))));
        }
        let mut word = word.clone();
        word.source = entry.source;
        let example = TrainingExample::new(word, feat.features()).map_err(wrap)?;
        out.push((entry.split, example));
    }
    Ok(out)
}
