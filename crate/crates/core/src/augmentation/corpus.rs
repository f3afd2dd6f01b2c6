use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    builtin_entry, builtin_lexicon, synthesize_word, LexiconEntry, SpeakerProfile, StressEffects,
    SynthesisOptions,
};
use crate::error::{Error, Result};
use crate::lexicon::{write_alignment_file, Source, StressPattern};
use crate::prosody::{write_feature_file, FeatureRecord};
use crate::training::{write_manifest, ManifestEntry, Split, TrainingExample};

fn default_jitter() -> f64 {
    0.1
}

fn default_split() -> Split {
    Split::Train
}

/// What to generate: which words, how many speakers and how many errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    /// Prefix of speaker ids and output file names.
    pub name: String,
    /// Words to draw from; empty means the whole bundled lexicon.
    #[serde(default)]
    pub words: Vec<String>,
    pub word_count: usize,
    pub speakers: usize,
    /// Probability that a word is spoken with a wrong stress pattern.
    pub error_rate: f64,
    pub source: Source,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// The first this-many speakers are assigned to the validation split.
    #[serde(default)]
    pub validation_speakers: usize,
    /// The last this-many speakers carry no realized annotation: their
    /// labels fall back to the canonical pattern whatever was spoken.
    #[serde(default)]
    pub lexicon_labeled_speakers: usize,
    #[serde(default = "default_split")]
    pub split: Split,
    #[serde(default)]
    pub effects: StressEffects,
    #[serde(default)]
    pub options: SynthesisOptions,
}

impl CorpusSpec {
    pub fn new(
        name: &str,
        word_count: usize,
        speakers: usize,
        error_rate: f64,
        source: Source,
        seed: u64,
    ) -> Self {
        CorpusSpec {
            name: name.into(),
            words: Vec::new(),
            word_count,
            speakers,
            error_rate,
            source,
            seed,
            jitter: default_jitter(),
            validation_speakers: 0,
            lexicon_labeled_speakers: 0,
            split: Split::Train,
            effects: StressEffects::default(),
            options: SynthesisOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Corpus(format!(
                "corpus name `{}` is not a plain file stem",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::Corpus(format!(
                "error_rate {} outside [0, 1]",
                self.error_rate
            )));
        }
        if self.word_count == 0 {
            return Err(Error::Corpus("word_count must be at least 1".into()));
        }
        if self.speakers == 0 {
            return Err(Error::Corpus("speakers must be at least 1".into()));
        }
        if self.validation_speakers >= self.speakers && self.validation_speakers > 0 {
            return Err(Error::Corpus(format!(
                "validation_speakers {} leaves no training speakers out of {}",
                self.validation_speakers, self.speakers
            )));
        }
        if self.lexicon_labeled_speakers > self.speakers {
            return Err(Error::Corpus(format!(
                "lexicon_labeled_speakers {} exceeds speakers {}",
                self.lexicon_labeled_speakers, self.speakers
            )));
        }
        if !(0.0..=0.3).contains(&self.jitter) {
            return Err(Error::Corpus(format!(
                "jitter {} outside [0, 0.3]",
                self.jitter
            )));
        }
        self.effects.validate()?;
        self.options.validate()
    }

    pub fn entries(&self) -> Result<Vec<LexiconEntry>> {
        if self.words.is_empty() {
            return Ok(builtin_lexicon().to_vec());
        }
        self.words
            .iter()
            .map(|w| {
                builtin_entry(w).cloned().ok_or_else(|| {
                    Error::Corpus(format!("word `{w}` is not in the bundled lexicon"))
                })
            })
            .collect()
    }
}

/// A stress pattern spoken by `speaker`: canonical with probability
/// 1 − `error_rate`, otherwise a different single-stress pattern.
pub fn draw_realized(
    canonical: &StressPattern,
    error_rate: f64,
    rng: &mut impl Rng,
) -> StressPattern {
    let k = canonical.len();
    let primary = canonical.primary().unwrap_or(0);
    if !rng.random_bool(error_rate) || k < 2 {
        return canonical.clone();
    }
    let mut other = rng.random_range(0..k - 1);
    if other >= primary {
        other += 1;
    }
    StressPattern::single(k, other)
}

fn speaker_profile(spec: &CorpusSpec, index: usize, rng: &mut impl Rng) -> SpeakerProfile {
    let base_f0 = if index.is_multiple_of(2) {
        rng.random_range(85.0..150.0)
    } else {
        rng.random_range(160.0..260.0)
    };
    SpeakerProfile {
        id: format!("{}-s{index:03}", spec.name),
        base_f0,
        rate: rng.random_range(0.8..1.25),
        base_intensity: rng.random_range(60.0..75.0),
        jitter: spec.jitter,
    }
}

/// A generated corpus, in generation order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub speakers: Vec<SpeakerProfile>,
    pub examples: Vec<TrainingExample>,
    pub splits: Vec<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    pub split: Split,
    pub speakers: usize,
    pub words: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSummary {
    pub name: String,
    pub rows: Vec<SplitSummary>,
}

impl CorpusSummary {
    pub fn words(&self) -> usize {
        self.rows.iter().map(|r| r.words).sum()
    }

    pub fn errors(&self) -> usize {
        self.rows.iter().map(|r| r.errors).sum()
    }
}

impl fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:>9} {:>9} {:>9}",
            "set", "speakers", "words", "errors"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>9} {:>9} {:>9}",
                format!("{} ({})", self.name, r.split),
                r.speakers,
                r.words,
                r.errors
            )?;
        }
        Ok(())
    }
}

impl Corpus {
    pub fn summary(&self) -> CorpusSummary {
        let mut rows: Vec<SplitSummary> = Vec::new();
        for split in [Split::Train, Split::Validation, Split::Test] {
            let members: Vec<&TrainingExample> = self
                .examples
                .iter()
                .zip(&self.splits)
                .filter(|(_, s)| **s == split)
                .map(|(e, _)| e)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut speakers: Vec<&str> = members.iter().map(|e| e.speaker()).collect();
            speakers.sort_unstable();
            speakers.dedup();
            rows.push(SplitSummary {
                split,
                speakers: speakers.len(),
                words: members.len(),
                errors: members.iter().filter(|e| e.has_error()).count(),
            });
        }
        CorpusSummary {
            name: self.name.clone(),
            rows,
        }
    }

    /// Examples of one split.
    pub fn split(&self, split: Split) -> Vec<TrainingExample> {
        self.examples
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|(e, _)| e.clone())
            .collect()
    }

    pub fn alignments_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.alignments.jsonl", self.name))
    }

    pub fn features_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.features.jsonl", self.name))
    }

    pub fn manifest_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.manifest.jsonl", self.name))
    }

    /// Write alignment, feature and manifest files into `dir`. The manifest
    /// refers to the other two by file name.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        let words: Vec<_> = self.examples.iter().map(|e| e.alignment.clone()).collect();
        let features: Vec<_> = self
            .examples
            .iter()
            .map(|e| FeatureRecord::new(&e.alignment.word, e.speaker(), &e.features))
            .collect();
        let (apath, fpath) = (self.alignments_path(dir), self.features_path(dir));
        write_alignment_file(&words, &apath)?;
        write_feature_file(&features, &fpath)?;
        let file_name = |p: &Path| PathBuf::from(p.file_name().expect("corpus file has a name"));
        let entries: Vec<ManifestEntry> = self
            .examples
            .iter()
            .zip(&self.splits)
            .enumerate()
            .map(|(i, (e, &split))| ManifestEntry {
                alignments: file_name(&apath),
                features: file_name(&fpath),
                record: i,
                source: e.source,
                split,
            })
            .collect();
        write_manifest(&entries, self.manifest_path(dir))?;
        Ok(entries)
    }
}

/// Generate `spec.word_count` words round-robin over the speakers.
/// Every random choice derives from `spec.seed`; words are synthesized in
/// parallel from per-word seeds.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let entries = spec.entries()?;
    if entries.is_empty() {
        return Err(Error::Corpus("empty word list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let speakers: Vec<SpeakerProfile> = (0..spec.speakers)
        .map(|s| speaker_profile(spec, s, &mut rng))
        .collect();
    let plan: Vec<(usize, usize, StressPattern, u64)> = (0..spec.word_count)
        .map(|i| {
            let entry = rng.random_range(0..entries.len());
            let realized = draw_realized(&entries[entry].canonical, spec.error_rate, &mut rng);
            (i % spec.speakers, entry, realized, rng.random())
        })
        .collect();
    let examples = plan
        .par_iter()
        .map(|(s, e, realized, seed)| {
            let (mut word, features) = synthesize_word(
                &entries[*e],
                realized,
                &speakers[*s],
                &spec.effects,
                &spec.options,
                spec.source,
                *seed,
            )?;
            if *s >= spec.speakers - spec.lexicon_labeled_speakers {
                word.realized = None;
            }
            TrainingExample::new(word, features)
        })
        .collect::<Result<Vec<_>>>()?;
    let splits = plan
        .iter()
        .map(|(s, ..)| {
            if *s < spec.validation_speakers {
                Split::Validation
            } else {
                spec.split
            }
        })
        .collect();
    Ok(Corpus {
        name: spec.name.clone(),
        speakers,
        examples,
        splits,
    })
}
