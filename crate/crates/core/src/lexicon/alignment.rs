use serde::{Deserialize, Serialize};

use super::{syllabify, PhonemeId, StressPattern, Syllable};
use crate::error::{Error, Result};

/// Boundary mismatch tolerated between consecutive phones, in seconds.
const CONTIGUITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phoneme {
    pub symbol: PhonemeId,
    pub start: f64,
    pub end: f64,
}

impl Phoneme {
    pub fn new(symbol: PhonemeId, start: f64, end: f64) -> Self {
        Phoneme { symbol, start, end }
    }

    pub fn is_vowel(&self) -> bool {
        self.symbol.is_vowel()
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Synthetic,
}

/// A word with its time-aligned phonemes, syllable structure and stress.
#[derive(Debug, Clone, PartialEq)]
pub struct WordAlignment {
    pub word: String,
    pub speaker_id: String,
    pub source: Source,
    pub phonemes: Vec<Phoneme>,
    pub syllables: Vec<Syllable>,
    pub canonical: StressPattern,
    /// Stress actually produced by the speaker, when annotated.
    pub realized: Option<StressPattern>,
    /// Audio file name, relative to the directory holding the recordings.
    pub audio: Option<String>,
}

impl WordAlignment {
    pub fn new(
        word: impl Into<String>,
        speaker_id: impl Into<String>,
        source: Source,
        phonemes: Vec<Phoneme>,
        canonical: StressPattern,
        realized: Option<StressPattern>,
    ) -> Result<Self> {
        let ids: Vec<PhonemeId> = phonemes.iter().map(|p| p.symbol).collect();
        validate_intervals(&phonemes)?;
        if ids.iter().any(|p| p.is_pad()) {
            return Err(Error::InvalidAlignment(
                "padding symbol inside a word".into(),
            ));
        }
        let syllables = syllabify(&ids)?;
        let word = word.into();
        if syllables.len() < 2 {
            return Err(Error::TooFewSyllables(word, syllables.len()));
        }
        if canonical.len() != syllables.len() {
            return Err(Error::InvalidAlignment(format!(
                "canonical pattern has {} flags for {} syllables",
                canonical.len(),
                syllables.len()
            )));
        }
        if canonical.stressed_count() != 1 {
            return Err(Error::InvalidAlignment(format!(
                "canonical pattern must have exactly one stressed syllable, found {}",
                canonical.stressed_count()
            )));
        }
        if let Some(r) = &realized {
            if r.len() != syllables.len() {
                return Err(Error::InvalidAlignment(format!(
                    "realized pattern has {} flags for {} syllables",
                    r.len(),
                    syllables.len()
                )));
            }
        }
        Ok(WordAlignment {
            word,
            speaker_id: speaker_id.into(),
            source,
            phonemes,
            syllables,
            canonical,
            realized,
            audio: None,
        })
    }

    pub fn syllable_count(&self) -> usize {
        self.syllables.len()
    }

    pub fn start(&self) -> f64 {
        self.phonemes[0].start
    }

    pub fn end(&self) -> f64 {
        self.phonemes[self.phonemes.len() - 1].end
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Syllable index of every phoneme.
    pub fn syllable_of_phonemes(&self) -> Vec<usize> {
        let mut out = vec![0; self.phonemes.len()];
        for syl in &self.syllables {
            for i in syl.span.clone() {
                out[i] = syl.index;
            }
        }
        out
    }

    /// Whether the realized stress differs from the canonical pattern.
    pub fn has_stress_error(&self) -> Option<bool> {
        self.realized.as_ref().map(|r| r != &self.canonical)
    }

    pub fn symbols(&self) -> Vec<PhonemeId> {
        self.phonemes.iter().map(|p| p.symbol).collect()
    }
}

fn validate_intervals(phonemes: &[Phoneme]) -> Result<()> {
    if phonemes.is_empty() {
        return Err(Error::InvalidAlignment("word has no phonemes".into()));
    }
    for (i, p) in phonemes.iter().enumerate() {
        if !(p.start.is_finite() && p.end.is_finite()) || p.start < 0.0 {
            return Err(Error::InvalidAlignment(format!(
                "phoneme {i} `{}` has invalid times [{}, {}]",
                p.symbol, p.start, p.end
            )));
        }
        if p.end <= p.start {
            return Err(Error::InvalidAlignment(format!(
                "phoneme {i} `{}` ends at {} which is not after its start {}",
                p.symbol, p.end, p.start
            )));
        }
        if i > 0 {
            let prev = &phonemes[i - 1];
            if p.start < prev.end - CONTIGUITY_TOLERANCE {
                return Err(Error::InvalidAlignment(format!(
                    "phoneme {i} `{}` overlaps the previous phoneme ({} < {})",
                    p.symbol, p.start, prev.end
                )));
            }
            if p.start > prev.end + CONTIGUITY_TOLERANCE {
                return Err(Error::InvalidAlignment(format!(
                    "gap before phoneme {i} `{}` ({} > {})",
                    p.symbol, p.start, prev.end
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Left,
    Right,
}

/// Temporal half of an aligned phoneme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubPhoneme {
    pub phoneme: usize,
    pub symbol: PhonemeId,
    pub half: Half,
    pub syllable_index: usize,
    pub start: f64,
    pub end: f64,
}

impl SubPhoneme {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_vowel(&self) -> bool {
        self.symbol.is_vowel()
    }
}

/// Split every phoneme at its temporal midpoint into a left and right half.
pub fn split_subphonemes(word: &WordAlignment) -> Vec<SubPhoneme> {
    let syllable_of = word.syllable_of_phonemes();
    let mut out = Vec::with_capacity(2 * word.phonemes.len());
    for (i, p) in word.phonemes.iter().enumerate() {
        let mid = 0.5 * (p.start + p.end);
        for (half, start, end) in [(Half::Left, p.start, mid), (Half::Right, mid, p.end)] {
            out.push(SubPhoneme {
                phoneme: i,
                symbol: p.symbol,
                half,
                syllable_index: syllable_of[i],
                start,
                end,
            });
        }
    }
    out
}
