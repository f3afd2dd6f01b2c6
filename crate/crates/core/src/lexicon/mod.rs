//! Phonemes, syllables, canonical stress and time alignments.
//!
//! Words arrive either as stress-marked ARPAbet lexicon entries
//! (`"G AA1 R AA0 ZH"`) or as aligned records read from an alignment file.
//! Both routes end in a [`WordAlignment`], the structural input of the
//! classifier.

mod alignment;
mod io;
mod phoneme;
mod syllable;

pub use alignment::{split_subphonemes, Half, Phoneme, Source, SubPhoneme, WordAlignment};
pub use io::{
    read_alignment_file, read_alignments, write_alignment_file, write_alignments, AlignmentRecord,
    PhoneRecord,
};
pub use phoneme::{PhonemeId, CONSONANTS, INVENTORY_SIZE, PAD_SYMBOL, VOWELS};
pub use syllable::{syllabify, Syllable};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Per-syllable stressed/unstressed flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StressPattern(Vec<bool>);

impl StressPattern {
    pub fn new(flags: Vec<bool>) -> Self {
        StressPattern(flags)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidAlignment(format!(
                    "stress flag {other} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(StressPattern)
    }

    /// Pattern with a single stressed syllable at `stressed`.
    pub fn single(len: usize, stressed: usize) -> Self {
        StressPattern((0..len).map(|k| k == stressed).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_stressed(&self, syllable: usize) -> bool {
        self.0[syllable]
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn bits(&self) -> Vec<u8> {
        self.0.iter().map(|&f| f as u8).collect()
    }

    pub fn stressed_count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    /// Index of the primary stress when exactly one syllable is stressed.
    pub fn primary(&self) -> Option<usize> {
        if self.stressed_count() == 1 {
            self.0.iter().position(|&f| f)
        } else {
            None
        }
    }
}

impl Serialize for StressPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.bits().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StressPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(deserializer)?;
        StressPattern::from_bits(&bits).map_err(serde::de::Error::custom)
    }
}

/// Parse a stress-marked ARPAbet entry into bare phoneme symbols and the
/// canonical stress pattern.
///
/// Digit `1` marks the stressed syllable; `0` and `2` (secondary) are both
/// treated as unstressed.
pub fn parse_lexicon_entry(entry: &str) -> Result<(Vec<PhonemeId>, StressPattern)> {
    let mut phonemes = Vec::new();
    let mut flags = Vec::new();
    for token in entry.split_whitespace() {
        let token = token.to_ascii_uppercase();
        let (base, digit) = match token.chars().last() {
            Some(c @ '0'..='2') => (&token[..token.len() - 1], Some(c)),
            _ => (token.as_str(), None),
        };
        let id = PhonemeId::from_symbol(base)?;
        match (id.is_vowel(), digit) {
            (true, Some(d)) => flags.push(d == '1'),
            (true, None) => return Err(Error::MissingStressDigit(base.to_string())),
            (false, Some(_)) => return Err(Error::UnknownSymbol(token.clone())),
            (false, None) => {}
        }
        phonemes.push(id);
    }
    if flags.len() < 2 {
        return Err(Error::TooFewSyllables(
            entry.trim().to_string(),
            flags.len(),
        ));
    }
    let pattern = StressPattern(flags);
    if pattern.stressed_count() != 1 {
        return Err(Error::InvalidAlignment(format!(
            "canonical entry `{}` must carry exactly one primary stress, found {}",
            entry.trim(),
            pattern.stressed_count()
        )));
    }
    Ok((phonemes, pattern))
}
