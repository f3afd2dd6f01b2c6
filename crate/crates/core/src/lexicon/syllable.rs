use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::PhonemeId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syllable {
    pub index: usize,
    /// Phoneme index range covered by this syllable.
    pub span: Range<usize>,
    /// Phoneme index of the syllable's vowel.
    pub nucleus: usize,
}

/// Group phonemes into syllables, one per vowel.
///
/// Consonants between two vowels form the onset of the following syllable;
/// leading consonants belong to the first syllable and trailing ones to the
/// last.
pub fn syllabify(phonemes: &[PhonemeId]) -> Result<Vec<Syllable>> {
    let nuclei: Vec<usize> = phonemes
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_vowel())
        .map(|(i, _)| i)
        .collect();
    if nuclei.is_empty() {
        return Err(Error::InvalidAlignment("word has no vowels".into()));
    }
    let mut syllables = Vec::with_capacity(nuclei.len());
    for (k, &nucleus) in nuclei.iter().enumerate() {
        let start = if k == 0 { 0 } else { nuclei[k - 1] + 1 };
        let end = if k + 1 < nuclei.len() {
            nucleus + 1
        } else {
            phonemes.len()
        };
        syllables.push(Syllable {
            index: k,
            span: start..end,
            nucleus,
        });
    }
    Ok(syllables)
}
