use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lexicon::{parse_lexicon_entry, PhonemeId, StressPattern};

/// A word with its stress-marked pronunciation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub word: String,
    pub phonemes: Vec<PhonemeId>,
    pub canonical: StressPattern,
}

impl LexiconEntry {
    /// Parse `"WORD  G ER0 AA1 ZH"`.
    pub fn parse(line: &str) -> Result<Self> {
        let line = line.trim();
        let (word, pron) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Corpus(format!("lexicon line `{line}` has no pronunciation")))?;
        let (phonemes, canonical) = parse_lexicon_entry(pron)?;
        Ok(LexiconEntry {
            word: word.to_lowercase(),
            phonemes,
            canonical,
        })
    }

    pub fn syllables(&self) -> usize {
        self.canonical.len()
    }
}

/// Parse a lexicon text: one entry per line, `#` comments and blank lines skipped.
pub fn parse_lexicon(text: &str) -> Result<Vec<LexiconEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| LexiconEntry::parse(l).map_err(|e| Error::record(i, e)))
        .collect()
}

/// The bundled list of multi-syllable English words.
pub fn builtin_lexicon() -> &'static [LexiconEntry] {
    static LEXICON: OnceLock<Vec<LexiconEntry>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        parse_lexicon(include_str!("../../data/lexicon.txt")).expect("bundled lexicon parses")
    })
}

pub fn builtin_entry(word: &str) -> Option<&'static LexiconEntry> {
    let word = word.to_lowercase();
    builtin_lexicon().iter().find(|e| e.word == word)
}
