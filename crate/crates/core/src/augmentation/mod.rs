//! Parametric prosody generator: aligned words with F0, intensity and
//! duration tracks for any target stress pattern.

mod corpus;
mod entry;
mod synth;

pub use corpus::{draw_realized, generate_corpus, Corpus, CorpusSpec, CorpusSummary, SplitSummary};
pub use entry::{builtin_entry, builtin_lexicon, parse_lexicon, LexiconEntry};
pub use synth::{
    reduce_vowels, synthesize_word, SpeakerProfile, StressEffects, SynthesisOptions,
    BASE_CONSONANT_S, BASE_VOWEL_S,
};
