use super::ModelConfig;
use crate::error::{Error, Result};
use crate::lexicon::{split_subphonemes, Half, PhonemeId, WordAlignment};
use crate::prosody::ProsodicFeatures;

/// One sub-phoneme as seen by the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubphonemeToken {
    pub phoneme: PhonemeId,
    pub syllable: usize,
    pub is_vowel: bool,
    pub half: Half,
}

impl SubphonemeToken {
    pub const PAD: SubphonemeToken = SubphonemeToken {
        phoneme: PhonemeId::PAD,
        syllable: 0,
        is_vowel: false,
        half: Half::Left,
    };

    /// Positions of the four set bits of the one-hot encoding.
    pub fn active_features(&self, config: &ModelConfig) -> Result<[usize; 4]> {
        if self.syllable >= config.max_syllables {
            return Err(Error::Model(format!(
                "syllable index {} exceeds max_syllables {}",
                self.syllable, config.max_syllables
            )));
        }
        let inv = config.inventory_size;
        let syl = config.max_syllables;
        Ok([
            self.phoneme.index(),
            inv + self.syllable,
            inv + syl + self.is_vowel as usize,
            inv + syl + 2 + (self.half == Half::Right) as usize,
        ])
    }

    /// Dense one-hot encoding of width [`ModelConfig::token_width`].
    pub fn one_hot(&self, config: &ModelConfig) -> Result<Vec<f64>> {
        let mut v = vec![0.0; config.token_width()];
        for i in self.active_features(config)? {
            v[i] = 1.0;
        }
        Ok(v)
    }
}

/// Everything the classifier needs for one word, in scaled units.
///
/// Sequences may be zero-padded at the tail for batching; positions past
/// `valid_tokens` / `valid_frames` / `syllables` are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub tokens: Vec<SubphonemeToken>,
    pub valid_tokens: usize,
    /// Scaled sub-phoneme durations (attention values at the phoneme level).
    pub durations: Vec<f64>,
    /// Scaled (F0, intensity) per frame (attention values at the frame level).
    pub frames: Vec<[f64; 2]>,
    pub valid_frames: usize,
    pub frame_map: Vec<usize>,
    /// Real syllable count K.
    pub syllables: usize,
    /// Rows computed by the model (K plus padding).
    pub syllable_rows: usize,
    /// Per-syllable nucleus means (F0, intensity, duration), used when
    /// attention is switched off.
    pub nucleus: Vec<[f64; 3]>,
}

impl ModelInput {
    pub fn new(word: &WordAlignment, features: &ProsodicFeatures) -> Result<Self> {
        features.validate(word)?;
        let subs = split_subphonemes(word);
        let tokens: Vec<SubphonemeToken> = subs
            .iter()
            .map(|s| SubphonemeToken {
                phoneme: s.symbol,
                syllable: s.syllable_index,
                is_vowel: s.is_vowel(),
                half: s.half,
            })
            .collect();
        let frames: Vec<[f64; 2]> = features
            .scaled_f0()
            .zip(features.scaled_intensity())
            .map(|(f, i)| [f, i])
            .collect();
        let nucleus = crate::eval::nucleus_mean_features(word, features);
        Ok(ModelInput {
            valid_tokens: tokens.len(),
            tokens,
            durations: features.scaled_durations().collect(),
            valid_frames: frames.len(),
            frames,
            frame_map: features.frame_to_subphoneme.clone(),
            syllables: word.syllable_count(),
            syllable_rows: word.syllable_count(),
            nucleus: nucleus.rows,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Zero-pad to the given sequence lengths and syllable rows.
    pub fn padded(&self, tokens: usize, frames: usize, syllable_rows: usize) -> ModelInput {
        let mut out = self.clone();
        let last_token = self.valid_tokens.saturating_sub(1);
        out.tokens
            .resize(tokens.max(self.tokens.len()), SubphonemeToken::PAD);
        out.durations.resize(out.tokens.len(), 0.0);
        out.frames.resize(frames.max(self.frames.len()), [0.0, 0.0]);
        out.frame_map.resize(out.frames.len(), last_token);
        out.syllable_rows = syllable_rows.max(self.syllable_rows);
        out.nucleus.resize(out.syllable_rows, [0.0; 3]);
        out
    }

    pub fn check(&self, config: &ModelConfig) -> Result<()> {
        if self.syllables < 2 || self.syllable_rows > config.max_syllables {
            return Err(Error::Model(format!(
                "word with {} syllables ({} rows) is outside [2, {}]",
                self.syllables, self.syllable_rows, config.max_syllables
            )));
        }
        if self.valid_tokens == 0 || self.valid_frames == 0 {
            return Err(Error::Model("empty sub-phoneme or frame sequence".into()));
        }
        if self
            .frame_map
            .iter()
            .take(self.valid_frames)
            .any(|&j| j >= self.valid_tokens)
        {
            return Err(Error::Model(
                "frame map points past the sub-phoneme sequence".into(),
            ));
        }
        Ok(())
    }
}
