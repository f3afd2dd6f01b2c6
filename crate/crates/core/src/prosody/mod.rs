//! Prosodic features of a word: frame-level F0 and intensity on a
//! 10 ms / 40 ms grid, plus sub-phoneme durations.

mod audio;
mod intensity;
mod io;
mod pitch;

pub use audio::{sine, AudioSignal, SAMPLE_RATE};
pub use intensity::{compute_intensity, INTENSITY_OFFSET_DB};
pub use io::{read_feature_file, read_features, write_feature_file, write_features, FeatureRecord};
pub use pitch::{compute_f0, interpolate_unvoiced, InterpolatedF0, PitchSettings, PitchTrack};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{split_subphonemes, SubPhoneme, WordAlignment};

/// Frame step in seconds.
pub const HOP: f64 = 0.010;
/// Analysis window in seconds.
pub const WINDOW: f64 = 0.040;

/// Scale constants bringing features to comparable, strictly positive
/// magnitudes before they reach the model.
pub const F0_SCALE_HZ: f64 = 500.0;
pub const INTENSITY_SCALE_DB: f64 = 100.0;
pub const DURATION_SCALE_S: f64 = 0.5;

/// Number of whole 10 ms frames in `duration` seconds.
pub fn frame_count(duration: f64) -> usize {
    if duration <= 0.0 {
        return 0;
    }
    (duration / HOP + 1e-9).floor() as usize
}

/// Frames of one word, starting at `start` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGrid {
    pub start: f64,
    pub count: usize,
}

impl FrameGrid {
    pub fn new(start: f64, duration: f64) -> Self {
        FrameGrid {
            start,
            count: frame_count(duration),
        }
    }

    pub fn center(&self, index: usize) -> f64 {
        self.start + (index as f64 + 0.5) * HOP
    }
}

/// Sub-phoneme containing each frame centre; the last sub-phoneme takes any
/// frames past the end of the word.
pub fn frame_to_subphoneme(subphonemes: &[SubPhoneme], grid: &FrameGrid) -> Vec<usize> {
    let mut out = Vec::with_capacity(grid.count);
    let mut j = 0;
    for i in 0..grid.count {
        let c = grid.center(i);
        while j + 1 < subphonemes.len() && c >= subphonemes[j].end {
            j += 1;
        }
        out.push(j);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub pitch: PitchSettings,
    /// F0 used for words without a single voiced frame.
    pub default_f0_hz: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            pitch: PitchSettings::default(),
            default_f0_hz: 100.0,
        }
    }
}

/// Frame-level F0/intensity tracks plus per-sub-phoneme durations of one word.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsodicFeatures {
    /// Hz, with unvoiced frames interpolated.
    pub f0: Vec<f64>,
    /// Positive-shifted dB.
    pub intensity: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Seconds.
    pub subphoneme_durations: Vec<f64>,
    pub frame_to_subphoneme: Vec<usize>,
    /// No voiced frame was found and F0 was filled with the default.
    pub f0_fallback: bool,
}

impl ProsodicFeatures {
    pub fn frame_count(&self) -> usize {
        self.f0.len()
    }

    pub fn scaled_f0(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0.iter().map(|v| v / F0_SCALE_HZ)
    }

    pub fn scaled_intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.intensity.iter().map(|v| v / INTENSITY_SCALE_DB)
    }

    pub fn scaled_durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.subphoneme_durations
            .iter()
            .map(|v| v / DURATION_SCALE_S)
    }

    /// Check the tracks agree with each other and with `word`.
    pub fn validate(&self, word: &WordAlignment) -> Result<()> {
        let t = self.f0.len();
        if self.intensity.len() != t
            || self.voiced.len() != t
            || self.frame_to_subphoneme.len() != t
        {
            return Err(Error::Features(format!(
                "track lengths differ: f0 {t}, intensity {}, voiced {}, frame map {}",
                self.intensity.len(),
                self.voiced.len(),
                self.frame_to_subphoneme.len()
            )));
        }
        if t == 0 {
            return Err(Error::Features("no frames".into()));
        }
        let subs = 2 * word.phonemes.len();
        if self.subphoneme_durations.len() != subs {
            return Err(Error::Features(format!(
                "{} sub-phoneme durations for {} phonemes",
                self.subphoneme_durations.len(),
                word.phonemes.len()
            )));
        }
        if let Some(bad) = self.frame_to_subphoneme.iter().find(|&&j| j >= subs) {
            return Err(Error::Features(format!(
                "frame maps to sub-phoneme {bad} of {subs}"
            )));
        }
        if self.frame_to_subphoneme.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Features("frame map is not monotone".into()));
        }
        if self
            .f0
            .iter()
            .chain(&self.intensity)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Features("non-finite feature value".into()));
        }
        Ok(())
    }
}

/// Extract the prosodic features of `word` from `audio`.
pub fn extract_features(
    audio: &AudioSignal,
    word: &WordAlignment,
    config: &FeatureConfig,
) -> Result<ProsodicFeatures> {
    if word.end() > audio.duration() + HOP {
        return Err(Error::Features(format!(
            "word `{}` ends at {:.3} s but the audio lasts {:.3} s",
            word.word,
            word.end(),
            audio.duration()
        )));
    }
    let grid = FrameGrid::new(word.start(), word.duration());
    if grid.count == 0 {
        return Err(Error::Features(format!(
            "word `{}` spans less than one frame",
            word.word
        )));
    }
    let track = compute_f0(audio, &grid, &config.pitch)?;
    let filled = interpolate_unvoiced(&track.f0, &track.voiced, config.default_f0_hz);
    let intensity = compute_intensity(audio, &grid);
    let subs = split_subphonemes(word);
    Ok(ProsodicFeatures {
        f0: filled.f0,
        intensity,
        voiced: track.voiced,
        subphoneme_durations: subs.iter().map(SubPhoneme::duration).collect(),
        frame_to_subphoneme: frame_to_subphoneme(&subs, &grid),
        f0_fallback: filled.fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon_entry, Phoneme, Source};

    fn word_over(start: f64, entry: &str, durations: &[f64]) -> WordAlignment {
        let (ids, canonical) = parse_lexicon_entry(entry).unwrap();
        let mut t = start;
        let phonemes = ids
            .iter()
            .zip(durations)
            .map(|(&id, &d)| {
                let p = Phoneme::new(id, t, t + d);
                t += d;
                p
            })
            .collect();
        WordAlignment::new("w", "s", Source::Human, phonemes, canonical, None).unwrap()
    }

    #[test]
    fn frame_count_formula() {
        assert_eq!(frame_count(0.40), 40);
        assert_eq!(frame_count(0.30), 30);
        assert_eq!(frame_count(0.0349), 3);
        assert_eq!(frame_count(0.0), 0);
    }

    #[test]
    fn tone_word_features() {
        let audio = sine(250.0, 0.5, 0.6);
        let word = word_over(0.1, "G AA1 R AA0 ZH", &[0.06, 0.12, 0.06, 0.1, 0.06]);
        let f = extract_features(&audio, &word, &FeatureConfig::default()).unwrap();
        assert_eq!(f.frame_count(), 40);
        f.validate(&word).unwrap();
        for v in f.scaled_f0() {
            assert!((v - 0.5).abs() < 0.005, "{v}");
        }
        assert!(f.scaled_intensity().all(|v| v > 0.0));
        assert!(f.scaled_durations().all(|v| v > 0.0));
        assert_eq!(*f.frame_to_subphoneme.last().unwrap(), 9);
        assert_eq!(f.frame_to_subphoneme[0], 0);
    }

    #[test]
    fn alignment_outside_audio() {
        let audio = sine(200.0, 0.5, 0.2);
        let word = word_over(0.1, "AH0 B AW1 T", &[0.1, 0.1, 0.1, 0.1]);
        assert!(extract_features(&audio, &word, &FeatureConfig::default()).is_err());
    }
}
