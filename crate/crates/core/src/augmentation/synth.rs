use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LexiconEntry;
use crate::error::{Error, Result};
use crate::lexicon::{
    split_subphonemes, syllabify, Phoneme, PhonemeId, Source, StressPattern, WordAlignment,
};
use crate::prosody::{frame_to_subphoneme, interpolate_unvoiced, FrameGrid, ProsodicFeatures};

pub const BASE_VOWEL_S: f64 = 0.090;
pub const BASE_CONSONANT_S: f64 = 0.060;
/// dB per unit of log-amplitude.
const DB_PER_NEPER: f64 = 20.0 / std::f64::consts::LN_10;

/// A voice: pitch, tempo, loudness and how much it varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeakerProfile {
    pub id: String,
    pub base_f0: f64,
    /// Duration multiplier; above 1 is slower.
    pub rate: f64,
    pub base_intensity: f64,
    /// Relative noise std of durations, F0 and amplitude.
    pub jitter: f64,
}

impl SpeakerProfile {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(Error::Corpus(what)) };
        check(
            (75.0..=400.0).contains(&self.base_f0),
            format!(
                "speaker `{}`: base_f0 {} outside [75, 400] Hz",
                self.id, self.base_f0
            ),
        )?;
        check(
            (0.7..=1.4).contains(&self.rate),
            format!(
                "speaker `{}`: rate {} outside [0.7, 1.4]",
                self.id, self.rate
            ),
        )?;
        check(
            (0.0..=0.3).contains(&self.jitter),
            format!(
                "speaker `{}`: jitter {} outside [0, 0.3]",
                self.id, self.jitter
            ),
        )?;
        check(
            (20.0..=100.0).contains(&self.base_intensity),
            format!(
                "speaker `{}`: base_intensity {} outside [20, 100] dB",
                self.id, self.base_intensity
            ),
        )
    }
}

/// How a stressed syllable differs from an unstressed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressEffects {
    /// Multiplier on the stressed nucleus duration.
    pub duration_mult: f64,
    /// Multiplier on F0 across the stressed syllable.
    pub f0_mult: f64,
    /// dB added across the stressed syllable.
    pub intensity_add: f64,
    /// Probability that a canonically unstressed vowel is written as AH.
    pub reduction_prob: f64,
}

impl Default for StressEffects {
    fn default() -> Self {
        StressEffects {
            duration_mult: 1.5,
            f0_mult: 1.25,
            intensity_add: 6.0,
            reduction_prob: 0.8,
        }
    }
}

impl StressEffects {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_mult > 1.0 && self.f0_mult > 1.0 && self.intensity_add > 0.0) {
            return Err(Error::Corpus(format!(
                "stress effects must strengthen the stressed syllable: {self:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.reduction_prob) {
            return Err(Error::Corpus(format!(
                "reduction_prob {} outside [0, 1]",
                self.reduction_prob
            )));
        }
        Ok(())
    }
}

/// Contour shape and recording conditions that do not depend on stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisOptions {
    /// Relative F0 fall from word start to word end.
    pub declination: f64,
    /// Level of voiced consonants below vowels, in dB.
    pub voiced_consonant_drop: f64,
    /// Level of voiceless consonants below vowels, in dB.
    pub voiceless_consonant_drop: f64,
    /// Weight of vowel-intrinsic duration, F0 and level differences (0 = none, 1 = full table).
    pub intrinsic: f64,
    /// Duration multiplier on the consonants of a stressed syllable.
    pub consonant_lengthening: f64,
    /// Std of the error on each internal phoneme boundary of the reported
    /// alignment, in seconds. The tracks follow the true boundaries.
    pub alignment_noise: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            declination: 0.10,
            voiced_consonant_drop: 6.0,
            voiceless_consonant_drop: 12.0,
            intrinsic: 0.0,
            consonant_lengthening: 1.0,
            alignment_noise: 0.0,
        }
    }
}

impl SynthesisOptions {
    /// Read speech with vowel-intrinsic effects, longer consonants in
    /// stressed syllables and imprecise forced-alignment boundaries.
    pub fn human() -> Self {
        SynthesisOptions {
            intrinsic: 1.0,
            consonant_lengthening: 1.5,
            alignment_noise: 0.05,
            ..SynthesisOptions::default()
        }
    }

    /// Like [`SynthesisOptions::human`] with exact boundaries.
    pub fn synthetic() -> Self {
        SynthesisOptions {
            alignment_noise: 0.0,
            ..SynthesisOptions::human()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.2).contains(&self.declination) {
            return Err(Error::Corpus(format!(
                "declination {} outside [0, 0.2)",
                self.declination
            )));
        }
        if self.voiced_consonant_drop < 0.0 || self.voiceless_consonant_drop < 0.0 {
            return Err(Error::Corpus(
                "consonant level drops must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.intrinsic) {
            return Err(Error::Corpus(format!(
                "intrinsic weight {} outside [0, 1]",
                self.intrinsic
            )));
        }
        if !(1.0..=2.0).contains(&self.consonant_lengthening) {
            return Err(Error::Corpus(format!(
                "consonant_lengthening {} outside [1, 2]",
                self.consonant_lengthening
            )));
        }
        if !(0.0..=0.05).contains(&self.alignment_noise) {
            return Err(Error::Corpus(format!(
                "alignment_noise {} outside [0, 0.05] s",
                self.alignment_noise
            )));
        }
        Ok(())
    }
}

/// Vowel-intrinsic (duration factor, F0 factor, level in dB). The duration
/// spread stays below the default stressed-nucleus lengthening and the F0
/// and level spreads below the default stress effects.
fn intrinsic(p: PhonemeId) -> (f64, f64, f64) {
    match p.symbol() {
        "AH" => (0.85, 1.00, -2.0),
        "IH" | "UH" => (0.90, 1.03, -1.0),
        "EH" => (0.95, 1.00, 0.5),
        "IY" | "UW" => (1.00, 1.04, -1.0),
        "ER" => (1.00, 1.00, 0.0),
        "AA" | "AE" | "AO" => (1.10, 0.96, 2.0),
        "EY" | "OW" => (1.10, 0.98, 1.0),
        "AW" | "AY" | "OY" => (1.20, 0.98, 1.0),
        _ => (1.0, 1.0, 0.0),
    }
}

/// Reported boundaries: each internal boundary moved by N(0, std), kept
/// ordered with every phoneme at least `min` long.
fn perturb_boundaries(phonemes: &[Phoneme], std: f64, rng: &mut impl Rng) -> Vec<Phoneme> {
    const MIN: f64 = 0.012;
    let n = phonemes.len();
    let mut out = phonemes.to_vec();
    for i in 1..n {
        let lo = out[i - 1].start + MIN;
        let hi = (phonemes[i].end - MIN).max(lo);
        let b = (phonemes[i].start + std * normal(rng)).clamp(lo, hi);
        out[i - 1].end = b;
        out[i].start = b;
    }
    out
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// The transcript after vowel reduction: each canonically unstressed
/// nucleus becomes AH with probability `reduction_prob`.
pub fn reduce_vowels(
    entry: &LexiconEntry,
    reduction_prob: f64,
    rng: &mut impl Rng,
) -> Result<Vec<PhonemeId>> {
    let schwa = PhonemeId::from_symbol("AH")?;
    let mut phonemes = entry.phonemes.clone();
    for syl in syllabify(&entry.phonemes)? {
        let reduce = rng.random_bool(reduction_prob);
        if reduce && !entry.canonical.is_stressed(syl.index) {
            phonemes[syl.nucleus] = schwa;
        }
    }
    Ok(phonemes)
}

/// Generate an aligned word and its prosodic tracks with `realized` stress.
pub fn synthesize_word(
    entry: &LexiconEntry,
    realized: &StressPattern,
    speaker: &SpeakerProfile,
    effects: &StressEffects,
    options: &SynthesisOptions,
    source: Source,
    seed: u64,
) -> Result<(WordAlignment, ProsodicFeatures)> {
    speaker.validate()?;
    effects.validate()?;
    options.validate()?;
    if realized.len() != entry.syllables() {
        return Err(Error::Corpus(format!(
            "`{}` has {} syllables but the realized pattern has {}",
            entry.word,
            entry.syllables(),
            realized.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = reduce_vowels(entry, effects.reduction_prob, &mut rng)?;
    let syllables = syllabify(&symbols)?;
    let mut syllable_of = vec![0; symbols.len()];
    for s in &syllables {
        syllable_of[s.span.clone()]
            .iter_mut()
            .for_each(|x| *x = s.index);
    }
    let stressed = |i: usize| realized.is_stressed(syllable_of[i]);
    let jitter = speaker.jitter;

    let weight = options.intrinsic;
    let shade = |p: PhonemeId| {
        let (d, f, l) = intrinsic(p);
        (d.powf(weight), f.powf(weight), l * weight)
    };

    let mut truth = Vec::with_capacity(symbols.len());
    let mut t = 0.0;
    for (i, &p) in symbols.iter().enumerate() {
        let base = if p.is_vowel() {
            BASE_VOWEL_S * shade(p).0
        } else {
            BASE_CONSONANT_S
        };
        let mut d = base * speaker.rate * (jitter * normal(&mut rng)).exp();
        if stressed(i) {
            d *= if p.is_vowel() {
                effects.duration_mult
            } else {
                options.consonant_lengthening
            };
        }
        truth.push(Phoneme::new(p, t, t + d));
        t += d;
    }
    let reported = if options.alignment_noise > 0.0 {
        perturb_boundaries(&truth, options.alignment_noise, &mut rng)
    } else {
        truth.clone()
    };
    let word = WordAlignment::new(
        entry.word.clone(),
        speaker.id.clone(),
        source,
        reported,
        entry.canonical.clone(),
        Some(realized.clone()),
    )?;

    // per-phoneme offsets, then per-frame noise on top
    let f0_offset: Vec<f64> = symbols.iter().map(|_| jitter * normal(&mut rng)).collect();
    let level_offset: Vec<f64> = symbols.iter().map(|_| jitter * normal(&mut rng)).collect();
    let total = word.duration();
    let grid = FrameGrid::new(0.0, total);
    let mut phone = 0;
    let mut raw_f0 = Vec::with_capacity(grid.count);
    let mut voiced = Vec::with_capacity(grid.count);
    let mut intensity = Vec::with_capacity(grid.count);
    for i in 0..grid.count {
        let c = grid.center(i);
        while phone + 1 < truth.len() && c >= truth[phone].end {
            phone += 1;
        }
        let p = symbols[phone];
        let accent = stressed(phone);
        let f0_noise = 0.5 * jitter * normal(&mut rng);
        let level_noise = 0.5 * jitter * normal(&mut rng);

        let mut f0 = speaker.base_f0 * (1.0 - options.declination * (c / total).min(1.0));
        if accent {
            f0 *= effects.f0_mult;
        }
        let (_, f0_shade, level_shade) = shade(p);
        f0 *= f0_shade;
        f0 *= (f0_offset[phone] + f0_noise).exp();
        raw_f0.push(f0);
        voiced.push(p.is_voiced());

        let mut level = speaker.base_intensity
            + level_shade
            + DB_PER_NEPER * (level_offset[phone] + level_noise);
        if !p.is_vowel() {
            level -= if p.is_voiced() {
                options.voiced_consonant_drop
            } else {
                options.voiceless_consonant_drop
            };
        }
        if accent {
            level += effects.intensity_add;
        }
        intensity.push(level.max(0.0));
    }
    let filled = interpolate_unvoiced(&raw_f0, &voiced, speaker.base_f0);
    let subs = split_subphonemes(&word);
    let features = ProsodicFeatures {
        f0: filled.f0,
        intensity,
        voiced,
        subphoneme_durations: subs.iter().map(|s| s.duration()).collect(),
        frame_to_subphoneme: frame_to_subphoneme(&subs, &grid),
        f0_fallback: filled.fallback,
    };
    features.validate(&word)?;
    Ok((word, features))
}
