//! Central finite-difference check of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradients::{batch_loss, compute_gradients};
use crate::error::Result;
use crate::lexicon::{Half, PhonemeId, StressPattern, CONSONANTS, VOWELS};
use crate::model::{ModelConfig, ModelInput, ModelParameters, Pooling, SubphonemeToken};

pub const DEFAULT_STEP: f64 = 1e-4;
/// Denominator floor of the relative error, so entries whose true gradient
/// is ~0 are judged on absolute error.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: &'static str,
    pub entries: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.blocks.iter().all(|b| b.max_rel_error <= tolerance)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compare every analytic gradient entry with `(L(w+h) − L(w−h)) / 2h`.
/// Dropout masks are fixed by `seed` for all evaluations.
pub fn gradient_check(
    batch: &[ModelInput],
    labels: &[StressPattern],
    params: &ModelParameters,
    config: &ModelConfig,
    seed: Option<u64>,
    step: f64,
) -> Result<GradCheckReport> {
    let analytic = compute_gradients(batch, labels, params, config, seed)?.grads;
    let analytic: Vec<(&'static str, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(n, _, xs)| (n, xs.to_vec()))
        .collect();
    let mut probe = params.clone();
    let mut blocks = Vec::with_capacity(analytic.len());
    for (b, (name, grad)) in analytic.iter().enumerate() {
        let mut check = BlockCheck {
            name,
            entries: grad.len(),
            max_abs_error: 0.0,
            max_rel_error: 0.0,
        };
        for (i, &a) in grad.iter().enumerate() {
            let original = params.tensors()[b].2[i];
            probe.tensors_mut()[b].1[i] = original + step;
            let up = batch_loss(batch, labels, &probe, config, seed)?.mean;
            probe.tensors_mut()[b].1[i] = original - step;
            let down = batch_loss(batch, labels, &probe, config, seed)?.mean;
            probe.tensors_mut()[b].1[i] = original;
            let numeric = (up - down) / (2.0 * step);
            check.max_abs_error = check.max_abs_error.max((a - numeric).abs());
            check.max_rel_error = check.max_rel_error.max(relative_error(a, numeric));
        }
        blocks.push(check);
    }
    Ok(GradCheckReport { blocks })
}

fn random_word(
    rng: &mut impl Rng,
    config: &ModelConfig,
    syllables: usize,
) -> (ModelInput, StressPattern) {
    let mut tokens = Vec::new();
    let mut nucleus_rows = Vec::new();
    for s in 0..syllables {
        let onset = rng.random_range(0..=2);
        let coda = rng.random_range(0..=1);
        let mut push = |symbol: &str, is_vowel: bool| {
            let phoneme = PhonemeId::from_symbol(symbol).expect("inventory symbol");
            for half in [Half::Left, Half::Right] {
                tokens.push(SubphonemeToken {
                    phoneme,
                    syllable: s,
                    is_vowel,
                    half,
                });
            }
        };
        for _ in 0..onset {
            push(CONSONANTS[rng.random_range(0..CONSONANTS.len())], false);
        }
        push(VOWELS[rng.random_range(0..VOWELS.len())], true);
        for _ in 0..coda {
            push(CONSONANTS[rng.random_range(0..CONSONANTS.len())], false);
        }
        nucleus_rows.push([
            rng.random_range(0.2..0.6),
            rng.random_range(0.4..0.8),
            rng.random_range(0.1..0.5),
        ]);
    }
    let durations: Vec<f64> = tokens.iter().map(|_| rng.random_range(0.02..0.2)).collect();
    let mut frame_map = Vec::new();
    for j in 0..tokens.len() {
        for _ in 0..rng.random_range(1..=3) {
            frame_map.push(j);
        }
    }
    let frames: Vec<[f64; 2]> = frame_map
        .iter()
        .map(|_| [rng.random_range(0.2..0.6), rng.random_range(0.4..0.8)])
        .collect();
    let stressed = rng.random_range(0..syllables);
    let label = StressPattern::single(syllables, stressed);
    let input = ModelInput {
        valid_tokens: tokens.len(),
        tokens,
        durations,
        valid_frames: frames.len(),
        frames,
        frame_map,
        syllables,
        syllable_rows: syllables,
        nucleus: nucleus_rows,
    };
    debug_assert!(input.check(config).is_ok());
    (input, label)
}

/// A random small configuration, a short batch (sometimes padded), labels
/// and parameters drawn wide enough to give non-trivial gradients.
pub fn random_instance(
    seed: u64,
    pooling: Pooling,
) -> (
    ModelConfig,
    Vec<ModelInput>,
    Vec<StressPattern>,
    ModelParameters,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ModelConfig {
        max_syllables: rng.random_range(3..=6),
        gru_units: rng.random_range(2..=5),
        head_units: rng.random_range(2..=5),
        dropout: if rng.random_bool(0.5) { 0.24 } else { 0.0 },
        pooling,
        ..ModelConfig::default()
    };
    let syllables = rng.random_range(2..=config.max_syllables.min(4));
    let size = rng.random_range(1..=3);
    let words: Vec<_> = (0..size)
        .map(|_| random_word(&mut rng, &config, syllables))
        .collect();
    let max_tokens = words.iter().map(|(x, _)| x.tokens.len()).max().unwrap_or(0);
    let max_frames = words.iter().map(|(x, _)| x.frames.len()).max().unwrap_or(0);
    let extra_rows = usize::from(syllables < config.max_syllables && rng.random_bool(0.3));
    let (batch, labels) = words
        .into_iter()
        .map(|(x, l)| (x.padded(max_tokens, max_frames, syllables + extra_rows), l))
        .unzip();
    let params = ModelParameters::init_uniform(&config, rng.random(), 0.5);
    (config, batch, labels, params)
}
