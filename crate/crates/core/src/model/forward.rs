use rand::Rng;

use super::attention::{
    attention_key_grad, downsample_grad, masked_attention, syllable_queries, upsample_to_frames,
    Attention,
};
use super::encoder::{encode_subphonemes, encoder_backward, Encoded};
use super::head::{head_backward, head_forward, HeadCache};
use super::ratio::{differential_backward, differential_bidirectional};
use super::{Matrix, ModelConfig, ModelInput, ModelParameters, Pooling};
use crate::error::{Error, Result};
use crate::lexicon::WordAlignment;
use crate::prosody::ProsodicFeatures;

/// Per-syllable class probabilities; column 0 is unstressed, column 1 stressed.
#[derive(Debug, Clone, PartialEq)]
pub struct StressPosterior {
    probs: Matrix,
}

impl StressPosterior {
    pub fn new(probs: Matrix) -> Result<Self> {
        if probs.cols() != 2 {
            return Err(Error::Shape(format!(
                "posterior must have 2 columns, got {}",
                probs.cols()
            )));
        }
        for r in 0..probs.rows() {
            let row = probs.row(r);
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-6
            {
                return Err(Error::Shape(format!(
                    "posterior row {r} {row:?} is not a distribution"
                )));
            }
        }
        Ok(StressPosterior { probs })
    }

    pub(crate) fn from_logits(logits: &Matrix) -> Self {
        let mut probs = logits.clone();
        for r in 0..probs.rows() {
            super::tensor::softmax_in_place(probs.row_mut(r));
        }
        StressPosterior { probs }
    }

    pub fn probabilities(&self) -> &Matrix {
        &self.probs
    }

    pub fn syllables(&self) -> usize {
        self.probs.rows()
    }

    pub fn stressed(&self, syllable: usize) -> f64 {
        self.probs.get(syllable, 1)
    }

    /// Probability of `class` (true = stressed) at `syllable`.
    pub fn prob(&self, syllable: usize, stressed: bool) -> f64 {
        self.probs.get(syllable, stressed as usize)
    }

    /// Argmax class per syllable; ties resolve to unstressed.
    pub fn predicted(&self) -> Vec<bool> {
        (0..self.syllables())
            .map(|k| self.probs.get(k, 1) > self.probs.get(k, 0))
            .collect()
    }

    /// The first `rows` syllables.
    pub fn truncated(&self, rows: usize) -> StressPosterior {
        StressPosterior {
            probs: Matrix::from_vec(rows, 2, self.probs.as_slice()[..2 * rows].to_vec()),
        }
    }
}

/// Inverted-dropout masks (entries 0 or 1/(1-p)) for one training example.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub gru: Matrix,
    pub hidden: [Matrix; 3],
    pub output: Matrix,
}

impl DropoutMasks {
    pub fn sample(rng: &mut impl Rng, config: &ModelConfig, tokens: usize, rows: usize) -> Self {
        let p = config.dropout;
        let keep = 1.0 / (1.0 - p);
        let mut draw = |r: usize, c: usize| {
            let mut m = Matrix::zeros(r, c);
            for x in m.as_mut_slice() {
                *x = if rng.random::<f64>() < p { 0.0 } else { keep };
            }
            m
        };
        let h = config.head_units;
        DropoutMasks {
            gru: draw(tokens, config.gru_units),
            hidden: [draw(rows, h), draw(rows, h), draw(rows, h)],
            output: draw(rows, 2),
        }
    }
}

/// Syllable-level features together with the attention that produced them.
#[derive(Debug, Clone)]
pub struct PooledFeatures {
    /// rows × 3: pooled F0, pooled intensity, pooled duration.
    pub features: Matrix,
    /// rows × frames.
    pub frame_attention: Attention,
    /// rows × sub-phonemes.
    pub phone_attention: Attention,
}

/// Pool frame-level (F0, intensity) and sub-phoneme-level durations into
/// one feature row per syllable, using one-hot syllable queries.
pub fn pool_syllable_features(
    input: &ModelInput,
    encoded: &Encoded,
    config: &ModelConfig,
) -> Result<PooledFeatures> {
    if input.syllable_rows > config.max_syllables {
        return Err(Error::Model(format!(
            "{} syllables exceed max_syllables {}",
            input.syllable_rows, config.max_syllables
        )));
    }
    let queries = syllable_queries(input.syllable_rows, config.d_k());
    let frame_keys = upsample_to_frames(&encoded.frame_keys, &input.frame_map);
    let frame_values = Matrix::from_vec(input.frames.len(), 2, input.frames.concat());
    let frame_attention =
        masked_attention(&queries, &frame_keys, &frame_values, input.valid_frames)?;
    let durations = Matrix::from_vec(input.durations.len(), 1, input.durations.clone());
    let phone_attention = masked_attention(
        &queries,
        &encoded.phone_keys,
        &durations,
        input.valid_tokens,
    )?;

    let mut features = Matrix::zeros(input.syllable_rows, 3);
    for k in 0..input.syllable_rows {
        features.set(k, 0, frame_attention.output.get(k, 0));
        features.set(k, 1, frame_attention.output.get(k, 1));
        features.set(k, 2, phone_attention.output.get(k, 0));
    }
    Ok(PooledFeatures {
        features,
        frame_attention,
        phone_attention,
    })
}

/// Activations of one forward pass, kept for inspection and backprop.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub posterior: StressPosterior,
    /// rows × 3 syllable features fed to the ratio layer.
    pub syllable_features: Matrix,
    /// rows × 9 ratio-layer output.
    pub ratios: Matrix,
    pub(crate) encoded: Option<Encoded>,
    pub pooled: Option<PooledFeatures>,
    head: HeadCache,
}

impl ForwardPass {
    /// Frame-to-syllable attention weights (syllables × frames), when attention is used.
    pub fn frame_attention(&self) -> Option<&Matrix> {
        self.pooled.as_ref().map(|p| &p.frame_attention.weights)
    }

    /// Sub-phoneme-to-syllable attention weights (syllables × sub-phonemes).
    pub fn phone_attention(&self) -> Option<&Matrix> {
        self.pooled.as_ref().map(|p| &p.phone_attention.weights)
    }

    /// Gradients of a scalar objective given its gradient with respect to
    /// the (post-dropout) output logits.
    pub fn backward(
        &self,
        input: &ModelInput,
        params: &ModelParameters,
        config: &ModelConfig,
        d_logits: &Matrix,
        dropout: Option<&DropoutMasks>,
    ) -> ModelParameters {
        let mut grads = ModelParameters::zeros(config);
        let d_ratio = head_backward(&self.head, params, d_logits, dropout, &mut grads);
        let d_features = differential_backward(&self.syllable_features, input.syllables, &d_ratio);

        let (Some(enc), Some(pooled)) = (&self.encoded, &self.pooled) else {
            return grads;
        };
        let rows = input.syllable_rows;
        let queries = syllable_queries(rows, config.d_k());

        let mut d_frame_out = Matrix::zeros(rows, 2);
        let mut d_phone_out = Matrix::zeros(rows, 1);
        for k in 0..rows {
            d_frame_out.set(k, 0, d_features.get(k, 0));
            d_frame_out.set(k, 1, d_features.get(k, 1));
            d_phone_out.set(k, 0, d_features.get(k, 2));
        }
        let frame_values = Matrix::from_vec(input.frames.len(), 2, input.frames.concat());
        let d_frame_keys_up = attention_key_grad(
            &queries,
            &frame_values,
            &pooled.frame_attention.weights,
            &d_frame_out,
        );
        let d_frame_keys = downsample_grad(&d_frame_keys_up, &input.frame_map, input.tokens.len());
        let durations = Matrix::from_vec(input.durations.len(), 1, input.durations.clone());
        let d_phone_keys = attention_key_grad(
            &queries,
            &durations,
            &pooled.phone_attention.weights,
            &d_phone_out,
        );

        encoder_backward(
            enc,
            params,
            &d_frame_keys,
            &d_phone_keys,
            dropout.map(|d| &d.gru),
            &mut grads,
        );
        grads
    }
}

/// Full model: encoder, both attentions (or nucleus means), ratio layer, head.
/// `dropout = None` is inference mode.
pub fn forward(
    input: &ModelInput,
    params: &ModelParameters,
    config: &ModelConfig,
    dropout: Option<&DropoutMasks>,
) -> Result<ForwardPass> {
    input.check(config)?;
    let (syllable_features, encoded, pooled) = match config.pooling {
        Pooling::Attention => {
            let enc = encode_subphonemes(
                &input.tokens,
                input.valid_tokens,
                config,
                params,
                dropout.map(|d| &d.gru),
            )?;
            let pooled = pool_syllable_features(input, &enc, config)?;
            (pooled.features.clone(), Some(enc), Some(pooled))
        }
        Pooling::NucleusMean => {
            let rows: Vec<Vec<f64>> = input.nucleus.iter().map(|r| r.to_vec()).collect();
            (Matrix::from_rows(&rows), None, None)
        }
    };
    let ratios = differential_bidirectional(&syllable_features, input.syllables);
    let (posterior, head) = head_forward(&ratios, params, dropout);
    Ok(ForwardPass {
        posterior,
        syllable_features,
        ratios,
        encoded,
        pooled,
        head,
    })
}

/// Inference on one aligned word.
pub fn forward_word(
    word: &WordAlignment,
    features: &ProsodicFeatures,
    params: &ModelParameters,
    config: &ModelConfig,
) -> Result<ForwardPass> {
    forward(&ModelInput::new(word, features)?, params, config, None)
}
