use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::INVENTORY_SIZE;

/// How syllable-level features are obtained from the frame/phoneme tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Frame-level and sub-phoneme-level dot-product attention.
    Attention,
    /// Mean acoustic values over each syllable's vowel (no attention).
    NucleusMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Longest supported word in syllables; also the query/key width.
    pub max_syllables: usize,
    pub gru_units: usize,
    pub head_units: usize,
    pub dropout: f64,
    pub inventory_size: usize,
    pub pooling: Pooling,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            max_syllables: 6,
            gru_units: 4,
            head_units: 4,
            dropout: 0.24,
            inventory_size: INVENTORY_SIZE,
            pooling: Pooling::Attention,
        }
    }
}

impl ModelConfig {
    /// Query and key width; queries are one-hot syllable indices.
    pub fn d_k(&self) -> usize {
        self.max_syllables
    }

    /// Width of a one-hot encoded sub-phoneme:
    /// phoneme id, syllable index, vowel flag, left/right half.
    pub fn token_width(&self) -> usize {
        self.inventory_size + self.max_syllables + 2 + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_syllables < 2
            || self.gru_units == 0
            || self.head_units == 0
            || self.inventory_size == 0
        {
            return Err(Error::Model(format!(
                "counts must be positive and max_syllables >= 2: {self:?}"
            )));
        }
        if self.inventory_size < INVENTORY_SIZE {
            return Err(Error::Model(format!(
                "inventory_size {} is smaller than the phoneme inventory ({INVENTORY_SIZE})",
                self.inventory_size
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Model(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}
