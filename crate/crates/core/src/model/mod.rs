//! Attention-based syllable stress classifier.
//!
//! Sub-phonemes (one-hot phoneme id, syllable index, vowel flag, half) are
//! encoded by a GRU and projected to keys. One-hot syllable queries attend
//! over frames (values: F0, intensity) and over sub-phonemes (values:
//! durations). The pooled K × 3 syllable features go through a parameter-free
//! ratio layer against both neighbours and a small tanh head that outputs a
//! stressed/unstressed distribution per syllable.

mod attention;
mod checkpoint;
mod config;
mod encoder;
mod forward;
mod head;
mod input;
pub(crate) mod params;
mod ratio;
mod tensor;

pub use attention::{
    dot_product_attention, masked_attention, syllable_queries, upsample_to_frames, Attention,
};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Pooling};
pub use encoder::{encode_subphonemes, Encoded};
pub use forward::{
    forward, forward_word, pool_syllable_features, DropoutMasks, ForwardPass, PooledFeatures,
    StressPosterior,
};
pub use head::classify_head;
pub use input::{ModelInput, SubphonemeToken};
pub use params::{Dense, GruParams, ModelParameters, HEAD_INPUTS};
pub use ratio::{differential_bidirectional, RATIO_FLOOR};
pub use tensor::Matrix;
