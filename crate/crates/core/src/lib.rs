//! Lexical stress error detection for multi-syllable English words.

#![allow(clippy::needless_range_loop)]

pub mod augmentation;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod prosody;
pub mod training;

pub use error::{Error, Result};
