use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown phoneme symbol `{0}`")]
    UnknownSymbol(String),

    #[error("vowel `{0}` is missing a stress digit (0, 1 or 2)")]
    MissingStressDigit(String),

    #[error("`{0}` has {1} vowel(s); at least two syllables are required")]
    TooFewSyllables(String, usize),

    #[error("invalid alignment: {0}")]
    InvalidAlignment(String),

    #[error("record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("audio: {0}")]
    Audio(String),

    #[error("features: {0}")]
    Features(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("model: {0}")]
    Model(String),

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(String),

    #[error("training: {0}")]
    Training(String),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    /// Attach the file a failure came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn record(index: usize, err: impl std::fmt::Display) -> Self {
        Error::Record {
            index,
            message: err.to_string(),
        }
    }
}
