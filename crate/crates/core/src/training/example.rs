use crate::error::{Error, Result};
use crate::lexicon::{Source, StressPattern, WordAlignment};
use crate::model::ModelInput;
use crate::prosody::ProsodicFeatures;

/// An aligned word, its prosody and the stress pattern actually spoken.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub alignment: WordAlignment,
    pub features: ProsodicFeatures,
    pub label: StressPattern,
    pub source: Source,
}

impl TrainingExample {
    /// The label is the realized pattern when annotated, else the canonical one.
    pub fn new(alignment: WordAlignment, features: ProsodicFeatures) -> Result<Self> {
        features.validate(&alignment)?;
        let label = alignment
            .realized
            .clone()
            .unwrap_or_else(|| alignment.canonical.clone());
        if label.len() != alignment.syllable_count() {
            return Err(Error::Shape(format!(
                "`{}`: label has {} syllables, alignment {}",
                alignment.word,
                label.len(),
                alignment.syllable_count()
            )));
        }
        Ok(TrainingExample {
            source: alignment.source,
            alignment,
            features,
            label,
        })
    }

    pub fn speaker(&self) -> &str {
        &self.alignment.speaker_id
    }

    /// Whether the realized stress differs from the canonical pattern.
    pub fn has_error(&self) -> bool {
        self.label != self.alignment.canonical
    }

    pub fn input(&self) -> Result<ModelInput> {
        ModelInput::new(&self.alignment, &self.features)
    }
}
