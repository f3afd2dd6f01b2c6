use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalReport, ModelReport};
use crate::augmentation::{generate_corpus, Corpus, CorpusSpec, SynthesisOptions};
use crate::error::{Error, Result};
use crate::lexicon::Source;
use crate::model::{ModelConfig, Pooling};
use crate::training::{train, InitScheme, Split, TrainConfig, TrainOutcome, TrainingExample};

/// Attention on/off × synthetic augmentation on/off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "Att_TTS")]
    AttTts,
    #[serde(rename = "Att_NoTTS")]
    AttNoTts,
    #[serde(rename = "NoAtt_TTS")]
    NoAttTts,
    #[serde(rename = "NoAtt_NoTTS")]
    NoAttNoTts,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::AttTts,
        Variant::AttNoTts,
        Variant::NoAttTts,
        Variant::NoAttNoTts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::AttTts => "Att_TTS",
            Variant::AttNoTts => "Att_NoTTS",
            Variant::NoAttTts => "NoAtt_TTS",
            Variant::NoAttNoTts => "NoAtt_NoTTS",
        }
    }

    pub fn pooling(self) -> Pooling {
        match self {
            Variant::AttTts | Variant::AttNoTts => Pooling::Attention,
            Variant::NoAttTts | Variant::NoAttNoTts => Pooling::NucleusMean,
        }
    }

    pub fn augmented(self) -> bool {
        matches!(self, Variant::AttTts | Variant::NoAttTts)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Corpora shared by all variants.
#[derive(Debug, Clone, Default)]
pub struct AblationData {
    pub train: Vec<TrainingExample>,
    pub validation: Vec<TrainingExample>,
    pub synthetic: Vec<TrainingExample>,
    pub test: Vec<TrainingExample>,
}

/// The three generated corpora of the scaled ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationCorpora {
    pub human: CorpusSpec,
    pub synthetic: CorpusSpec,
    pub test: CorpusSpec,
}

impl AblationCorpora {
    /// 4000 human words from 40 speakers (5% errors, 12 speakers labeled
    /// from the lexicon, 6 held out for validation), 2000 single-speaker
    /// synthetic words with 50% errors, and 2108 test words from 20 new
    /// speakers with 9% errors.
    pub fn new(seed: u64) -> Self {
        let mut human = CorpusSpec::new(
            "human",
            4000,
            40,
            0.05,
            Source::Human,
            seed.wrapping_add(11),
        );
        human.validation_speakers = 6;
        human.lexicon_labeled_speakers = 12;
        human.jitter = 0.3;
        human.options = SynthesisOptions::human();
        let mut synthetic = CorpusSpec::new(
            "tts",
            2000,
            1,
            0.5,
            Source::Synthetic,
            seed.wrapping_add(12),
        );
        synthetic.jitter = 0.05;
        synthetic.options = SynthesisOptions::synthetic();
        let mut test =
            CorpusSpec::new("test", 2108, 20, 0.09, Source::Human, seed.wrapping_add(13));
        test.split = Split::Test;
        test.jitter = 0.3;
        test.options = SynthesisOptions::human();
        AblationCorpora {
            human,
            synthetic,
            test,
        }
    }

    pub fn generate(&self) -> Result<(AblationData, [Corpus; 3])> {
        let human = generate_corpus(&self.human)?;
        let synthetic = generate_corpus(&self.synthetic)?;
        let test = generate_corpus(&self.test)?;
        let data = AblationData {
            train: human.split(Split::Train),
            validation: human.split(Split::Validation),
            synthetic: synthetic.split(Split::Train),
            test: test.split(Split::Test),
        };
        Ok((data, [human, synthetic, test]))
    }
}

impl Default for AblationCorpora {
    fn default() -> Self {
        AblationCorpora::new(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    /// Pooling is overridden per variant.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub target_recall: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            model: ModelConfig::default(),
            train: TrainConfig {
                epochs: 150,
                patience: 20,
                min_epochs: 60,
                init: InitScheme::Glorot,
                encoder_gain: 3.0,
                ..TrainConfig::default()
            },
            target_recall: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub report: EvalReport,
    pub models: Vec<(Variant, ModelConfig, TrainOutcome)>,
}

/// Train the four variants with the same seed and evaluate each on the
/// shared test set.
pub fn run_ablation(data: &AblationData, config: &AblationConfig) -> Result<AblationOutcome> {
    if data.test.is_empty() {
        return Err(Error::Eval("the ablation needs a test set".into()));
    }
    let results = Variant::ALL
        .par_iter()
        .map(|&variant| {
            let model = ModelConfig {
                pooling: variant.pooling(),
                ..config.model.clone()
            };
            let mut train_set = data.train.clone();
            if variant.augmented() {
                train_set.extend(data.synthetic.iter().cloned());
            }
            let outcome = train(&train_set, &data.validation, &model, &config.train)?;
            let report = ModelReport::evaluate(
                variant.name(),
                &outcome.params,
                &model,
                &data.test,
                config.target_recall,
            )?;
            Ok((variant, model, outcome, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut models = Vec::with_capacity(4);
    let mut rows = Vec::with_capacity(4);
    for (variant, model, outcome, report) in results {
        models.push((variant, model, outcome));
        rows.push(report);
    }
    Ok(AblationOutcome {
        report: EvalReport {
            target_recall: config.target_recall,
            models: rows,
        },
        models,
    })
}
