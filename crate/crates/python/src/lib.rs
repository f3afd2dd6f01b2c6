//! Python bindings: corpus generation, training, detection and the
//! evaluation statistics.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lexstress::augmentation::{generate_corpus as generate, CorpusSpec};
use lexstress::eval::{
    binomial_ci as ci, detect_all, posteriors, pr_curve as curve, precision_at_recall,
};
use lexstress::lexicon::Source;
use lexstress::model::{
    dot_product_attention, forward, Checkpoint, Matrix, ModelConfig, ModelParameters, Pooling,
};
use lexstress::prosody::{compute_f0 as f0_track, AudioSignal, FrameGrid, PitchSettings};
use lexstress::training::gradcheck::{gradient_check as check, random_instance, DEFAULT_STEP};
use lexstress::training::{load_examples, train as fit, Split, TrainConfig, TrainingExample};

type Rows = Vec<Vec<f64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_source(s: &str) -> PyResult<Source> {
    match s {
        "human" => Ok(Source::Human),
        "synthetic" => Ok(Source::Synthetic),
        other => Err(err(format!(
            "unknown source `{other}`; expected human or synthetic"
        ))),
    }
}

fn parse_split(s: &str) -> PyResult<Split> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| err(format!("unknown split `{s}`")))
}

/// Words with alignments, prosodic features, labels and split tags.
#[pyclass(module = "lexstress_py", frozen)]
struct Dataset {
    items: Vec<(Split, TrainingExample)>,
}

#[pymethods]
impl Dataset {
    /// Load every entry of a manifest file.
    #[staticmethod]
    fn from_manifest(path: PathBuf) -> PyResult<Self> {
        Ok(Dataset {
            items: load_examples(path).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.items.len()
    }

    /// The entries of one split ("train", "validation" or "test").
    fn split(&self, name: &str) -> PyResult<Dataset> {
        let want = parse_split(name)?;
        Ok(Dataset {
            items: self
                .items
                .iter()
                .filter(|(s, _)| *s == want)
                .cloned()
                .collect(),
        })
    }

    fn words(&self) -> Vec<String> {
        self.items
            .iter()
            .map(|(_, e)| e.alignment.word.clone())
            .collect()
    }

    fn speakers(&self) -> Vec<String> {
        self.items
            .iter()
            .map(|(_, e)| e.speaker().to_string())
            .collect()
    }

    /// Whether each word was spoken with a non-canonical stress pattern.
    fn errors(&self) -> Vec<bool> {
        self.items.iter().map(|(_, e)| e.has_error()).collect()
    }

    fn canonical(&self) -> Vec<Vec<u8>> {
        self.items
            .iter()
            .map(|(_, e)| e.alignment.canonical.bits())
            .collect()
    }

    fn labels(&self) -> Vec<Vec<u8>> {
        self.items.iter().map(|(_, e)| e.label.bits()).collect()
    }
}

impl Dataset {
    fn examples(&self) -> Vec<TrainingExample> {
        self.items.iter().map(|(_, e)| e.clone()).collect()
    }
}

/// A generated corpus.
#[pyclass(module = "lexstress_py", frozen)]
struct Corpus {
    inner: lexstress::augmentation::Corpus,
}

#[pymethods]
impl Corpus {
    fn __len__(&self) -> usize {
        self.inner.examples.len()
    }

    /// Per-split speaker, word and error counts as a table.
    fn summary(&self) -> String {
        self.inner.summary().to_string()
    }

    /// Write alignment, feature and manifest files; returns the manifest path.
    fn write(&self, dir: PathBuf) -> PyResult<PathBuf> {
        self.inner.write(&dir).map_err(err)?;
        Ok(self.inner.manifest_path(&dir))
    }

    fn dataset(&self) -> Dataset {
        Dataset {
            items: self
                .inner
                .splits
                .iter()
                .copied()
                .zip(self.inner.examples.iter().cloned())
                .collect(),
        }
    }
}

/// Generate a corpus. `options` is a JSON object with any further corpus
/// spec fields (jitter, validation_speakers, split, effects, ...).
#[pyfunction]
#[pyo3(signature = (name, word_count, speakers, error_rate, source = "human", seed = 0, options = None))]
fn generate_corpus(
    name: &str,
    word_count: usize,
    speakers: usize,
    error_rate: f64,
    source: &str,
    seed: u64,
    options: Option<&str>,
) -> PyResult<Corpus> {
    let mut spec = CorpusSpec::new(
        name,
        word_count,
        speakers,
        error_rate,
        parse_source(source)?,
        seed,
    );
    if let Some(extra) = options {
        let mut value = serde_json::to_value(&spec).map_err(err)?;
        let extra: serde_json::Value = serde_json::from_str(extra).map_err(err)?;
        let serde_json::Value::Object(fields) = extra else {
            return Err(err("options must be a JSON object"));
        };
        for (k, v) in fields {
            value[k] = v;
        }
        spec = serde_json::from_value(value).map_err(err)?;
    }
    Ok(Corpus {
        inner: generate(&spec).map_err(err)?,
    })
}

/// Model configuration and weights.
#[pyclass(module = "lexstress_py", frozen)]
struct Model {
    config: ModelConfig,
    params: ModelParameters,
    #[pyo3(get)]
    train_loss: Vec<f64>,
    #[pyo3(get)]
    val_loss: Vec<Option<f64>>,
    #[pyo3(get)]
    best_epoch: usize,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let c = Checkpoint::load(path).map_err(err)?;
        Ok(Model {
            config: c.config,
            params: c.params,
            train_loss: Vec::new(),
            val_loss: Vec::new(),
            best_epoch: 0,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        Checkpoint::new(self.config.clone(), self.params.clone())
            .and_then(|c| c.save(path))
            .map_err(err)
    }

    #[getter]
    fn attention(&self) -> bool {
        self.config.pooling == Pooling::Attention
    }

    fn parameter_count(&self) -> usize {
        self.params.parameter_count()
    }

    /// Stressed-class probability per syllable of every word.
    fn posteriors(&self, data: &Dataset) -> PyResult<Vec<Vec<f64>>> {
        let post = posteriors(&self.params, &self.config, &data.examples()).map_err(err)?;
        Ok(post
            .iter()
            .map(|p| (0..p.syllables()).map(|k| p.stressed(k)).collect())
            .collect())
    }

    /// (score, flagged) per word; the score is the largest mismatch probability.
    #[pyo3(signature = (data, threshold = 0.5))]
    fn detect(&self, data: &Dataset, threshold: f64) -> PyResult<Vec<(f64, bool)>> {
        let results =
            detect_all(&self.params, &self.config, &data.examples(), threshold).map_err(err)?;
        Ok(results.iter().map(|r| (r.score, r.flagged)).collect())
    }

    /// Frame- and sub-phoneme-level attention of word `index` (syllables × positions).
    fn attention_weights(&self, data: &Dataset, index: usize) -> PyResult<(Rows, Rows)> {
        let (_, example) = data
            .items
            .get(index)
            .ok_or_else(|| err(format!("no word {index}")))?;
        let input = example.input().map_err(err)?;
        let pass = forward(&input, &self.params, &self.config, None).map_err(err)?;
        let rows = |m: Option<&Matrix>, cols: usize| -> PyResult<Vec<Vec<f64>>> {
            let m = m.ok_or_else(|| err("this model has no attention"))?;
            Ok((0..m.rows()).map(|r| m.row(r)[..cols].to_vec()).collect())
        };
        Ok((
            rows(pass.frame_attention(), input.valid_frames)?,
            rows(pass.phone_attention(), input.valid_tokens)?,
        ))
    }
}

/// Train a model. `config` is a JSON training config; `attention=False`
/// trains the nucleus-mean baseline.
#[pyfunction]
#[pyo3(signature = (train_set, validation = None, config = None, attention = true))]
fn train(
    train_set: &Dataset,
    validation: Option<&Dataset>,
    config: Option<&str>,
    attention: bool,
) -> PyResult<Model> {
    let cfg: TrainConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => TrainConfig::default(),
    };
    let model = ModelConfig {
        pooling: if attention {
            Pooling::Attention
        } else {
            Pooling::NucleusMean
        },
        ..ModelConfig::default()
    };
    let val = validation.map(Dataset::examples).unwrap_or_default();
    let out = fit(&train_set.examples(), &val, &model, &cfg).map_err(err)?;
    Ok(Model {
        config: model,
        params: out.params,
        train_loss: out.log.iter().map(|e| e.train_loss).collect(),
        val_loss: out.log.iter().map(|e| e.val_loss).collect(),
        best_epoch: out.best_epoch,
    })
}

/// Precision-recall curve: dict with `auc`, `thresholds`, `precision`, `recall`.
#[pyfunction]
#[pyo3(signature = (scores, labels, target_recall = None))]
fn pr_curve(
    py: Python<'_>,
    scores: Vec<f64>,
    labels: Vec<bool>,
    target_recall: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let c = curve(&scores, &labels).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("auc", c.auc)?;
    d.set_item(
        "thresholds",
        c.points.iter().map(|p| p.threshold).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "precision",
        c.points.iter().map(|p| p.precision).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "recall",
        c.points.iter().map(|p| p.recall).collect::<Vec<_>>(),
    )?;
    if let Some(t) = target_recall {
        let p = precision_at_recall(&c, t).map_err(err)?;
        d.set_item("operating_point", (p.threshold, p.precision, p.recall))?;
    }
    Ok(d.into_any().unbind())
}

/// Exact (Clopper-Pearson) interval for `successes` out of `trials`.
#[pyfunction]
#[pyo3(signature = (successes, trials, level = 0.95))]
fn binomial_ci(successes: u64, trials: u64, level: f64) -> PyResult<(f64, f64)> {
    ci(successes, trials, level).map_err(err)
}

/// Scaled dot-product attention on row-major nested lists: (output, weights).
#[pyfunction]
fn attention(q: Vec<Vec<f64>>, k: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<(Rows, Rows)> {
    let a = dot_product_attention(
        &Matrix::from_rows(&q),
        &Matrix::from_rows(&k),
        &Matrix::from_rows(&v),
    )
    .map_err(err)?;
    Ok((a.output.to_rows(), a.weights.to_rows()))
}

/// F0 (Hz) and voicing per 10 ms frame of a 16 kHz mono signal.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate = 16000))]
fn compute_f0(samples: Vec<f64>, sample_rate: u32) -> PyResult<(Vec<f64>, Vec<bool>)> {
    let audio = AudioSignal::new(samples, sample_rate).map_err(err)?;
    let grid = FrameGrid::new(0.0, audio.duration());
    let track = f0_track(&audio, &grid, &PitchSettings::default()).map_err(err)?;
    Ok((track.f0, track.voiced))
}

/// Largest relative gradient error over all parameter blocks of one random instance.
#[pyfunction]
#[pyo3(signature = (seed, attention = true))]
fn gradient_check(seed: u64, attention: bool) -> PyResult<f64> {
    let pooling = if attention {
        Pooling::Attention
    } else {
        Pooling::NucleusMean
    };
    let (config, batch, labels, params) = random_instance(seed, pooling);
    let report = check(&batch, &labels, &params, &config, Some(seed), DEFAULT_STEP).map_err(err)?;
    Ok(report.max_rel_error())
}

#[pymodule]
fn lexstress_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Corpus>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(pr_curve, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_ci, m)?)?;
    m.add_function(wrap_pyfunction!(attention, m)?)?;
    m.add_function(wrap_pyfunction!(compute_f0, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_check, m)?)?;
    Ok(())
}
