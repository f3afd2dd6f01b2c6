use crate::error::{Error, Result};
use crate::lexicon::StressPattern;
use crate::model::{Matrix, StressPosterior};

/// Probabilities are clamped to this before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Masked negative log-likelihood over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Mean over every unmasked syllable in the batch.
    pub mean: f64,
    /// Mean over each example's own syllables.
    pub per_example: Vec<f64>,
    pub syllables: usize,
    /// Syllables whose label probability hit [`PROB_FLOOR`].
    pub clamped: usize,
}

pub(crate) struct ExampleTerms {
    pub sum: f64,
    pub count: usize,
    pub clamped: usize,
    /// Gradient of `sum` w.r.t. the logits (rows past the label are zero).
    pub d_logits: Matrix,
}

pub(crate) fn example_terms(
    posterior: &StressPosterior,
    label: &StressPattern,
) -> Result<ExampleTerms> {
    let rows = posterior.syllables();
    if label.len() > rows {
        return Err(Error::Shape(format!(
            "label has {} syllables but the posterior only {rows}",
            label.len()
        )));
    }
    let mut terms = ExampleTerms {
        sum: 0.0,
        count: label.len(),
        clamped: 0,
        d_logits: Matrix::zeros(rows, 2),
    };
    for k in 0..label.len() {
        let target = label.is_stressed(k);
        let p = posterior.prob(k, target);
        if p < PROB_FLOOR {
            terms.sum -= PROB_FLOOR.ln();
            terms.clamped += 1;
            continue;
        }
        terms.sum -= p.ln();
        for c in 0..2 {
            let y = if (c == 1) == target { 1.0 } else { 0.0 };
            terms.d_logits.set(k, c, posterior.prob(k, c == 1) - y);
        }
    }
    Ok(terms)
}

/// Mean −log p(label) over unmasked syllables. Rows of a posterior past
/// its label's length are padding and contribute nothing.
pub fn nll_loss(posteriors: &[StressPosterior], labels: &[StressPattern]) -> Result<LossReport> {
    if posteriors.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} posteriors for {} labels",
            posteriors.len(),
            labels.len()
        )));
    }
    let terms = posteriors
        .iter()
        .zip(labels)
        .map(|(p, l)| example_terms(p, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&terms))
}

pub(crate) fn summarize(terms: &[ExampleTerms]) -> LossReport {
    let syllables: usize = terms.iter().map(|t| t.count).sum();
    let total: f64 = terms.iter().map(|t| t.sum).sum();
    LossReport {
        mean: if syllables == 0 {
            0.0
        } else {
            total / syllables as f64
        },
        per_example: terms
            .iter()
            .map(|t| {
                if t.count == 0 {
                    0.0
                } else {
                    t.sum / t.count as f64
                }
            })
            .collect(),
        syllables,
        clamped: terms.iter().map(|t| t.clamped).sum(),
    }
}
