use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::loss::{example_terms, summarize, ExampleTerms, LossReport};
use crate::error::{Error, Result};
use crate::lexicon::StressPattern;
use crate::model::{forward, DropoutMasks, ModelConfig, ModelInput, ModelParameters};

/// Loss and its gradient over one batch.
#[derive(Debug, Clone)]
pub struct GradientResult {
    pub loss: LossReport,
    pub grads: ModelParameters,
}

/// One dropout mask set per example, drawn in batch order from `seed`.
/// `None` (or zero dropout) means inference mode.
pub fn sample_dropout(
    batch: &[ModelInput],
    config: &ModelConfig,
    seed: Option<u64>,
) -> Option<Vec<DropoutMasks>> {
    let seed = seed.filter(|_| config.dropout > 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(
        batch
            .iter()
            .map(|x| DropoutMasks::sample(&mut rng, config, x.tokens.len(), x.syllable_rows))
            .collect(),
    )
}

fn check_batch(batch: &[ModelInput], labels: &[StressPattern]) -> Result<()> {
    if batch.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} inputs for {} labels",
            batch.len(),
            labels.len()
        )));
    }
    if batch.is_empty() {
        return Err(Error::Training("empty batch".into()));
    }
    for (i, (x, l)) in batch.iter().zip(labels).enumerate() {
        if l.len() != x.syllables {
            return Err(Error::Shape(format!(
                "example {i}: label has {} syllables, input {}",
                l.len(),
                x.syllables
            )));
        }
    }
    Ok(())
}

fn terms_for(
    batch: &[ModelInput],
    labels: &[StressPattern],
    params: &ModelParameters,
    config: &ModelConfig,
    masks: Option<&[DropoutMasks]>,
) -> Result<Vec<ExampleTerms>> {
    batch
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let pass = forward(x, params, config, masks.map(|m| &m[i]))?;
            example_terms(&pass.posterior, &labels[i])
        })
        .collect()
}

/// Batch loss only, with the same dropout convention as [`compute_gradients`].
pub fn batch_loss(
    batch: &[ModelInput],
    labels: &[StressPattern],
    params: &ModelParameters,
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<LossReport> {
    check_batch(batch, labels)?;
    let masks = sample_dropout(batch, config, seed);
    Ok(summarize(&terms_for(
        batch,
        labels,
        params,
        config,
        masks.as_deref(),
    )?))
}

/// Exact gradient of the batch's mean masked NLL. Examples run in
/// parallel; their gradients are summed in batch order.
pub fn compute_gradients(
    batch: &[ModelInput],
    labels: &[StressPattern],
    params: &ModelParameters,
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<GradientResult> {
    check_batch(batch, labels)?;
    let masks = sample_dropout(batch, config, seed);
    let masks = masks.as_deref();
    let total: usize = labels.iter().map(|l| l.len()).sum();
    let scale = 1.0 / total as f64;

    let per_example: Vec<(ExampleTerms, ModelParameters)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mask = masks.map(|m| &m[i]);
            let pass = forward(x, params, config, mask)?;
            let mut terms = example_terms(&pass.posterior, &labels[i])?;
            let mut d_logits = terms.d_logits.clone();
            d_logits.as_mut_slice().iter_mut().for_each(|d| *d *= scale);
            let grads = pass.backward(x, params, config, &d_logits, mask);
            terms.d_logits = d_logits;
            Ok((terms, grads))
        })
        .collect::<Result<_>>()?;

    let mut grads = ModelParameters::zeros(config);
    for (_, g) in &per_example {
        grads.add_scaled(g, 1.0);
    }
    grads.check_finite()?;
    let terms: Vec<ExampleTerms> = per_example.into_iter().map(|(t, _)| t).collect();
    Ok(GradientResult {
        loss: summarize(&terms),
        grads,
    })
}

/// Plain SGD: `w ← w − lr·g`.
pub fn sgd_step(params: &mut ModelParameters, grads: &ModelParameters, learning_rate: f64) {
    params.add_scaled(grads, -learning_rate);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pooling;
    use crate::training::gradcheck::random_instance;

    #[test]
    fn sgd_arithmetic() {
        let config = ModelConfig::default();
        let mut p = ModelParameters::zeros(&config);
        p.output.bias[0] = 1.0;
        let mut g = ModelParameters::zeros(&config);
        g.output.bias[0] = 0.5;
        let before = p.clone();
        sgd_step(&mut p, &g, 0.0);
        assert_eq!(p, before);
        sgd_step(&mut p, &ModelParameters::zeros(&config), 0.1);
        assert_eq!(p, before);
        sgd_step(&mut p, &g, 0.1);
        assert!((p.output.bias[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn gradients_are_deterministic_and_scale_linearly() {
        let (config, batch, labels, params) = random_instance(3, Pooling::Attention);
        let a = compute_gradients(&batch, &labels, &params, &config, Some(9)).unwrap();
        let b = compute_gradients(&batch, &labels, &params, &config, Some(9)).unwrap();
        assert_eq!(a.grads, b.grads);
        // duplicating the batch leaves the mean loss and its gradient unchanged
        let batch2: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let labels2: Vec<_> = labels.iter().chain(&labels).cloned().collect();
        let c = compute_gradients(&batch2, &labels2, &params, &config, None).unwrap();
        let d = compute_gradients(&batch, &labels, &params, &config, None).unwrap();
        assert!((c.loss.mean - d.loss.mean).abs() < 1e-12);
        let mut diff = c.grads.clone();
        diff.add_scaled(&d.grads, -1.0);
        assert!(diff.norm() < 1e-12 * (1.0 + d.grads.norm()));
    }

    #[test]
    fn saturated_correct_posterior_has_zero_gradient() {
        let (config, batch, labels, mut params) = random_instance(4, Pooling::NucleusMean);
        // drive every row to "unstressed" with certainty, and label all rows unstressed
        params
            .output
            .weight
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = 0.0);
        params.output.bias = vec![800.0, -800.0];
        let labels: Vec<_> = labels
            .iter()
            .map(|l| StressPattern::new(vec![false; l.len()]))
            .collect();
        let r = compute_gradients(&batch, &labels, &params, &config, None).unwrap();
        assert!(r.grads.norm() < 1e-12);
        assert_eq!(r.loss.mean, 0.0);
    }
}
