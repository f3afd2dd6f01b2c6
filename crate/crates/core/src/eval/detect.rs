use crate::error::{Error, Result};
use crate::lexicon::StressPattern;
use crate::model::StressPosterior;

/// Word-level verdict for one posterior against the canonical pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub predicted: Vec<bool>,
    pub stressed_prob: Vec<f64>,
    /// Probability of the non-canonical class, per syllable.
    pub mismatch: Vec<f64>,
    /// Largest mismatch probability over the word.
    pub score: f64,
    pub flagged: bool,
}

/// A word is flagged when some syllable's argmax disagrees with the
/// canonical stress and its mismatch probability exceeds `threshold`.
pub fn detect(
    canonical: &StressPattern,
    posterior: &StressPosterior,
    threshold: f64,
) -> Result<DetectionResult> {
    if canonical.len() != posterior.syllables() {
        return Err(Error::Shape(format!(
            "canonical pattern has {} syllables, posterior {}",
            canonical.len(),
            posterior.syllables()
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Eval(format!("threshold {threshold} outside [0, 1]")));
    }
    let predicted = posterior.predicted();
    let mismatch: Vec<f64> = (0..canonical.len())
        .map(|k| posterior.prob(k, !canonical.is_stressed(k)))
        .collect();
    let flagged = (0..canonical.len())
        .any(|k| predicted[k] != canonical.is_stressed(k) && mismatch[k] > threshold);
    Ok(DetectionResult {
        stressed_prob: (0..canonical.len())
            .map(|k| posterior.stressed(k))
            .collect(),
        score: mismatch.iter().copied().fold(0.0, f64::max),
        predicted,
        mismatch,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;

    fn posterior(rows: &[[f64; 2]]) -> StressPosterior {
        StressPosterior::new(Matrix::from_rows(
            &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        ))
        .unwrap()
    }

    #[test]
    fn swapped_stress_is_flagged() {
        let canon = StressPattern::from_bits(&[1, 0]).unwrap();
        let r = detect(&canon, &posterior(&[[0.9, 0.1], [0.2, 0.8]]), 0.5).unwrap();
        assert_eq!(r.predicted, vec![false, true]);
        assert!(r.flagged);
        assert!((r.score - 0.9).abs() < 1e-15);
        assert!(
            !detect(&canon, &posterior(&[[0.9, 0.1], [0.2, 0.8]]), 1.0)
                .unwrap()
                .flagged
        );
    }

    #[test]
    fn agreement_is_never_flagged() {
        let canon = StressPattern::from_bits(&[0, 1, 0]).unwrap();
        let p = posterior(&[[0.6, 0.4], [0.45, 0.55], [0.99, 0.01]]);
        for t in [0.0, 0.1, 0.3, 0.5, 0.9] {
            assert!(!detect(&canon, &p, t).unwrap().flagged);
        }
    }

    #[test]
    fn length_mismatch() {
        let canon = StressPattern::from_bits(&[0, 1, 0]).unwrap();
        assert!(detect(&canon, &posterior(&[[0.5, 0.5], [0.5, 0.5]]), 0.5).is_err());
    }
}
