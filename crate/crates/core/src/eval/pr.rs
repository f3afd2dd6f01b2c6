use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operating point when every score ≥ `threshold` is called positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub false_positives: usize,
}

/// Points in order of decreasing threshold (increasing recall).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub total: usize,
    pub auc: f64,
}

/// One point per distinct score; equal scores enter together.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PrCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Eval(format!("non-finite score {bad}")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Eval(format!(
            "precision-recall needs both classes; got {positives} positives of {}",
            labels.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
            true_positives: tp,
            false_positives: fp,
        });
    }
    let auc = trapezoid_auc(&points);
    Ok(PrCurve {
        points,
        positives,
        total: labels.len(),
        auc,
    })
}

/// Trapezoidal area over recall, starting from (0, precision of the first point).
fn trapezoid_auc(points: &[PrPoint]) -> f64 {
    let mut prev = (0.0, points.first().map_or(0.0, |p| p.precision));
    let mut area = 0.0;
    for p in points {
        area += (p.recall - prev.0) * (p.precision + prev.1) / 2.0;
        prev = (p.recall, p.precision);
    }
    area
}

/// The point with the smallest recall ≥ `target` (highest precision among
/// equal recalls). Returns `(precision, recall)`.
pub fn precision_at_recall(curve: &PrCurve, target: f64) -> Result<PrPoint> {
    let best = curve
        .points
        .iter()
        .filter(|p| p.recall >= target)
        .min_by(|a, b| {
            a.recall
                .total_cmp(&b.recall)
                .then(b.precision.total_cmp(&a.precision))
        });
    best.copied()
        .ok_or_else(|| Error::Eval(format!("no operating point reaches recall {target}")))
}
