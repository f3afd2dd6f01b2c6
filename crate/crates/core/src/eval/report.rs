use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    binomial_ci, detect, pr_curve, precision_at_recall, DetectionResult, PrCurve, PrPoint,
};
use crate::error::{Error, Result};
use crate::model::{forward, ModelConfig, ModelParameters, StressPosterior};
use crate::training::TrainingExample;

pub const CONFIDENCE_LEVEL: f64 = 0.95;

/// Posteriors for every example, computed in parallel.
pub fn posteriors(
    params: &ModelParameters,
    config: &ModelConfig,
    examples: &[TrainingExample],
) -> Result<Vec<StressPosterior>> {
    examples
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let input = e.input().map_err(|err| Error::record(i, err))?;
            forward(&input, params, config, None).map(|p| p.posterior)
        })
        .collect()
}

/// Detection for every example against its canonical pattern.
pub fn detect_all(
    params: &ModelParameters,
    config: &ModelConfig,
    examples: &[TrainingExample],
    threshold: f64,
) -> Result<Vec<DetectionResult>> {
    posteriors(params, config, examples)?
        .iter()
        .zip(examples)
        .map(|(p, e)| detect(&e.alignment.canonical, p, threshold))
        .collect()
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub words: usize,
    pub errors: usize,
    pub auc: f64,
    pub operating_point: PrPoint,
    pub precision_ci: (f64, f64),
    pub recall_ci: (f64, f64),
    #[serde(skip)]
    pub curve: Option<PrCurve>,
}

impl ModelReport {
    /// Summarize word-level scores against ground-truth error flags.
    pub fn from_scores(
        name: &str,
        scores: &[f64],
        errors: &[bool],
        target_recall: f64,
    ) -> Result<Self> {
        let curve = pr_curve(scores, errors)?;
        let point = precision_at_recall(&curve, target_recall)?;
        let tp = point.true_positives as u64;
        Ok(ModelReport {
            name: name.to_string(),
            words: curve.total,
            errors: curve.positives,
            auc: curve.auc,
            precision_ci: binomial_ci(tp, tp + point.false_positives as u64, CONFIDENCE_LEVEL)?,
            recall_ci: binomial_ci(tp, curve.positives as u64, CONFIDENCE_LEVEL)?,
            operating_point: point,
            curve: Some(curve),
        })
    }

    pub fn evaluate(
        name: &str,
        params: &ModelParameters,
        config: &ModelConfig,
        test: &[TrainingExample],
        target_recall: f64,
    ) -> Result<Self> {
        let scores: Vec<f64> = detect_all(params, config, test, 0.5)?
            .iter()
            .map(|d| d.score)
            .collect();
        let errors: Vec<bool> = test.iter().map(TrainingExample::has_error).collect();
        Self::from_scores(name, &scores, &errors, target_recall)
    }
}

/// Several models evaluated on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target_recall: f64,
    pub models: Vec<ModelReport>,
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Aligned plain-text table; precision and recall in percent.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>6} {:>7}  {:<22} {:<22}",
            "model", "words", "errors", "AUC", "precision (95% CI)", "recall (95% CI)"
        );
        for m in &self.models {
            let pct = |v: f64| 100.0 * v;
            let p = &m.operating_point;
            let _ = writeln!(
                s,
                "{:<14} {:>6} {:>6} {:>7.4}  {:<22} {:<22}",
                m.name,
                m.words,
                m.errors,
                m.auc,
                format!(
                    "{:.2} ({:.2}-{:.2})",
                    pct(p.precision),
                    pct(m.precision_ci.0),
                    pct(m.precision_ci.1)
                ),
                format!(
                    "{:.2} ({:.2}-{:.2})",
                    pct(p.recall),
                    pct(m.recall_ci.0),
                    pct(m.recall_ci.1)
                ),
            );
        }
        s
    }

    /// Write `report.json`, `report.txt`, one `pr_<model>.csv` per model and `pr_curves.svg`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let inner = || -> Result<()> {
            std::fs::create_dir_all(dir)?;
            std::fs::write(
                dir.join("report.json"),
                serde_json::to_string_pretty(self)? + "\n",
            )?;
            std::fs::write(dir.join("report.txt"), self.table())?;
            let mut curves = Vec::new();
            for m in &self.models {
                if let Some(c) = &m.curve {
                    let f = std::fs::File::create(dir.join(format!("pr_{}.csv", m.name)))?;
                    write_curve_csv(c, std::io::BufWriter::new(f))?;
                    curves.push((m.name.as_str(), c));
                }
            }
            std::fs::write(
                dir.join("pr_curves.svg"),
                super::svg::render_pr_curves(&curves),
            )?;
            Ok(())
        };
        inner().map_err(|e| e.in_file(dir))
    }
}

/// `threshold,precision,recall` rows in curve order.
pub fn write_curve_csv(curve: &PrCurve, mut out: impl Write) -> Result<()> {
    writeln!(out, "threshold,precision,recall")?;
    for p in &curve.points {
        writeln!(out, "{:.9},{:.9},{:.9}", p.threshold, p.precision, p.recall)?;
    }
    out.flush()?;
    Ok(())
}
