//! Word-level error detection and its evaluation.

mod ablation;
mod baseline;
mod ci;
mod detect;
mod pr;
mod report;
mod svg;

pub use ablation::{
    run_ablation, AblationConfig, AblationCorpora, AblationData, AblationOutcome, Variant,
};
pub use baseline::{nucleus_mean_features, SyllableFeatureMatrix};
pub use ci::binomial_ci;
pub use detect::{detect, DetectionResult};
pub use pr::{pr_curve, precision_at_recall, PrCurve, PrPoint};
pub use report::{
    detect_all, posteriors, write_curve_csv, EvalReport, ModelReport, CONFIDENCE_LEVEL,
};
pub use svg::render_pr_curves;
