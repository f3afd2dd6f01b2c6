//! Loss, gradients, SGD and bucketed batching.

mod batching;
mod example;
pub mod gradcheck;
mod gradients;
mod loss;
mod manifest;
mod trainer;

pub use batching::{make_buckets, pad_batch, BatchPlan, Bucket};
pub use example::TrainingExample;
pub use gradients::{batch_loss, compute_gradients, sample_dropout, sgd_step, GradientResult};
pub use loss::{nll_loss, LossReport, PROB_FLOOR};
pub use manifest::{load_examples, read_manifest, write_manifest, ManifestEntry, Split};
pub use trainer::{
    dataset_loss, split_by_speaker, train, write_loss_log, write_loss_log_file, EpochLoss,
    InitScheme, TrainConfig, TrainOutcome,
};
