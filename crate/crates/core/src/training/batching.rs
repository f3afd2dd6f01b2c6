use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::ModelInput;

/// Examples sharing a syllable count, ordered by frame count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bucket {
    pub syllables: usize,
    pub max_frames: usize,
    pub members: Vec<usize>,
}

/// Buckets and the fixed batches cut from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub buckets: Vec<Bucket>,
    /// Example indices per batch; each batch lies within one bucket.
    pub batches: Vec<Vec<usize>>,
}

impl BatchPlan {
    /// Batch indices in a shuffled order for one epoch.
    pub fn epoch_order(&self, rng: &mut impl Rng) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.batches.len()).collect();
        order.shuffle(rng);
        order
    }
}

/// Group by syllable count, sort each group by frame count and cut it
/// into consecutive batches of at most `batch_size`.
pub fn make_buckets(inputs: &[ModelInput], batch_size: usize) -> BatchPlan {
    let batch_size = batch_size.max(1);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, x) in inputs.iter().enumerate() {
        groups.entry(x.syllables).or_default().push(i);
    }
    let mut buckets = Vec::with_capacity(groups.len());
    let mut batches = Vec::new();
    for (syllables, mut members) in groups {
        members.sort_by_key(|&i| (inputs[i].valid_frames, i));
        batches.extend(members.chunks(batch_size).map(<[usize]>::to_vec));
        buckets.push(Bucket {
            syllables,
            max_frames: members
                .iter()
                .map(|&i| inputs[i].valid_frames)
                .max()
                .unwrap_or(0),
            members,
        });
    }
    BatchPlan { buckets, batches }
}

/// Zero-pad every member to the batch's longest token and frame sequence.
pub fn pad_batch(inputs: &[ModelInput], members: &[usize]) -> Vec<ModelInput> {
    let tokens = members
        .iter()
        .map(|&i| inputs[i].tokens.len())
        .max()
        .unwrap_or(0);
    let frames = members
        .iter()
        .map(|&i| inputs[i].frames.len())
        .max()
        .unwrap_or(0);
    let rows = members
        .iter()
        .map(|&i| inputs[i].syllable_rows)
        .max()
        .unwrap_or(0);
    members
        .iter()
        .map(|&i| inputs[i].padded(tokens, frames, rows))
        .collect()
}
