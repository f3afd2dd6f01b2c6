use crate::lexicon::WordAlignment;
use crate::prosody::{ProsodicFeatures, DURATION_SCALE_S};

/// K × 3 syllable features (F0, intensity, duration) in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct SyllableFeatureMatrix {
    pub rows: Vec<[f64; 3]>,
}

/// Mean scaled F0 and intensity over each syllable nucleus, and the
/// nucleus duration. A nucleus without frames borrows its nearest frame.
pub fn nucleus_mean_features(
    word: &WordAlignment,
    features: &ProsodicFeatures,
) -> SyllableFeatureMatrix {
    let rows = word
        .syllables
        .iter()
        .map(|syl| {
            let (left, right) = (2 * syl.nucleus, 2 * syl.nucleus + 1);
            let mut frames: Vec<usize> = features
                .frame_to_subphoneme
                .iter()
                .enumerate()
                .filter(|(_, &j)| j == left || j == right)
                .map(|(i, _)| i)
                .collect();
            if frames.is_empty() {
                let nearest = (0..features.frame_to_subphoneme.len())
                    .min_by_key(|&i| features.frame_to_subphoneme[i].abs_diff(left))
                    .unwrap_or(0);
                frames.push(nearest);
            }
            let n = frames.len() as f64;
            let f0 = frames.iter().map(|&i| features.f0[i]).sum::<f64>() / n;
            let intensity = frames.iter().map(|&i| features.intensity[i]).sum::<f64>() / n;
            let duration =
                features.subphoneme_durations[left] + features.subphoneme_durations[right];
            [
                f0 / crate::prosody::F0_SCALE_HZ,
                intensity / crate::prosody::INTENSITY_SCALE_DB,
                duration / DURATION_SCALE_S,
            ]
        })
        .collect();
    SyllableFeatureMatrix { rows }
}
