//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use lexstress::lexicon::Half;
use lexstress::model::{DropoutMasks, Matrix, ModelConfig, ModelInput, ModelParameters, Pooling};

pub struct NaiveForward {
    pub posterior: Vec<[f64; 2]>,
    pub features: Vec<[f64; 3]>,
    pub frame_weights: Vec<Vec<f64>>,
    pub phone_weights: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn vec_mat(x: &[f64], m: &Matrix) -> Vec<f64> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| x[i] * m.get(i, j)).sum())
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn mask_at(m: Option<&Matrix>, r: usize, c: usize) -> f64 {
    m.map_or(1.0, |m| m.get(r, c))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Dense one-hot vector of a sub-phoneme, built from the token fields.
fn one_hot(input: &ModelInput, t: usize, config: &ModelConfig) -> Vec<f64> {
    let tok = &input.tokens[t];
    let (inv, syl) = (config.inventory_size, config.max_syllables);
    let mut x = vec![0.0; inv + syl + 4];
    x[tok.phoneme.index()] = 1.0;
    x[inv + tok.syllable] = 1.0;
    x[inv + syl + if tok.is_vowel { 1 } else { 0 }] = 1.0;
    x[inv + syl + 2 + if tok.half == Half::Right { 1 } else { 0 }] = 1.0;
    x
}

fn attend(
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    rows: usize,
    d_k: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut weights = Vec::new();
    let mut pooled = Vec::new();
    for k in 0..rows {
        let logits: Vec<f64> = keys
            .iter()
            .map(|key| key[k] / (d_k as f64).sqrt())
            .collect();
        let w = softmax(&logits);
        let dims = values[0].len();
        let out: Vec<f64> = (0..dims)
            .map(|d| w.iter().zip(values).map(|(a, v)| a * v[d]).sum())
            .collect();
        weights.push(w);
        pooled.push(out);
    }
    (weights, pooled)
}

/// Straight-line forward pass written from the model description.
pub fn naive_forward(
    input: &ModelInput,
    params: &ModelParameters,
    config: &ModelConfig,
    masks: Option<&DropoutMasks>,
) -> NaiveForward {
    let rows = input.syllable_rows;
    let d_k = config.max_syllables;
    let (features, frame_weights, phone_weights) = match config.pooling {
        Pooling::NucleusMean => (input.nucleus.clone(), Vec::new(), Vec::new()),
        Pooling::Attention => {
            let g = &params.gru;
            let units = config.gru_units;
            let mut h = vec![0.0; units];
            let mut hidden = Vec::new();
            for t in 0..input.valid_tokens {
                let x = one_hot(input, t, config);
                let z: Vec<f64> = add(
                    &add(&vec_mat(&x, &g.w_update), &vec_mat(&h, &g.u_update)),
                    &g.b_update,
                )
                .into_iter()
                .map(sigmoid)
                .collect();
                let r: Vec<f64> = add(
                    &add(&vec_mat(&x, &g.w_reset), &vec_mat(&h, &g.u_reset)),
                    &g.b_reset,
                )
                .into_iter()
                .map(sigmoid)
                .collect();
                let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
                let c: Vec<f64> = add(
                    &add(&vec_mat(&x, &g.w_candidate), &vec_mat(&rh, &g.u_candidate)),
                    &g.b_candidate,
                )
                .into_iter()
                .map(f64::tanh)
                .collect();
                h = (0..units)
                    .map(|u| z[u] * h[u] + (1.0 - z[u]) * c[u])
                    .collect();
                hidden.push(
                    (0..units)
                        .map(|u| h[u] * mask_at(masks.map(|m| &m.gru), t, u))
                        .collect::<Vec<f64>>(),
                );
            }
            let phone_keys: Vec<Vec<f64>> = hidden
                .iter()
                .map(|hv| {
                    add(
                        &vec_mat(hv, &params.phone_key.weight),
                        &params.phone_key.bias,
                    )
                })
                .collect();
            let frame_keys: Vec<Vec<f64>> = input.frame_map[..input.valid_frames]
                .iter()
                .map(|&j| {
                    add(
                        &vec_mat(&hidden[j], &params.frame_key.weight),
                        &params.frame_key.bias,
                    )
                })
                .collect();
            let frame_values: Vec<Vec<f64>> = input.frames[..input.valid_frames]
                .iter()
                .map(|f| f.to_vec())
                .collect();
            let dur_values: Vec<Vec<f64>> = input.durations[..input.valid_tokens]
                .iter()
                .map(|&d| vec![d])
                .collect();
            let (fw, fo) = attend(&frame_keys, &frame_values, rows, d_k);
            let (pw, po) = attend(&phone_keys, &dur_values, rows, d_k);
            let feats = (0..rows).map(|k| [fo[k][0], fo[k][1], po[k][0]]).collect();
            (feats, fw, pw)
        }
    };

    let valid = input.syllables;
    let mut posterior = Vec::new();
    for k in 0..rows {
        let own = features[k];
        let mut x: Vec<f64> = own.to_vec();
        for j in 0..3 {
            x.push(if k > 0 && k < valid {
                own[j] / features[k - 1][j].max(1e-6)
            } else {
                1.0
            });
        }
        for j in 0..3 {
            x.push(if k + 1 < valid {
                own[j] / features[k + 1][j].max(1e-6)
            } else {
                1.0
            });
        }
        for (l, layer) in params.hidden.iter().enumerate() {
            x = add(&vec_mat(&x, &layer.weight), &layer.bias)
                .into_iter()
                .enumerate()
                .map(|(c, z)| z.tanh() * mask_at(masks.map(|m| &m.hidden[l]), k, c))
                .collect();
        }
        let logits: Vec<f64> = add(&vec_mat(&x, &params.output.weight), &params.output.bias)
            .into_iter()
            .enumerate()
            .map(|(c, z)| z * mask_at(masks.map(|m| &m.output), k, c))
            .collect();
        let p = softmax(&logits);
        posterior.push([p[0], p[1]]);
    }
    NaiveForward {
        posterior,
        features,
        frame_weights,
        phone_weights,
    }
}

/// (threshold, true positives, false positives) for every distinct score,
/// counted directly.
pub fn enumerate_pr(scores: &[f64], labels: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let tp = scores
                .iter()
                .zip(labels)
                .filter(|(s, l)| **s >= t && **l)
                .count();
            let fp = scores
                .iter()
                .zip(labels)
                .filter(|(s, l)| **s >= t && !**l)
                .count();
            (t, tp, fp)
        })
        .collect()
}

/// P(X ≥ x) for X ~ Binomial(n, p), by direct summation.
fn upper_tail(x: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return 1.0;
    }
    let mut ln_fact = vec![0.0; n as usize + 1];
    for i in 1..=n as usize {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let n_us = n as usize;
    (x as usize..=n_us)
        .map(|i| {
            let ln_choose = ln_fact[n_us] - ln_fact[i] - ln_fact[n_us - i];
            (ln_choose + i as f64 * p.ln() + (n_us - i) as f64 * (1.0 - p).ln()).exp()
        })
        .sum()
}

fn bisect(mut lo: f64, mut hi: f64, increasing: impl Fn(f64) -> f64, target: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if increasing(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) interval from binomial tail sums.
pub fn clopper_pearson_oracle(x: u64, n: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let lower = if x == 0 {
        0.0
    } else {
        bisect(0.0, 1.0, |p| upper_tail(x, n, p), alpha / 2.0)
    };
    let upper = if x == n {
        1.0
    } else {
        // P(X ≤ x) = α/2 ⇔ P(X ≥ x + 1) = 1 − α/2
        bisect(0.0, 1.0, |p| upper_tail(x + 1, n, p), 1.0 - alpha / 2.0)
    };
    (lower, upper)
}
