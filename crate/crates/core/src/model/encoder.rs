//! Sub-phoneme encoder: one-hot features through a single GRU layer, then a
//! linear key projection per attention.

use super::params::{Dense, GruParams};
use super::tensor::sigmoid;
use super::{Matrix, ModelConfig, ModelParameters, SubphonemeToken};
use crate::error::Result;

/// Per-step GRU activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct GruStep {
    active: [usize; 4],
    h_prev: Vec<f64>,
    update: Vec<f64>,
    reset: Vec<f64>,
    candidate: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    /// GRU output after dropout, one row per sub-phoneme (padding rows are 0).
    pub hidden: Matrix,
    pub frame_keys: Matrix,
    pub phone_keys: Matrix,
    pub(crate) steps: Vec<GruStep>,
}

/// Encode `tokens[..valid]`. `dropout`, when given, multiplies the GRU
/// output elementwise (inverted-dropout mask, `valid × units`).
pub fn encode_subphonemes(
    tokens: &[SubphonemeToken],
    valid: usize,
    config: &ModelConfig,
    params: &ModelParameters,
    dropout: Option<&Matrix>,
) -> Result<Encoded> {
    let g = &params.gru;
    let units = g.units();
    let mut hidden = Matrix::zeros(tokens.len(), units);
    let mut steps = Vec::with_capacity(valid);
    let mut h = vec![0.0; units];
    for (t, token) in tokens.iter().take(valid).enumerate() {
        let active = token.active_features(config)?;
        let step = gru_step(g, &active, &h);
        h = (0..units)
            .map(|u| (1.0 - step.update[u]) * step.candidate[u] + step.update[u] * h[u])
            .collect();
        for u in 0..units {
            let m = dropout.map_or(1.0, |d| d.get(t, u));
            hidden.set(t, u, h[u] * m);
        }
        steps.push(step);
    }
    let frame_keys = project(&hidden, &params.frame_key);
    let phone_keys = project(&hidden, &params.phone_key);
    Ok(Encoded {
        hidden,
        frame_keys,
        phone_keys,
        steps,
    })
}

fn gate_input(w: &Matrix, u: &Matrix, b: &[f64], active: &[usize; 4], h: &[f64]) -> Vec<f64> {
    let mut a = b.to_vec();
    for &i in active {
        for (aj, wj) in a.iter_mut().zip(w.row(i)) {
            *aj += wj;
        }
    }
    for (i, &hi) in h.iter().enumerate() {
        for (aj, uj) in a.iter_mut().zip(u.row(i)) {
            *aj += hi * uj;
        }
    }
    a
}

fn gru_step(g: &GruParams, active: &[usize; 4], h: &[f64]) -> GruStep {
    let update: Vec<f64> = gate_input(&g.w_update, &g.u_update, &g.b_update, active, h)
        .into_iter()
        .map(sigmoid)
        .collect();
    let reset: Vec<f64> = gate_input(&g.w_reset, &g.u_reset, &g.b_reset, active, h)
        .into_iter()
        .map(sigmoid)
        .collect();
    let gated: Vec<f64> = h.iter().zip(&reset).map(|(a, b)| a * b).collect();
    let candidate = gate_input(
        &g.w_candidate,
        &g.u_candidate,
        &g.b_candidate,
        active,
        &gated,
    )
    .into_iter()
    .map(f64::tanh)
    .collect();
    GruStep {
        active: *active,
        h_prev: h.to_vec(),
        update,
        reset,
        candidate,
    }
}

fn project(hidden: &Matrix, layer: &Dense) -> Matrix {
    let mut out = Matrix::zeros(hidden.rows(), layer.outputs());
    for r in 0..hidden.rows() {
        out.row_mut(r).copy_from_slice(&layer.apply(hidden.row(r)));
    }
    out
}

/// Backpropagate key gradients through the projections and the GRU,
/// accumulating into `grads`.
pub(crate) fn encoder_backward(
    enc: &Encoded,
    params: &ModelParameters,
    d_frame_keys: &Matrix,
    d_phone_keys: &Matrix,
    dropout: Option<&Matrix>,
    grads: &mut ModelParameters,
) {
    let g = &params.gru;
    let units = g.units();
    let valid = enc.steps.len();

    // Key projections: K = H·W + b.
    let mut d_hidden = Matrix::zeros(valid, units);
    for (dk, layer, glayer) in [
        (d_frame_keys, &params.frame_key, &mut grads.frame_key),
        (d_phone_keys, &params.phone_key, &mut grads.phone_key),
    ] {
        for t in 0..valid {
            let drow = dk.row(t);
            let hrow = enc.hidden.row(t);
            for (b, d) in glayer.bias.iter_mut().zip(drow) {
                *b += d;
            }
            for u in 0..units {
                let mut acc = 0.0;
                for (c, &d) in drow.iter().enumerate() {
                    glayer.weight.add_at(u, c, hrow[u] * d);
                    acc += layer.weight.get(u, c) * d;
                }
                d_hidden.add_at(t, u, acc);
            }
        }
    }

    let gg = &mut grads.gru;
    let mut carry = vec![0.0; units];
    for t in (0..valid).rev() {
        let s = &enc.steps[t];
        let dh: Vec<f64> = (0..units)
            .map(|u| d_hidden.get(t, u) * dropout.map_or(1.0, |m| m.get(t, u)) + carry[u])
            .collect();
        let mut dh_prev: Vec<f64> = (0..units).map(|u| dh[u] * s.update[u]).collect();

        let da_cand: Vec<f64> = (0..units)
            .map(|u| dh[u] * (1.0 - s.update[u]) * (1.0 - s.candidate[u] * s.candidate[u]))
            .collect();
        let da_update: Vec<f64> = (0..units)
            .map(|u| dh[u] * (s.h_prev[u] - s.candidate[u]) * s.update[u] * (1.0 - s.update[u]))
            .collect();

        // candidate: a = x·Wn + (r⊙h)·Un + bn
        let gated: Vec<f64> = (0..units).map(|u| s.reset[u] * s.h_prev[u]).collect();
        let mut d_gated = vec![0.0; units];
        accumulate_gate(
            &mut gg.w_candidate,
            &mut gg.u_candidate,
            &mut gg.b_candidate,
            &s.active,
            &gated,
            &da_cand,
        );
        for i in 0..units {
            d_gated[i] = (0..units)
                .map(|j| g.u_candidate.get(i, j) * da_cand[j])
                .sum();
        }
        let da_reset: Vec<f64> = (0..units)
            .map(|u| d_gated[u] * s.h_prev[u] * s.reset[u] * (1.0 - s.reset[u]))
            .collect();
        for u in 0..units {
            dh_prev[u] += d_gated[u] * s.reset[u];
        }

        accumulate_gate(
            &mut gg.w_update,
            &mut gg.u_update,
            &mut gg.b_update,
            &s.active,
            &s.h_prev,
            &da_update,
        );
        accumulate_gate(
            &mut gg.w_reset,
            &mut gg.u_reset,
            &mut gg.b_reset,
            &s.active,
            &s.h_prev,
            &da_reset,
        );
        for i in 0..units {
            dh_prev[i] += (0..units)
                .map(|j| g.u_update.get(i, j) * da_update[j] + g.u_reset.get(i, j) * da_reset[j])
                .sum::<f64>();
        }
        carry = dh_prev;
    }
}

fn accumulate_gate(
    w: &mut Matrix,
    u: &mut Matrix,
    b: &mut [f64],
    active: &[usize; 4],
    h: &[f64],
    da: &[f64],
) {
    for &i in active {
        for (wj, d) in w.row_mut(i).iter_mut().zip(da) {
            *wj += d;
        }
    }
    for (i, &hi) in h.iter().enumerate() {
        for (uj, d) in u.row_mut(i).iter_mut().zip(da) {
            *uj += hi * d;
        }
    }
    for (bj, d) in b.iter_mut().zip(da) {
        *bj += d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{Half, PhonemeId};

    fn tokens(n: usize) -> Vec<SubphonemeToken> {
        (0..n)
            .map(|i| SubphonemeToken {
                phoneme: PhonemeId::from_index(1 + i % 39).unwrap(),
                syllable: i / 4,
                is_vowel: i % 3 == 0,
                half: if i % 2 == 0 { Half::Left } else { Half::Right },
            })
            .collect()
    }

    #[test]
    fn shapes() {
        let config = ModelConfig::default();
        let params = ModelParameters::init(&config, 7);
        let enc = encode_subphonemes(&tokens(10), 10, &config, &params, None).unwrap();
        assert_eq!(enc.hidden.shape(), [10, 4]);
        assert_eq!(enc.frame_keys.shape(), [10, config.d_k()]);
        assert_eq!(enc.phone_keys.shape(), [10, config.d_k()]);
    }

    #[test]
    fn zero_weights_give_zero_keys() {
        let config = ModelConfig::default();
        let mut params = ModelParameters::init(&config, 7);
        params.frame_key = Dense::zeros(4, config.d_k());
        params.phone_key = Dense::zeros(4, config.d_k());
        let enc = encode_subphonemes(&tokens(8), 8, &config, &params, None).unwrap();
        assert!(enc.frame_keys.as_slice().iter().all(|&k| k == 0.0));
        assert!(enc.phone_keys.as_slice().iter().all(|&k| k == 0.0));
    }

    #[test]
    fn inference_is_deterministic() {
        let config = ModelConfig::default();
        let params = ModelParameters::init(&config, 9);
        let a = encode_subphonemes(&tokens(12), 12, &config, &params, None).unwrap();
        let b = encode_subphonemes(&tokens(12), 12, &config, &params, None).unwrap();
        assert_eq!(a.hidden, b.hidden);
        assert_eq!(a.frame_keys, b.frame_keys);
    }

    #[test]
    fn syllable_index_out_of_range() {
        let config = ModelConfig::default();
        let params = ModelParameters::init(&config, 9);
        let mut toks = tokens(2);
        toks[1].syllable = config.max_syllables;
        assert!(encode_subphonemes(&toks, 2, &config, &params, None).is_err());
    }
}
