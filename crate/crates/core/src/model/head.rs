use super::{DropoutMasks, Matrix, ModelParameters, StressPosterior};

#[derive(Debug, Clone)]
pub(crate) struct HeadCache {
    input: Matrix,
    /// tanh outputs before dropout, one per hidden layer.
    activations: Vec<Matrix>,
    /// Layer outputs after dropout (inputs of the next layer).
    outputs: Vec<Matrix>,
}

fn mask_value(masks: Option<&Matrix>, r: usize, c: usize) -> f64 {
    masks.map_or(1.0, |m| m.get(r, c))
}

/// Three tanh layers, a linear two-unit layer and a per-syllable softmax
/// over (unstressed, stressed).
pub fn classify_head(
    input: &Matrix,
    params: &ModelParameters,
    dropout: Option<&DropoutMasks>,
) -> StressPosterior {
    head_forward(input, params, dropout).0
}

pub(crate) fn head_forward(
    input: &Matrix,
    params: &ModelParameters,
    dropout: Option<&DropoutMasks>,
) -> (StressPosterior, HeadCache) {
    let rows = input.rows();
    let mut activations = Vec::with_capacity(3);
    let mut outputs = Vec::with_capacity(3);
    let mut x = input.clone();
    for (l, layer) in params.hidden.iter().enumerate() {
        let mut act = Matrix::zeros(rows, layer.outputs());
        let mut out = Matrix::zeros(rows, layer.outputs());
        for r in 0..rows {
            for (c, z) in layer.apply(x.row(r)).into_iter().enumerate() {
                let a = z.tanh();
                act.set(r, c, a);
                out.set(r, c, a * mask_value(dropout.map(|d| &d.hidden[l]), r, c));
            }
        }
        activations.push(act);
        outputs.push(out.clone());
        x = out;
    }
    let mut logits = Matrix::zeros(rows, 2);
    for r in 0..rows {
        for (c, z) in params.output.apply(x.row(r)).into_iter().enumerate() {
            logits.set(r, c, z * mask_value(dropout.map(|d| &d.output), r, c));
        }
    }
    let cache = HeadCache {
        input: input.clone(),
        activations,
        outputs,
    };
    (StressPosterior::from_logits(&logits), cache)
}

/// Backpropagate `d_logits` (gradient w.r.t. the post-dropout logits)
/// through the head. Returns the gradient w.r.t. the head input.
pub(crate) fn head_backward(
    cache: &HeadCache,
    params: &ModelParameters,
    d_logits: &Matrix,
    dropout: Option<&DropoutMasks>,
    grads: &mut ModelParameters,
) -> Matrix {
    let rows = d_logits.rows();
    // output layer: logits = (x·W + b) ⊙ m
    let mut d_z = d_logits.clone();
    for r in 0..rows {
        for c in 0..2 {
            d_z.set(
                r,
                c,
                d_logits.get(r, c) * mask_value(dropout.map(|d| &d.output), r, c),
            );
        }
    }
    let mut d_x = dense_backward(&cache.outputs[2], &params.output, &d_z, &mut grads.output);
    for l in (0..3).rev() {
        let act = &cache.activations[l];
        let mut d_pre = Matrix::zeros(rows, act.cols());
        for r in 0..rows {
            for c in 0..act.cols() {
                let a = act.get(r, c);
                let m = mask_value(dropout.map(|d| &d.hidden[l]), r, c);
                d_pre.set(r, c, d_x.get(r, c) * m * (1.0 - a * a));
            }
        }
        let x = if l == 0 {
            &cache.input
        } else {
            &cache.outputs[l - 1]
        };
        d_x = dense_backward(x, &params.hidden[l], &d_pre, &mut grads.hidden[l]);
    }
    d_x
}

fn dense_backward(
    x: &Matrix,
    layer: &super::params::Dense,
    d_z: &Matrix,
    g: &mut super::params::Dense,
) -> Matrix {
    let mut d_x = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let dz = d_z.row(r);
        for (b, d) in g.bias.iter_mut().zip(dz) {
            *b += d;
        }
        for i in 0..x.cols() {
            let xi = x.get(r, i);
            let mut acc = 0.0;
            for (j, &d) in dz.iter().enumerate() {
                g.weight.add_at(i, j, xi * d);
                acc += layer.weight.get(i, j) * d;
            }
            d_x.set(r, i, acc);
        }
    }
    d_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{params::Dense, ModelConfig};

    #[test]
    fn rows_sum_to_one() {
        let config = ModelConfig::default();
        let params = ModelParameters::init_uniform(&config, 5, 1.0);
        let input = Matrix::from_rows(&[vec![0.3; 9], vec![1.2; 9], vec![0.05; 9]]);
        let post = classify_head(&input, &params, None);
        for k in 0..3 {
            let row = post.probabilities().row(k);
            assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn zero_output_layer_is_uniform() {
        let config = ModelConfig::default();
        let mut params = ModelParameters::init_uniform(&config, 5, 1.0);
        params.output = Dense::zeros(config.head_units, 2);
        let input = Matrix::from_rows(&[vec![0.3; 9], vec![-2.0; 9]]);
        let post = classify_head(&input, &params, None);
        assert!(post.probabilities().as_slice().iter().all(|&p| p == 0.5));
    }
}
