use super::tensor::softmax_in_place;
use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// n_q × d_v pooled values.
    pub output: Matrix,
    /// n_q × n_k weights; each row sums to 1.
    pub weights: Matrix,
}

/// `softmax(Q·Kᵀ / √d_k)·V` with the softmax taken row-wise.
pub fn dot_product_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Attention> {
    masked_attention(q, k, v, k.rows())
}

/// Attention where only the first `valid_keys` key rows take part; the
/// remaining (padding) rows receive weight 0.
pub fn masked_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    valid_keys: usize,
) -> Result<Attention> {
    if q.cols() != k.cols() || k.rows() != v.rows() || valid_keys == 0 || valid_keys > k.rows() {
        return Err(Error::Shape(format!(
            "attention Q {:?}, K {:?}, V {:?}, {valid_keys} valid keys",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut weights = Matrix::zeros(q.rows(), k.rows());
    for i in 0..q.rows() {
        let qi = q.row(i);
        let row = weights.row_mut(i);
        for (j, w) in row.iter_mut().enumerate() {
            *w = if j < valid_keys {
                qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale
            } else {
                f64::NEG_INFINITY
            };
        }
        softmax_in_place(row);
    }
    let output = weights.matmul(v);
    Ok(Attention { output, weights })
}

/// Gradient of the attention output with respect to the keys, given the
/// upstream gradient `d_out` (n_q × d_v).
pub(crate) fn attention_key_grad(
    q: &Matrix,
    v: &Matrix,
    weights: &Matrix,
    d_out: &Matrix,
) -> Matrix {
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut dk = Matrix::zeros(weights.cols(), q.cols());
    for i in 0..weights.rows() {
        let a = weights.row(i);
        // dA[j] = d_out[i]·V[j]
        let da: Vec<f64> = (0..a.len())
            .map(|j| d_out.row(i).iter().zip(v.row(j)).map(|(x, y)| x * y).sum())
            .collect();
        let mean: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
        for j in 0..a.len() {
            if a[j] == 0.0 {
                continue;
            }
            let dlogit = a[j] * (da[j] - mean) * scale;
            for (c, &qc) in q.row(i).iter().enumerate() {
                if qc != 0.0 {
                    dk.add_at(j, c, dlogit * qc);
                }
            }
        }
    }
    dk
}

/// Replicate sub-phoneme rows across the frames aligned to them.
pub fn upsample_to_frames(rows: &Matrix, frame_map: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(frame_map.len(), rows.cols());
    for (i, &j) in frame_map.iter().enumerate() {
        out.row_mut(i).copy_from_slice(rows.row(j));
    }
    out
}

/// Adjoint of [`upsample_to_frames`]: sum frame gradients back onto their
/// sub-phonemes.
pub(crate) fn downsample_grad(d_frames: &Matrix, frame_map: &[usize], tokens: usize) -> Matrix {
    let mut out = Matrix::zeros(tokens, d_frames.cols());
    for (i, &j) in frame_map.iter().enumerate() {
        for (o, d) in out.row_mut(j).iter_mut().zip(d_frames.row(i)) {
            *o += d;
        }
    }
    out
}

/// One-hot syllable-index queries of width `d_k`.
pub fn syllable_queries(rows: usize, d_k: usize) -> Matrix {
    let mut q = Matrix::zeros(rows, d_k);
    for k in 0..rows {
        q.set(k, k, 1.0);
    }
    q
}
