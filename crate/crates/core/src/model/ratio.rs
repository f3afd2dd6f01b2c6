//! Parameter-free relative-prominence layer: each syllable's features next
//! to their ratios against the left and right neighbours.

use super::Matrix;

/// Smallest denominator used in a ratio.
pub const RATIO_FLOOR: f64 = 1e-6;

/// Map a K × 3 syllable feature matrix to K × 9:
/// `[own, own / left, own / right]`. Neighbours outside the first `valid`
/// rows count as missing, giving a ratio of 1.
pub fn differential_bidirectional(features: &Matrix, valid: usize) -> Matrix {
    let (rows, c) = (features.rows(), features.cols());
    let mut out = Matrix::filled(rows, 3 * c, 1.0);
    for k in 0..rows {
        let own = features.row(k);
        out.row_mut(k)[..c].copy_from_slice(own);
        if k >= valid {
            continue;
        }
        for j in 0..c {
            if k > 0 {
                out.set(k, c + j, own[j] / features.get(k - 1, j).max(RATIO_FLOOR));
            }
            if k + 1 < valid {
                out.set(
                    k,
                    2 * c + j,
                    own[j] / features.get(k + 1, j).max(RATIO_FLOOR),
                );
            }
        }
    }
    out
}

/// Gradient with respect to the syllable features given the gradient of
/// the ratio-layer output.
pub(crate) fn differential_backward(features: &Matrix, valid: usize, d_out: &Matrix) -> Matrix {
    let (rows, c) = (features.rows(), features.cols());
    let mut d = Matrix::zeros(rows, c);
    for k in 0..rows {
        for j in 0..c {
            d.add_at(k, j, d_out.get(k, j));
        }
        if k >= valid {
            continue;
        }
        for j in 0..c {
            let own = features.get(k, j);
            for (neighbour, col) in [
                (k.checked_sub(1), c + j),
                ((k + 1 < valid).then_some(k + 1), 2 * c + j),
            ] {
                let Some(n) = neighbour else { continue };
                let g = d_out.get(k, col);
                let raw = features.get(n, j);
                let den = raw.max(RATIO_FLOOR);
                d.add_at(k, j, g / den);
                if raw > RATIO_FLOOR {
                    d.add_at(n, j, -g * own / (den * den));
                }
            }
        }
    }
    d
}
