use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Matrix, ModelConfig};
use crate::error::{Error, Result};

/// Affine layer in row-vector convention: `y = x·W + b`, `W` is inputs × outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Matrix::zeros(inputs, outputs),
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (yj, w) in y.iter_mut().zip(self.weight.row(i)) {
                    *yj += xi * w;
                }
            }
        }
        y
    }
}

/// GRU weights, row-vector convention: `a = x·W + h·U + b` per gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_update: Matrix,
    pub w_reset: Matrix,
    pub w_candidate: Matrix,
    pub u_update: Matrix,
    pub u_reset: Matrix,
    pub u_candidate: Matrix,
    pub b_update: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub b_candidate: Vec<f64>,
}

impl GruParams {
    fn zeros(inputs: usize, units: usize) -> Self {
        GruParams {
            w_update: Matrix::zeros(inputs, units),
            w_reset: Matrix::zeros(inputs, units),
            w_candidate: Matrix::zeros(inputs, units),
            u_update: Matrix::zeros(units, units),
            u_reset: Matrix::zeros(units, units),
            u_candidate: Matrix::zeros(units, units),
            b_update: vec![0.0; units],
            b_reset: vec![0.0; units],
            b_candidate: vec![0.0; units],
        }
    }

    pub fn units(&self) -> usize {
        self.b_update.len()
    }
}

/// All trainable weights of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub gru: GruParams,
    /// Projects encoded sub-phonemes to keys of the frame-level attention.
    pub frame_key: Dense,
    /// Projects encoded sub-phonemes to keys of the sub-phoneme-level attention.
    pub phone_key: Dense,
    pub hidden: [Dense; 3],
    pub output: Dense,
}

/// Number of syllable-level inputs to the classifier head.
pub const HEAD_INPUTS: usize = 9;

impl ModelParameters {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (u, h, d) = (config.gru_units, config.head_units, config.d_k());
        ModelParameters {
            gru: GruParams::zeros(config.token_width(), u),
            frame_key: Dense::zeros(u, d),
            phone_key: Dense::zeros(u, d),
            hidden: [
                Dense::zeros(HEAD_INPUTS, h),
                Dense::zeros(h, h),
                Dense::zeros(h, h),
            ],
            output: Dense::zeros(h, 2),
        }
    }

    /// Uniform(-0.1, 0.1) initialization.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        Self::init_uniform(config, seed, 0.1)
    }

    pub fn init_uniform(config: &ModelConfig, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config);
        p.for_each_mut(|_, xs| {
            xs.iter_mut()
                .for_each(|x| *x = rng.random_range(-scale..scale))
        });
        p
    }

    /// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases.
    pub fn init_glorot(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config);
        let shapes: Vec<[usize; 2]> = p.tensors().iter().map(|(_, s, _)| *s).collect();
        for ((_, xs), [rows, cols]) in p.tensors_mut().into_iter().zip(shapes) {
            if rows == 1 {
                continue;
            }
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            xs.iter_mut()
                .for_each(|x| *x = rng.random_range(-limit..limit));
        }
        p
    }

    /// Named tensors with their shapes, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, [usize; 2], &[f64])> {
        let g = &self.gru;
        let vec_shape = |v: &Vec<f64>| [1, v.len()];
        vec![
            ("gru.w_update", g.w_update.shape(), g.w_update.as_slice()),
            ("gru.w_reset", g.w_reset.shape(), g.w_reset.as_slice()),
            (
                "gru.w_candidate",
                g.w_candidate.shape(),
                g.w_candidate.as_slice(),
            ),
            ("gru.u_update", g.u_update.shape(), g.u_update.as_slice()),
            ("gru.u_reset", g.u_reset.shape(), g.u_reset.as_slice()),
            (
                "gru.u_candidate",
                g.u_candidate.shape(),
                g.u_candidate.as_slice(),
            ),
            ("gru.b_update", vec_shape(&g.b_update), &g.b_update),
            ("gru.b_reset", vec_shape(&g.b_reset), &g.b_reset),
            ("gru.b_candidate", vec_shape(&g.b_candidate), &g.b_candidate),
            (
                "frame_key.weight",
                self.frame_key.weight.shape(),
                self.frame_key.weight.as_slice(),
            ),
            (
                "frame_key.bias",
                vec_shape(&self.frame_key.bias),
                &self.frame_key.bias,
            ),
            (
                "phone_key.weight",
                self.phone_key.weight.shape(),
                self.phone_key.weight.as_slice(),
            ),
            (
                "phone_key.bias",
                vec_shape(&self.phone_key.bias),
                &self.phone_key.bias,
            ),
            (
                "hidden0.weight",
                self.hidden[0].weight.shape(),
                self.hidden[0].weight.as_slice(),
            ),
            (
                "hidden0.bias",
                vec_shape(&self.hidden[0].bias),
                &self.hidden[0].bias,
            ),
            (
                "hidden1.weight",
                self.hidden[1].weight.shape(),
                self.hidden[1].weight.as_slice(),
            ),
            (
                "hidden1.bias",
                vec_shape(&self.hidden[1].bias),
                &self.hidden[1].bias,
            ),
            (
                "hidden2.weight",
                self.hidden[2].weight.shape(),
                self.hidden[2].weight.as_slice(),
            ),
            (
                "hidden2.bias",
                vec_shape(&self.hidden[2].bias),
                &self.hidden[2].bias,
            ),
            (
                "output.weight",
                self.output.weight.shape(),
                self.output.weight.as_slice(),
            ),
            (
                "output.bias",
                vec_shape(&self.output.bias),
                &self.output.bias,
            ),
        ]
    }

    /// Mutable view of every tensor, in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let ModelParameters {
            gru,
            frame_key,
            phone_key,
            hidden,
            output,
        } = self;
        let [h0, h1, h2] = hidden;
        vec![
            ("gru.w_update", gru.w_update.as_mut_slice()),
            ("gru.w_reset", gru.w_reset.as_mut_slice()),
            ("gru.w_candidate", gru.w_candidate.as_mut_slice()),
            ("gru.u_update", gru.u_update.as_mut_slice()),
            ("gru.u_reset", gru.u_reset.as_mut_slice()),
            ("gru.u_candidate", gru.u_candidate.as_mut_slice()),
            ("gru.b_update", &mut gru.b_update),
            ("gru.b_reset", &mut gru.b_reset),
            ("gru.b_candidate", &mut gru.b_candidate),
            ("frame_key.weight", frame_key.weight.as_mut_slice()),
            ("frame_key.bias", &mut frame_key.bias),
            ("phone_key.weight", phone_key.weight.as_mut_slice()),
            ("phone_key.bias", &mut phone_key.bias),
            ("hidden0.weight", h0.weight.as_mut_slice()),
            ("hidden0.bias", &mut h0.bias),
            ("hidden1.weight", h1.weight.as_mut_slice()),
            ("hidden1.bias", &mut h1.bias),
            ("hidden2.weight", h2.weight.as_mut_slice()),
            ("hidden2.bias", &mut h2.bias),
            ("output.weight", output.weight.as_mut_slice()),
            ("output.bias", &mut output.bias),
        ]
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&'static str, &mut [f64])) {
        for (name, xs) in self.tensors_mut() {
            f(name, xs);
        }
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParameters, scale: f64) {
        for ((_, dst), (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|_, xs| xs.iter_mut().for_each(|x| *x *= factor));
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, xs)| xs.len()).sum()
    }

    /// Euclidean norm over all tensors.
    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, _, xs)| xs.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, _, xs) in self.tensors() {
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(name.to_string()));
            }
        }
        Ok(())
    }

    /// Whether every tensor has the shape `config` implies.
    pub fn matches(&self, config: &ModelConfig) -> bool {
        let expected = Self::zeros(config);
        self.tensors()
            .iter()
            .zip(expected.tensors())
            .all(|(a, b)| a.1 == b.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_listing_is_consistent() {
        let config = ModelConfig::default();
        let mut p = ModelParameters::init(&config, 3);
        let names: Vec<_> = p.tensors().iter().map(|t| t.0).collect();
        let names_mut: Vec<_> = p.tensors_mut().iter().map(|t| t.0).collect();
        assert_eq!(names, names_mut);
        assert_eq!(names.len(), 21);
        assert!(p.tensors().iter().all(|(_, s, xs)| s[0] * s[1] == xs.len()));
        assert!(p
            .tensors()
            .iter()
            .flat_map(|t| t.2.iter())
            .all(|x| x.abs() < 0.1));
        assert!(p.matches(&config));
        assert_eq!(p, ModelParameters::init(&config, 3));
        assert_ne!(p, ModelParameters::init(&config, 4));
    }

    #[test]
    fn add_scaled_and_norm() {
        let config = ModelConfig::default();
        let a = ModelParameters::init(&config, 1);
        let mut b = a.clone();
        b.add_scaled(&a, -1.0);
        assert_eq!(b.norm(), 0.0);
    }
}
