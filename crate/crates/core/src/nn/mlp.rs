use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{init_matrix, relu, relu_grad, Matrix, HIDDEN};
use crate::dataset::ALPHABET_SIZE;
use crate::error::{Error, Result};
use crate::losses::{weighted_rmse_grad_unchecked, LossSpec};

/// Windowed network: `20m` one-hot inputs, 40 hidden units, `m` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    m: usize,
    w1: Matrix,
    w2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpForward {
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output_pre: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: Matrix,
    pub w2: Matrix,
}

impl MlpGradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            w1: Matrix::zeros(HIDDEN, model.input_len()),
            w2: Matrix::zeros(model.m, HIDDEN),
        }
    }
}

impl MlpModel {
    pub fn from_weights(m: usize, w1: Matrix, w2: Matrix) -> Result<Self> {
        if m == 0 {
            return Err(Error::ShapeMismatch(
                "window length must be positive".into(),
            ));
        }
        if w1.shape() != (HIDDEN, ALPHABET_SIZE * m) || w2.shape() != (m, HIDDEN) {
            return Err(Error::ShapeMismatch(format!(
                "window {m} needs w1 {HIDDEN}x{} and w2 {m}x{HIDDEN}, got {:?} and {:?}",
                ALPHABET_SIZE * m,
                w1.shape(),
                w2.shape()
            )));
        }
        if !w1.is_finite() || !w2.is_finite() {
            return Err(Error::ShapeMismatch("non-finite weight".into()));
        }
        Ok(Self { m, w1, w2 })
    }

    pub fn init(m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = init_matrix(HIDDEN, ALPHABET_SIZE * m, &mut rng);
        let w2 = init_matrix(m, HIDDEN, &mut rng);
        Self { m, w1, w2 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn input_len(&self) -> usize {
        ALPHABET_SIZE * self.m
    }

    pub fn w1(&self) -> &Matrix {
        &self.w1
    }

    pub fn w2(&self) -> &Matrix {
        &self.w2
    }

    pub fn w1_mut(&mut self) -> &mut Matrix {
        &mut self.w1
    }

    pub fn w2_mut(&mut self) -> &mut Matrix {
        &mut self.w2
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "input of length {} for window {} (expected {})",
                x.len(),
                self.m,
                self.input_len()
            )));
        }
        Ok(())
    }

    /// Forward pass. Zero inputs are skipped, which leaves the sums unchanged
    /// and makes one-hot windows cost `40m` multiplies in the first layer.
    fn forward_unchecked(&self, x: &[f64]) -> MlpForward {
        let active: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        let hidden_pre: Vec<f64> = (0..HIDDEN)
            .map(|i| {
                let row = self.w1.row(i);
                active.iter().map(|&(j, v)| row[j] * v).sum()
            })
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|&z| relu(z)).collect();
        let output_pre: Vec<f64> = (0..self.m)
            .map(|i| self.w2.row(i).iter().zip(&hidden).map(|(w, h)| w * h).sum())
            .collect();
        let output = output_pre.iter().map(|&z| relu(z)).collect();
        MlpForward {
            hidden_pre,
            hidden,
            output_pre,
            output,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<MlpForward> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    /// Output vector only.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.output)
    }

    fn check_labels(&self, y: &[f64], loss: &LossSpec) -> Result<()> {
        if y.len() != self.m || loss.m() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "window {} with {} labels and a loss over {}",
                self.m,
                y.len(),
                loss.m()
            )));
        }
        Ok(())
    }

    /// Output-layer deltas and the loss, shared by the dense and fused paths.
    fn output_deltas(fwd: &MlpForward, y: &[f64], loss: &LossSpec) -> (f64, Option<Vec<f64>>) {
        let g = weighted_rmse_grad_unchecked(&fwd.output, y, loss.weights());
        if g.zero_loss {
            return (g.loss, None);
        }
        let deltas = g
            .grad
            .iter()
            .zip(&fwd.output_pre)
            .map(|(d, &z)| d * relu_grad(z))
            .collect();
        (g.loss, Some(deltas))
    }

    fn hidden_deltas(&self, fwd: &MlpForward, delta_out: &[f64]) -> Vec<f64> {
        (0..HIDDEN)
            .map(|j| {
                let back: f64 = (0..self.m).map(|i| delta_out[i] * self.w2.get(i, j)).sum();
                back * relu_grad(fwd.hidden_pre[j])
            })
            .collect()
    }

    pub fn backward(&self, x: &[f64], y: &[f64], loss: &LossSpec) -> Result<(f64, MlpGradients)> {
        self.check_input(x)?;
        self.check_labels(y, loss)?;
        let fwd = self.forward_unchecked(x);
        let mut grads = MlpGradients::zeros_like(self);
        let (e, delta_out) = Self::output_deltas(&fwd, y, loss);
        let Some(delta_out) = delta_out else {
            return Ok((e, grads));
        };
        for (i, &d) in delta_out.iter().enumerate() {
            for (g, &h) in grads.w2.row_mut(i).iter_mut().zip(&fwd.hidden) {
                *g = d * h;
            }
        }
        let delta_hidden = self.hidden_deltas(&fwd, &delta_out);
        for (j, &d) in delta_hidden.iter().enumerate() {
            for (g, &xv) in grads.w1.row_mut(j).iter_mut().zip(x) {
                *g = d * xv;
            }
        }
        Ok((e, grads))
    }

    /// `w <- w - lr * grad` for every weight.
    pub fn sgd_step(&mut self, grads: &MlpGradients, lr: f64) {
        self.w1.sub_scaled(&grads.w1, lr);
        self.w2.sub_scaled(&grads.w2, lr);
    }

    /// One SGD step on a single example without materializing the dense
    /// gradient. Produces the same weights as [`Self::backward`] followed by
    /// [`Self::sgd_step`]; only first-layer columns with nonzero input move.
    /// Returns the loss before the update.
    pub fn train_example(&mut self, x: &[f64], y: &[f64], loss: &LossSpec, lr: f64) -> Result<f64> {
        self.check_input(x)?;
        self.check_labels(y, loss)?;
        let fwd = self.forward_unchecked(x);
        let (e, delta_out) = Self::output_deltas(&fwd, y, loss);
        let Some(delta_out) = delta_out else {
            return Ok(e);
        };
        let delta_hidden = self.hidden_deltas(&fwd, &delta_out);
        for (i, &d) in delta_out.iter().enumerate() {
            for (w, &h) in self.w2.row_mut(i).iter_mut().zip(&fwd.hidden) {
                *w -= lr * (d * h);
            }
        }
        for (j, &d) in delta_hidden.iter().enumerate() {
            let row = self.w1.row_mut(j);
            for (k, &xv) in x.iter().enumerate() {
                if xv != 0.0 {
                    row[k] -= lr * (d * xv);
                }
            }
        }
        Ok(e)
    }
}

pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<MlpForward> {
    model.forward(x)
}

pub fn mlp_backward(
    model: &MlpModel,
    x: &[f64],
    y: &[f64],
    loss: &LossSpec,
) -> Result<(f64, MlpGradients)> {
    model.backward(x, y, loss)
}
