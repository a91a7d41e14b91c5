use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{init_matrix, relu, relu_grad, Matrix, HIDDEN};
use crate::dataset::ALPHABET_SIZE;
use crate::error::{Error, Result};
use crate::losses::{weighted_rmse_grad_unchecked, LossSpec};

/// Recurrent network reading one residue per step:
/// `h(k) = R(W1 [x(k); h(k-1)])`, `o(k) = R(W2 h(k))`, `h(0) = 0`.
/// Columns `0..20` of `w1` act on the residue, columns `20..60` on the previous state.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    w1: Matrix,
    w2: Matrix,
    d_out: usize,
}

pub const RNN_INPUT: usize = ALPHABET_SIZE + HIDDEN;

#[derive(Debug, Clone, PartialEq)]
pub struct RnnForward {
    pub hidden_pre: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
    pub output_pre: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
}

impl RnnForward {
    /// Step outputs concatenated in order, `L * d_out` long.
    pub fn flat_output(&self) -> Vec<f64> {
        self.output.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnGradients {
    pub w1: Matrix,
    pub w2: Matrix,
}

impl RnnGradients {
    pub fn zeros_like(model: &RnnModel) -> Self {
        Self {
            w1: Matrix::zeros(HIDDEN, RNN_INPUT),
            w2: Matrix::zeros(model.d_out, HIDDEN),
        }
    }
}

impl RnnModel {
    pub fn from_weights(w1: Matrix, w2: Matrix) -> Result<Self> {
        let d_out = w2.rows();
        if d_out == 0 || w1.shape() != (HIDDEN, RNN_INPUT) || w2.cols() != HIDDEN {
            return Err(Error::ShapeMismatch(format!(
                "recurrent model needs w1 {HIDDEN}x{RNN_INPUT} and w2 d_outx{HIDDEN}, got {:?} and {:?}",
                w1.shape(),
                w2.shape()
            )));
        }
        if !w1.is_finite() || !w2.is_finite() {
            return Err(Error::ShapeMismatch("non-finite weight".into()));
        }
        Ok(Self { w1, w2, d_out })
    }

    pub fn init(d_out: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = init_matrix(HIDDEN, RNN_INPUT, &mut rng);
        let w2 = init_matrix(d_out, HIDDEN, &mut rng);
        Self { w1, w2, d_out }
    }

    pub fn d_out(&self) -> usize {
        self.d_out
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

    fn check_sequence(&self, x: &[f64]) -> Result<usize> {
        if x.is_empty() || !x.len().is_multiple_of(ALPHABET_SIZE) {
            return Err(Error::ShapeMismatch(format!(
                "sequence input of length {} is not a positive multiple of {ALPHABET_SIZE}",
                x.len()
            )));
        }
        Ok(x.len() / ALPHABET_SIZE)
    }

    /// Runs the recurrence over `x`, the concatenated per-residue encodings.
    pub fn forward(&self, x: &[f64]) -> Result<RnnForward> {
        let steps = self.check_sequence(x)?;
        let mut out = RnnForward {
            hidden_pre: Vec::with_capacity(steps),
            hidden: Vec::with_capacity(steps),
            output_pre: Vec::with_capacity(steps),
            output: Vec::with_capacity(steps),
        };
        let mut prev = vec![0.0; HIDDEN];
        for xk in x.chunks(ALPHABET_SIZE) {
            let pre: Vec<f64> = (0..HIDDEN)
                .map(|i| {
                    let row = self.w1.row(i);
                    let input: f64 = xk
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(j, &v)| row[j] * v)
                        .sum();
                    let recurrent: f64 = row[ALPHABET_SIZE..]
                        .iter()
                        .zip(&prev)
                        .map(|(w, h)| w * h)
                        .sum();
                    input + recurrent
                })
                .collect();
            let h: Vec<f64> = pre.iter().map(|&z| relu(z)).collect();
            let o_pre: Vec<f64> = (0..self.d_out)
                .map(|i| self.w2.row(i).iter().zip(&h).map(|(w, v)| w * v).sum())
                .collect();
            let o = o_pre.iter().map(|&z| relu(z)).collect();
            out.hidden_pre.push(pre);
            out.hidden.push(h.clone());
            out.output_pre.push(o_pre);
            out.output.push(o);
            prev = h;
        }
        Ok(out)
    }

    /// Backpropagation through time. `labels` and the loss weights cover the
    /// flattened outputs, `L * d_out` entries.
    pub fn backward(
        &self,
        x: &[f64],
        labels: &[f64],
        loss: &LossSpec,
    ) -> Result<(f64, RnnGradients)> {
        let steps = self.check_sequence(x)?;
        let n = steps * self.d_out;
        if labels.len() != n || loss.m() != n {
            return Err(Error::ShapeMismatch(format!(
                "{steps} steps with {} outputs each need {n} labels and loss weights, got {} and {}",
                self.d_out,
                labels.len(),
                loss.m()
            )));
        }
        let fwd = self.forward(x)?;
        let mut grads = RnnGradients::zeros_like(self);
        let g = weighted_rmse_grad_unchecked(&fwd.flat_output(), labels, loss.weights());
        if g.zero_loss {
            return Ok((g.loss, grads));
        }

        let zero = vec![0.0; HIDDEN];
        let mut carry = vec![0.0; HIDDEN];
        for k in (0..steps).rev() {
            let delta_out: Vec<f64> = (0..self.d_out)
                .map(|i| g.grad[k * self.d_out + i] * relu_grad(fwd.output_pre[k][i]))
                .collect();
            for (i, &d) in delta_out.iter().enumerate() {
                for (gw, &h) in grads.w2.row_mut(i).iter_mut().zip(&fwd.hidden[k]) {
                    *gw += d * h;
                }
            }
            let delta_hidden: Vec<f64> = (0..HIDDEN)
                .map(|j| {
                    let from_out: f64 = delta_out
                        .iter()
                        .enumerate()
                        .map(|(i, d)| d * self.w2.get(i, j))
                        .sum();
                    (from_out + carry[j]) * relu_grad(fwd.hidden_pre[k][j])
                })
                .collect();
            let xk = &x[k * ALPHABET_SIZE..(k + 1) * ALPHABET_SIZE];
            let prev = if k == 0 { &zero } else { &fwd.hidden[k - 1] };
            for (j, &d) in delta_hidden.iter().enumerate() {
                let row = grads.w1.row_mut(j);
                for (gw, &xv) in row[..ALPHABET_SIZE].iter_mut().zip(xk) {
                    *gw += d * xv;
                }
                for (gw, &hv) in row[ALPHABET_SIZE..].iter_mut().zip(prev) {
                    *gw += d * hv;
                }
            }
            carry = (0..HIDDEN)
                .map(|j| {
                    delta_hidden
                        .iter()
                        .enumerate()
                        .map(|(i, d)| d * self.w1.get(i, ALPHABET_SIZE + j))
                        .sum()
                })
                .collect();
        }
        Ok((g.loss, grads))
    }

    pub fn sgd_step(&mut self, grads: &RnnGradients, lr: f64) {
        self.w1.sub_scaled(&grads.w1, lr);
        self.w2.sub_scaled(&grads.w2, lr);
    }
}

pub fn rnn_forward(model: &RnnModel, x: &[f64]) -> Result<RnnForward> {
    model.forward(x)
}

pub fn rnn_backward(
    model: &RnnModel,
    x: &[f64],
    labels: &[f64],
    loss: &LossSpec,
) -> Result<(f64, RnnGradients)> {
    model.backward(x, labels, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{encode_residues, parse_sequence};
    use crate::nn::MlpModel;

    fn seq(text: &str) -> Vec<f64> {
        encode_residues(&parse_sequence(text).unwrap())
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        let model = RnnModel::from_weights(Matrix::zeros(40, 60), Matrix::zeros(1, 40)).unwrap();
        let f = model.forward(&seq("ACDEF")).unwrap();
        assert!(f.flat_output().iter().all(|&o| o == 0.0));
    }

    #[test]
    fn hand_evaluated_recurrence() {
        let model =
            RnnModel::from_weights(Matrix::filled(40, 60, 0.01), Matrix::filled(1, 40, 0.01))
                .unwrap();
        let f = model.forward(&seq("AW")).unwrap();
        assert!(f.hidden[0].iter().all(|&h| (h - 0.01).abs() < 1e-15));
        assert!((f.output[0][0] - 0.004).abs() < 1e-15);
        assert!(f.hidden[1].iter().all(|&h| (h - 0.014).abs() < 1e-15));
        assert!((f.output[1][0] - 0.0056).abs() < 1e-15);
    }

    #[test]
    fn single_step_is_a_plain_mlp() {
        let rnn = RnnModel::init(1, 9);
        // A one-residue MLP with the input columns of the recurrent weights.
        let mut w1 = Matrix::zeros(40, 20);
        for i in 0..40 {
            w1.row_mut(i).copy_from_slice(&rnn.w1().row(i)[..20]);
        }
        let mlp = MlpModel::from_weights(1, w1, rnn.w2().clone()).unwrap();
        for text in ["A", "K", "W"] {
            let x = seq(text);
            assert_eq!(rnn.forward(&x).unwrap().output[0], mlp.predict(&x).unwrap());
        }
    }

    #[test]
    fn zero_paths() {
        let model = RnnModel::from_weights(Matrix::zeros(40, 60), Matrix::zeros(1, 40)).unwrap();
        let (e, g) = model
            .backward(&seq("ACD"), &[0.0; 3], &LossSpec::uniform(3))
            .unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(g, RnnGradients::zeros_like(&model));

        let mut model = RnnModel::init(1, 1);
        model.w2_mut().as_mut_slice().fill(0.0);
        let (e, g) = model
            .backward(&seq("ACD"), &[1.0; 3], &LossSpec::uniform(3))
            .unwrap();
        assert!(e > 0.0);
        assert!(g
            .w1
            .as_slice()
            .iter()
            .chain(g.w2.as_slice())
            .all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let model = RnnModel::init(1, 0);
        assert!(model.forward(&[]).is_err());
        assert!(model.forward(&[0.0; 21]).is_err());
        assert!(model
            .backward(&seq("AC"), &[0.0; 3], &LossSpec::uniform(3))
            .is_err());
    }
}
