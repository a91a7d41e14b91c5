//! Dense networks with exact backpropagation: the windowed MLP and the
//! single-residue recurrent network. Neither has bias terms, and both apply
//! ReLU on the hidden and output layers.

mod matrix;
mod mlp;
mod model_file;
mod rnn;

pub use matrix::Matrix;
pub use mlp::{mlp_backward, mlp_forward, MlpForward, MlpGradients, MlpModel};
pub use model_file::{Model, ModelFile, TrainingMetadata, MODEL_FORMAT_VERSION};
pub use rnn::{rnn_backward, rnn_forward, RnnForward, RnnGradients, RnnModel};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Hidden layer width of both architectures.
pub const HIDDEN: usize = 40;

#[inline]
pub fn relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient of ReLU, 0 at the kink.
#[inline]
pub(crate) fn relu_grad(pre: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mlp,
    Rnn,
}

/// Half-width of the uniform fan-based initialization range.
pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn init_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let bound = init_bound(cols, rows);
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("init shape")
}

/// Seeded model construction. For the MLP `m` is the window length; for the
/// RNN it is the per-step output width.
pub fn init_model(kind: ModelKind, m: usize, seed: u64) -> Model {
    match kind {
        ModelKind::Mlp => Model::Mlp(MlpModel::init(m, seed)),
        ModelKind::Rnn => Model::Rnn(RnnModel::init(m, seed)),
    }
}
