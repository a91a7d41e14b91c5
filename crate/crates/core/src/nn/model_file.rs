//! JSON model files. Weights are written row-major with shortest round-trip
//! decimal formatting, so loading returns bit-identical values.

use serde::{Deserialize, Serialize};

use super::{Matrix, MlpModel, RnnModel, HIDDEN};
use crate::dataset::{ALPHABET, ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::losses::LossKind;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mlp(MlpModel),
    Rnn(RnnModel),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Mlp(_) => "mlp",
            Model::Rnn(_) => "rnn",
        }
    }
}

/// What produced a model. Everything here is informational except
/// `global_helix_rate`, which is the prediction for chains shorter than the window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub fingerprint: String,
    pub regime: Option<String>,
    pub epochs: usize,
    pub lr: f64,
    pub train_chains: usize,
    pub global_helix_rate: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub loss_kind: LossKind,
    pub seed: u64,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    format_version: u32,
    kind: String,
    m: usize,
    d_out: usize,
    alphabet: String,
    loss_kind: LossKind,
    w1: Vec<f64>,
    w2: Vec<f64>,
    seed: u64,
    training_metadata: TrainingMetadata,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        let (kind, m, d_out, w1, w2) = match &self.model {
            Model::Mlp(mlp) => ("mlp", mlp.m(), mlp.m(), mlp.w1(), mlp.w2()),
            Model::Rnn(rnn) => ("rnn", 1, rnn.d_out(), rnn.w1(), rnn.w2()),
        };
        let wire = Wire {
            format_version: MODEL_FORMAT_VERSION,
            kind: kind.into(),
            m,
            d_out,
            alphabet: ALPHABET.into(),
            loss_kind: self.loss_kind,
            w1: w1.as_slice().to_vec(),
            w2: w2.as_slice().to_vec(),
            seed: self.seed,
            training_metadata: self.metadata.clone(),
        };
        let mut text = serde_json::to_string_pretty(&wire)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses and validates a model file. Structural disagreement with this
    /// build (version, alphabet, weight shapes) is reported as `ShapeMismatch`.
    pub fn from_json(text: &str) -> Result<Self> {
        let wire: Wire = serde_json::from_str(text)?;
        if wire.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ShapeMismatch(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                wire.format_version
            )));
        }
        if wire.alphabet != ALPHABET {
            return Err(Error::ShapeMismatch(format!(
                "model alphabet {:?} differs from {ALPHABET:?}",
                wire.alphabet
            )));
        }
        let shape_err =
            || Error::ShapeMismatch(format!("weight arrays do not fit a {} model", wire.kind));
        let model = match wire.kind.as_str() {
            "mlp" => {
                if wire.d_out != wire.m {
                    return Err(Error::ShapeMismatch(format!(
                        "windowed model with m = {} but d_out = {}",
                        wire.m, wire.d_out
                    )));
                }
                let w1 = Matrix::from_vec(HIDDEN, ALPHABET_SIZE * wire.m, wire.w1)
                    .ok_or_else(shape_err)?;
                let w2 = Matrix::from_vec(wire.m, HIDDEN, wire.w2).ok_or_else(shape_err)?;
                Model::Mlp(MlpModel::from_weights(wire.m, w1, w2)?)
            }
            "rnn" => {
                let w1 = Matrix::from_vec(HIDDEN, ALPHABET_SIZE + HIDDEN, wire.w1)
                    .ok_or_else(shape_err)?;
                let w2 = Matrix::from_vec(wire.d_out, HIDDEN, wire.w2).ok_or_else(shape_err)?;
                Model::Rnn(RnnModel::from_weights(w1, w2)?)
            }
            other => {
                return Err(Error::ShapeMismatch(format!(
                    "unknown model kind {other:?}"
                )))
            }
        };
        Ok(Self {
            model,
            loss_kind: wire.loss_kind,
            seed: wire.seed,
            metadata: wire.training_metadata,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn metadata() -> TrainingMetadata {
        TrainingMetadata {
            fingerprint: "mlp:test".into(),
            regime: Some("protein-order".into()),
            epochs: 3,
            lr: 0.05,
            train_chains: 12,
            global_helix_rate: 0.31,
            history: vec![0.5, 0.4, 0.3],
        }
    }

    #[test]
    fn rejects_foreign_alphabet_and_bad_shapes() {
        let file = ModelFile {
            model: Model::Mlp(MlpModel::init(7, 1)),
            loss_kind: LossKind::Unweighted,
            seed: 1,
            metadata: metadata(),
        };
        let text = file.to_json().unwrap();
        let swapped = text.replace(ALPHABET, "ARNDCQEGHILKMFPSTWYV");
        assert!(matches!(
            ModelFile::from_json(&swapped),
            Err(Error::ShapeMismatch(_))
        ));
        let resized = text
            .replace("\"m\": 7", "\"m\": 8")
            .replace("\"d_out\": 7", "\"d_out\": 8");
        assert!(matches!(
            ModelFile::from_json(&resized),
            Err(Error::ShapeMismatch(_))
        ));
        let versioned = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ModelFile::from_json(&versioned),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(ModelFile::from_json("{"), Err(Error::Json(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn weights_round_trip_exactly(m in 2usize..14, seed in any::<u64>(), rnn in any::<bool>()) {
            let model = if rnn {
                Model::Rnn(RnnModel::init(1, seed))
            } else {
                Model::Mlp(MlpModel::init(m, seed))
            };
            let file = ModelFile {
                model,
                loss_kind: LossKind::GaussianAsPrinted,
                seed,
                metadata: metadata(),
            };
            let text = file.to_json().unwrap();
            let back = ModelFile::from_json(&text).unwrap();
            prop_assert_eq!(&back, &file);
            prop_assert_eq!(back.to_json().unwrap(), text);
        }
    }
}
