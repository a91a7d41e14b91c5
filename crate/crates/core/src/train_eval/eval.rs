use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::encode_residues;
use crate::error::{Error, Result};
use crate::nn::{MlpModel, Model, ModelFile, RnnModel};
use crate::pdb::ProteinChain;

/// Per-residue helicity for a whole chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    /// The predictor could not score this chain and emitted a constant fallback.
    pub fallback: bool,
}

/// Anything that can assign a helicity to every residue of a chain.
pub trait HelicityPredictor: Sync {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction;
}

/// Window offset and in-window index used for position `p` of a chain of
/// length `len`: the window where `p` sits closest to the center `floor(m/2)`.
pub fn window_for_position(p: usize, len: usize, m: usize) -> (usize, usize) {
    debug_assert!(m <= len && p < len);
    let center = m / 2;
    let offset = p.saturating_sub(center).min(len - m);
    (offset, p - offset)
}

/// Stitches window outputs into a full-length prediction, clamped to `[0, 1]`.
pub fn reconstruct_prediction(model: &MlpModel, chain: &ProteinChain) -> Result<Vec<f64>> {
    let m = model.m();
    let len = chain.len();
    if len < m {
        return Err(Error::ChainTooShort { len, window: m });
    }
    let encoded = encode_residues(&chain.sequence);
    let width = encoded.len() / len;
    let outputs = (0..=len - m)
        .map(|offset| model.predict(&encoded[offset * width..(offset + m) * width]))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..len)
        .map(|p| {
            let (offset, index) = window_for_position(p, len, m);
            outputs[offset][index].clamp(0.0, 1.0)
        })
        .collect())
}

/// A windowed model plus the constant it predicts for chains shorter than its window.
#[derive(Debug, Clone, Copy)]
pub struct WindowPredictor<'a> {
    pub model: &'a MlpModel,
    pub fallback_rate: f64,
}

impl HelicityPredictor for WindowPredictor<'_> {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction {
        match reconstruct_prediction(self.model, chain) {
            Ok(values) => Prediction {
                values,
                fallback: false,
            },
            Err(_) => Prediction {
                values: vec![self.fallback_rate; chain.len()],
                fallback: true,
            },
        }
    }
}

impl HelicityPredictor for RnnModel {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction {
        let fwd = self
            .forward(&encode_residues(&chain.sequence))
            .expect("chains are non-empty");
        Prediction {
            values: fwd.output.iter().map(|o| o[0].clamp(0.0, 1.0)).collect(),
            fallback: false,
        }
    }
}

impl HelicityPredictor for ModelFile {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction {
        match &self.model {
            Model::Mlp(mlp) => WindowPredictor {
                model: mlp,
                fallback_rate: self.metadata.global_helix_rate,
            }
            .predict_chain(chain),
            Model::Rnn(rnn) => rnn.predict_chain(chain),
        }
    }
}

/// The same value at every position.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub f64);

impl HelicityPredictor for ConstantPredictor {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction {
        Prediction {
            values: vec![self.0; chain.len()],
            fallback: false,
        }
    }
}

/// `sqrt(mean((pred - truth)^2))` over the whole chain.
pub fn protein_rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteinScore {
    pub id: String,
    pub rmse: f64,
}

/// Per-protein full-length RMSE and their unweighted mean. Entries are sorted
/// by chain id so the report does not depend on corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub average: f64,
    pub config_fingerprint: String,
    pub per_protein: Vec<ProteinScore>,
    /// Chains scored with the constant fallback.
    #[serde(default)]
    pub flagged: Vec<String>,
}

impl EvalReport {
    pub fn from_scores(
        mut per_protein: Vec<ProteinScore>,
        mut flagged: Vec<String>,
        fingerprint: &str,
    ) -> Self {
        per_protein.sort_by(|a, b| a.id.cmp(&b.id).then(a.rmse.total_cmp(&b.rmse)));
        flagged.sort();
        let average = if per_protein.is_empty() {
            0.0
        } else {
            per_protein.iter().map(|s| s.rmse).sum::<f64>() / per_protein.len() as f64
        };
        Self {
            average,
            config_fingerprint: fingerprint.to_owned(),
            per_protein,
            flagged,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Scores every chain in parallel against a frozen predictor.
pub fn evaluate<P: HelicityPredictor + ?Sized>(
    predictor: &P,
    chains: &[ProteinChain],
    fingerprint: &str,
) -> EvalReport {
    let scored: Vec<(ProteinScore, bool)> = chains
        .par_iter()
        .map(|chain| {
            let pred = predictor.predict_chain(chain);
            let rmse =
                protein_rmse(&pred.values, &chain.labels()).expect("prediction covers the chain");
            (
                ProteinScore {
                    id: chain.id.clone(),
                    rmse,
                },
                pred.fallback,
            )
        })
        .collect();
    let flagged = scored
        .iter()
        .filter(|(_, f)| *f)
        .map(|(s, _)| s.id.clone())
        .collect();
    EvalReport::from_scores(
        scored.into_iter().map(|(s, _)| s).collect(),
        flagged,
        fingerprint,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_sequence;
    use crate::nn::{Matrix, HIDDEN};

    fn chain(id: &str, seq: &str, mask: &str) -> ProteinChain {
        ProteinChain::new(
            id,
            parse_sequence(seq).unwrap(),
            mask.chars().map(|c| c == '1').collect(),
            None,
        )
        .unwrap()
    }

    /// A model whose every output is `value`: one hidden unit reads 1 from
    /// each position block, the output layer scales it down.
    fn constant_model(m: usize, value: f64) -> MlpModel {
        let mut w1 = Matrix::zeros(HIDDEN, 20 * m);
        w1.row_mut(0).fill(1.0);
        let mut w2 = Matrix::zeros(m, HIDDEN);
        for i in 0..m {
            w2.set(i, 0, value / m as f64);
        }
        MlpModel::from_weights(m, w1, w2).unwrap()
    }

    #[test]
    fn window_choice_examples() {
        assert_eq!(window_for_position(0, 12, 10), (0, 0));
        assert_eq!(window_for_position(7, 12, 10), (2, 5));
        assert_eq!(window_for_position(11, 12, 10), (2, 9));
        assert_eq!(window_for_position(4, 10, 10), (0, 4));
    }

    #[test]
    fn constant_model_reconstructs_constant() {
        let model = constant_model(10, 0.3);
        for len in [10, 11, 25, 60] {
            let c = chain("T001_A", &"ACDEFGHIKL".repeat(6)[..len], &"0".repeat(len));
            let p = reconstruct_prediction(&model, &c).unwrap();
            assert_eq!(p.len(), len);
            assert!(p.iter().all(|&v| (v - 0.3).abs() < 1e-15));
        }
    }

    #[test]
    fn reconstruction_clamps_and_rejects_short_chains() {
        let model = constant_model(7, 2.5);
        let c = chain("T001_A", "ACDEFGHIK", "000000000");
        assert!(reconstruct_prediction(&model, &c)
            .unwrap()
            .iter()
            .all(|&v| v == 1.0));
        let short = chain("T002_A", "ACD", "000");
        assert!(matches!(
            reconstruct_prediction(&model, &short),
            Err(Error::ChainTooShort { len: 3, window: 7 })
        ));
        let p = WindowPredictor {
            model: &model,
            fallback_rate: 0.25,
        }
        .predict_chain(&short);
        assert!(p.fallback);
        assert_eq!(p.values, vec![0.25; 3]);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(protein_rmse(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            protein_rmse(&[0.5; 5], &[1.0, 0.0, 0.0, 1.0, 1.0]).unwrap(),
            0.5
        );
        assert!(
            (protein_rmse(&[1.0, 0.0], &[0.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2)
                .abs()
                < 1e-12
        );
        assert!(protein_rmse(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn report_average_and_order() {
        let r = EvalReport::from_scores(
            vec![
                ProteinScore {
                    id: "B".into(),
                    rmse: 0.4,
                },
                ProteinScore {
                    id: "A".into(),
                    rmse: 0.2,
                },
            ],
            vec![],
            "x",
        );
        assert!((r.average - 0.3).abs() < 1e-15);
        assert_eq!(r.per_protein[0].id, "A");

        let chains = vec![
            chain("T001_A", "ACDEFGH", "0000000"),
            chain("T002_A", "ACDEFGHIKL", "1111100000"),
        ];
        let mut reversed = chains.clone();
        reversed.reverse();
        let model = MlpModel::init(7, 1);
        let p = WindowPredictor {
            model: &model,
            fallback_rate: 0.1,
        };
        assert_eq!(evaluate(&p, &chains, "f"), evaluate(&p, &reversed, "f"));
        let perfect = evaluate(&ConstantPredictor(0.0), &chains[..1], "zero");
        assert_eq!(perfect.average, 0.0);
    }
}
