use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{encode_residues, ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::nn::{MlpModel, Model, ModelFile, RnnModel, TrainingMetadata};
use crate::pdb::ProteinChain;

/// Order in which SGD visits training windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Every window of every chain pooled and reshuffled each epoch.
    WindowShuffle,
    /// Chains reshuffled each epoch; each chain's windows visited left to right.
    ProteinOrder,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::WindowShuffle => "window-shuffle",
            Regime::ProteinOrder => "protein-order",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window-shuffle" => Ok(Regime::WindowShuffle),
            "protein-order" => Ok(Regime::ProteinOrder),
            other => Err(Error::InvalidArgument(format!(
                "unknown regime {other:?} (expected window-shuffle or protein-order)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub m: usize,
    pub loss_kind: LossKind,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub regime: Regime,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            m: 10,
            loss_kind: LossKind::Unweighted,
            epochs: 30,
            lr: 0.05,
            seed: 0,
            regime: Regime::ProteinOrder,
        }
    }
}

impl TrainConfig {
    /// `lr = 0` is accepted and leaves the initial weights untouched.
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument(format!(
                "window must be at least 2, got {}",
                self.m
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be non-negative, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "mlp m={} loss={} regime={} epochs={} lr={} seed={}",
            self.m, self.loss_kind, self.regime, self.epochs, self.lr, self.seed
        )
    }

    pub fn rnn_fingerprint(&self) -> String {
        format!(
            "rnn loss=unweighted-full-sequence epochs={} lr={} seed={}",
            self.epochs, self.lr, self.seed
        )
    }
}

/// Shuffling draws from a stream separate from weight initialization so both
/// derive from the one seed without overlapping.
fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn global_helix_rate(chains: &[ProteinChain]) -> f64 {
    let (helix, total) = chains.iter().fold((0usize, 0usize), |(h, n), c| {
        (h + c.helix_count(), n + c.len())
    });
    if total == 0 {
        0.0
    } else {
        helix as f64 / total as f64
    }
}

struct EncodedChain {
    features: Vec<f64>,
    labels: Vec<f64>,
    windows: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean training loss per epoch, measured before each step.
    pub history: Vec<f64>,
    /// Ids of chains shorter than the window, which contributed no examples.
    pub skipped: Vec<String>,
}

/// Trains a windowed model with single-example SGD.
pub fn train(config: &TrainConfig, chains: &[ProteinChain]) -> Result<TrainOutcome> {
    config.validate()?;
    let m = config.m;
    let mut skipped = Vec::new();
    let encoded: Vec<EncodedChain> = chains
        .iter()
        .filter_map(|c| {
            if c.len() < m {
                skipped.push(c.id.clone());
                return None;
            }
            Some(EncodedChain {
                features: encode_residues(&c.sequence),
                labels: c.labels(),
                windows: c.len() - m + 1,
            })
        })
        .collect();
    if encoded.is_empty() {
        return Err(Error::NoUsableChains(m));
    }

    let loss = LossSpec::new(config.loss_kind, m);
    let mut model = MlpModel::init(m, config.seed);
    let mut rng = shuffle_rng(config.seed);
    let mut chain_order: Vec<usize> = (0..encoded.len()).collect();
    let mut pool: Vec<(usize, usize)> = encoded
        .iter()
        .enumerate()
        .flat_map(|(c, e)| (0..e.windows).map(move |o| (c, o)))
        .collect();
    let mut history = Vec::with_capacity(config.epochs);

    let step = |model: &mut MlpModel, c: usize, offset: usize| -> f64 {
        let e = &encoded[c];
        let x = &e.features[offset * ALPHABET_SIZE..(offset + m) * ALPHABET_SIZE];
        let y = &e.labels[offset..offset + m];
        model
            .train_example(x, y, &loss, config.lr)
            .expect("window shapes follow the model")
    };

    for _ in 0..config.epochs {
        let mut total = 0.0;
        match config.regime {
            Regime::ProteinOrder => {
                chain_order.shuffle(&mut rng);
                for &c in &chain_order {
                    for offset in 0..encoded[c].windows {
                        total += step(&mut model, c, offset);
                    }
                }
            }
            Regime::WindowShuffle => {
                pool.shuffle(&mut rng);
                for &(c, offset) in &pool {
                    total += step(&mut model, c, offset);
                }
            }
        }
        history.push(total / pool.len() as f64);
    }
    Ok(TrainOutcome {
        model,
        history,
        skipped,
    })
}

#[derive(Debug, Clone)]
pub struct RnnTrainOutcome {
    pub model: RnnModel,
    pub history: Vec<f64>,
}

/// Trains the recurrent model one chain per step on full-sequence unweighted
/// RMSE, chains reshuffled every epoch. `config.m`, `loss_kind` and `regime`
/// do not apply.
pub fn train_rnn(config: &TrainConfig, chains: &[ProteinChain]) -> Result<RnnTrainOutcome> {
    if config.epochs == 0 || !(config.lr >= 0.0 && config.lr.is_finite()) {
        return Err(Error::InvalidArgument(
            "epochs must be positive and lr non-negative".into(),
        ));
    }
    if chains.is_empty() {
        return Err(Error::NoUsableChains(1));
    }
    let encoded: Vec<(Vec<f64>, Vec<f64>, LossSpec)> = chains
        .iter()
        .map(|c| {
            (
                encode_residues(&c.sequence),
                c.labels(),
                LossSpec::uniform(c.len()),
            )
        })
        .collect();
    let mut model = RnnModel::init(1, config.seed);
    let mut rng = shuffle_rng(config.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (x, y, loss) = &encoded[i];
            let (e, grads) = model
                .backward(x, y, loss)
                .expect("sequence shapes follow the model");
            model.sgd_step(&grads, config.lr);
            total += e;
        }
        history.push(total / order.len() as f64);
    }
    Ok(RnnTrainOutcome { model, history })
}

/// Packages a trained windowed model with its training metadata for saving.
pub fn model_file(
    config: &TrainConfig,
    chains: &[ProteinChain],
    outcome: &TrainOutcome,
) -> ModelFile {
    ModelFile {
        model: Model::Mlp(outcome.model.clone()),
        loss_kind: config.loss_kind,
        seed: config.seed,
        metadata: TrainingMetadata {
            fingerprint: config.fingerprint(),
            regime: Some(config.regime.to_string()),
            epochs: config.epochs,
            lr: config.lr,
            train_chains: chains.len(),
            global_helix_rate: global_helix_rate(chains),
            history: outcome.history.clone(),
        },
    }
}

pub fn rnn_model_file(
    config: &TrainConfig,
    chains: &[ProteinChain],
    outcome: &RnnTrainOutcome,
) -> ModelFile {
    ModelFile {
        model: Model::Rnn(outcome.model.clone()),
        loss_kind: LossKind::Unweighted,
        seed: config.seed,
        metadata: TrainingMetadata {
            fingerprint: config.rnn_fingerprint(),
            regime: None,
            epochs: config.epochs,
            lr: config.lr,
            train_chains: chains.len(),
            global_helix_rate: global_helix_rate(chains),
            history: outcome.history.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_sequence;

    fn chain(id: &str, seq: &str) -> ProteinChain {
        let sequence = parse_sequence(seq).unwrap();
        let mask = seq.chars().map(|c| "ALE".contains(c)).collect();
        ProteinChain::new(id, sequence, mask, None).unwrap()
    }

    fn corpus() -> Vec<ProteinChain> {
        vec![
            chain("T001_A", "ALEKGSTALEWPDALLE"),
            chain("T002_A", "GGSALEEKLMNPQ"),
            chain("T003_A", "ACD"),
        ]
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig {
            m: 7,
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        assert!(TrainConfig {
            epochs: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig { m: 1, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig {
            lr: -0.1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig { lr: 0.0, ..ok }.validate().is_ok());
        assert_eq!(
            "protein-order".parse::<Regime>().unwrap(),
            Regime::ProteinOrder
        );
        assert!("random".parse::<Regime>().is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let cfg = TrainConfig {
            m: 7,
            epochs: 1,
            lr: 0.0,
            seed: 3,
            ..Default::default()
        };
        let out = train(&cfg, &corpus()).unwrap();
        assert_eq!(out.model, MlpModel::init(7, 3));
        assert_eq!(out.skipped, vec!["T003_A".to_string()]);
    }

    #[test]
    fn training_is_deterministic() {
        for regime in [Regime::ProteinOrder, Regime::WindowShuffle] {
            let cfg = TrainConfig {
                m: 5,
                epochs: 3,
                seed: 9,
                regime,
                ..Default::default()
            };
            let a = train(&cfg, &corpus()).unwrap();
            let b = train(&cfg, &corpus()).unwrap();
            assert_eq!(a.model, b.model);
            assert_eq!(a.history, b.history);
            assert_eq!(a.history.len(), 3);
        }
        let cfg = TrainConfig {
            epochs: 2,
            seed: 4,
            ..Default::default()
        };
        let a = train_rnn(&cfg, &corpus()).unwrap();
        let b = train_rnn(&cfg, &corpus()).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn regimes_visit_windows_differently() {
        let base = TrainConfig {
            m: 5,
            epochs: 2,
            seed: 1,
            ..Default::default()
        };
        let a = train(&base, &corpus()).unwrap();
        let b = train(
            &TrainConfig {
                regime: Regime::WindowShuffle,
                ..base
            },
            &corpus(),
        )
        .unwrap();
        assert_ne!(a.model, b.model);
    }

    #[test]
    fn no_usable_chains() {
        let cfg = TrainConfig {
            m: 20,
            ..Default::default()
        };
        assert!(matches!(
            train(&cfg, &corpus()),
            Err(Error::NoUsableChains(20))
        ));
    }

    #[test]
    fn helix_rate_over_all_residues() {
        let rate = global_helix_rate(&corpus());
        let (h, n) = (10 + 5 + 1, 17 + 13 + 3);
        assert!((rate - h as f64 / n as f64).abs() < 1e-15);
        assert_eq!(global_helix_rate(&[]), 0.0);
    }
}
