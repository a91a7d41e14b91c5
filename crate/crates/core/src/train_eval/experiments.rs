//! Controlled comparisons. Each runner splits its corpora with the configured
//! seed, trains every variant from that same seed, and scores all variants on
//! the same held-out chains, alongside a unigram baseline fitted on the same
//! training chains.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, EvalReport, WindowPredictor};
use super::train::{global_helix_rate, train, TrainConfig};
use crate::baseline;
use crate::dataset::split_dataset;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::pdb::ProteinChain;

pub const LOSS_VARIANTS: [LossKind; 3] = [
    LossKind::Unweighted,
    LossKind::GaussianCorrected,
    LossKind::Centered,
];

pub const WINDOW_SIZES: [usize; 3] = [7, 10, 13];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub train_fraction: f64,
    /// Cross-species only: cap on the equal-size training subsets.
    pub subset_size: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            train_fraction: 0.8,
            subset_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub label: String,
    pub cells: BTreeMap<String, EvalReport>,
    /// Unigram baselines on the same splits, keyed like `cells`.
    pub baselines: BTreeMap<String, EvalReport>,
}

impl ExperimentResult {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// `cell,average` rows; baseline rows are prefixed with `baseline `.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "cell,average")?;
        for (cell, report) in &self.cells {
            writeln!(out, "{cell},{}", report.average)?;
        }
        for (cell, report) in &self.baselines {
            writeln!(out, "baseline {cell},{}", report.average)?;
        }
        Ok(())
    }
}

fn train_and_score(
    config: &TrainConfig,
    train_set: &[ProteinChain],
    tests: &[&[ProteinChain]],
) -> Result<Vec<EvalReport>> {
    let outcome = train(config, train_set)?;
    let predictor = WindowPredictor {
        model: &outcome.model,
        fallback_rate: global_helix_rate(train_set),
    };
    let fingerprint = config.fingerprint();
    Ok(tests
        .iter()
        .map(|t| evaluate(&predictor, t, &fingerprint))
        .collect())
}

fn baseline_on(train_set: &[ProteinChain], test_set: &[ProteinChain]) -> Result<EvalReport> {
    Ok(baseline::baseline_report(
        &baseline::fit(train_set, 1)?,
        test_set,
    ))
}

/// Trains one model per species on equal-size training subsets and scores
/// each on both species' test sets. Cell keys are `train=<a>,test=<b>`.
pub fn experiment_cross_species(
    (name_a, chains_a): (&str, &[ProteinChain]),
    (name_b, chains_b): (&str, &[ProteinChain]),
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    if chains_a.is_empty() || chains_b.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if name_a == name_b {
        return Err(Error::InvalidArgument("species labels must differ".into()));
    }
    let seed = config.train.seed;
    let split_a = split_dataset(chains_a, config.train_fraction, seed)?;
    let split_b = split_dataset(chains_b, config.train_fraction, seed)?;
    let n = split_a
        .train
        .len()
        .min(split_b.train.len())
        .min(config.subset_size.unwrap_or(usize::MAX));
    let subset = |chains: &[ProteinChain]| -> Vec<ProteinChain> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let mut picked: Vec<ProteinChain> = chains.choose_multiple(&mut rng, n).cloned().collect();
        picked.sort_by(|a, b| a.id.cmp(&b.id));
        picked
    };
    let train_a = subset(&split_a.train);
    let train_b = subset(&split_b.train);
    let tests: [&[ProteinChain]; 2] = [&split_a.test, &split_b.test];

    let (scores_a, scores_b) = rayon::join(
        || train_and_score(&config.train, &train_a, &tests),
        || train_and_score(&config.train, &train_b, &tests),
    );
    let (scores_a, scores_b) = (scores_a?, scores_b?);

    let key = |tr: &str, te: &str| format!("train={tr},test={te}");
    let mut cells = BTreeMap::new();
    let mut baselines = BTreeMap::new();
    for (train_name, scores, train_set) in
        [(name_a, scores_a, &train_a), (name_b, scores_b, &train_b)]
    {
        for ((test_name, test_set), report) in [(name_a, tests[0]), (name_b, tests[1])]
            .into_iter()
            .zip(scores)
        {
            cells.insert(key(train_name, test_name), report);
            baselines.insert(
                key(train_name, test_name),
                baseline_on(train_set, test_set)?,
            );
        }
    }
    Ok(ExperimentResult {
        label: "cross-species".into(),
        cells,
        baselines,
    })
}

/// One model per training loss on a shared split. Cell keys are `loss=<name>`.
pub fn experiment_losses(
    chains: &[ProteinChain],
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let split = split_dataset(chains, config.train_fraction, config.train.seed)?;
    let reports = LOSS_VARIANTS
        .par_iter()
        .map(|&loss_kind| {
            let cfg = TrainConfig {
                loss_kind,
                ..config.train.clone()
            };
            train_and_score(&cfg, &split.train, &[&split.test])
                .map(|mut r| (format!("loss={loss_kind}"), r.remove(0)))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(ExperimentResult {
        label: "losses".into(),
        cells: reports,
        baselines: BTreeMap::from([(
            "unigram".to_string(),
            baseline_on(&split.train, &split.test)?,
        )]),
    })
}

/// One model per window size on a shared split. Cell keys are `window=<m>`,
/// zero-padded so they sort numerically.
pub fn experiment_window_sizes(
    chains: &[ProteinChain],
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let split = split_dataset(chains, config.train_fraction, config.train.seed)?;
    let reports = WINDOW_SIZES
        .par_iter()
        .map(|&m| {
            let cfg = TrainConfig {
                m,
                ..config.train.clone()
            };
            train_and_score(&cfg, &split.train, &[&split.test])
                .map(|mut r| (format!("window={m:02}"), r.remove(0)))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(ExperimentResult {
        label: "window-sizes".into(),
        cells: reports,
        baselines: BTreeMap::from([(
            "unigram".to_string(),
            baseline_on(&split.train, &split.test)?,
        )]),
    })
}
