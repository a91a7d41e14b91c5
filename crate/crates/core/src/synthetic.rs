//! Synthetic labeled corpora with a known, window-local helix rule.
//!
//! A residue is helix if it belongs to the rule's helix-former set, or if it
//! is flanked on both sides by helix formers. Formers are always helix, while
//! every other residue is helix only in context, so a per-residue baseline
//! cannot be exact but a window of three or more can. Chains begin and end
//! with a former so the rule never needs a residue outside the chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::AminoAcid;
use crate::error::{Error, Result};
use crate::pdb::ProteinChain;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub chains: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub formers: Vec<AminoAcid>,
    /// Probability that an interior residue is drawn from the formers.
    pub former_rate: f64,
    pub id_prefix: String,
    pub species: Option<String>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Formers A, L, E.
    pub fn standard(chains: usize, seed: u64) -> Self {
        Self::with_formers("ALE", chains, seed)
    }

    pub fn with_formers(formers: &str, chains: usize, seed: u64) -> Self {
        Self {
            chains,
            min_len: 30,
            max_len: 60,
            formers: formers.chars().filter_map(AminoAcid::from_char).collect(),
            former_rate: 0.35,
            id_prefix: "S".into(),
            species: None,
            seed,
        }
    }
}

/// Applies the helix rule to a sequence.
pub fn helix_rule(sequence: &[AminoAcid], formers: &[AminoAcid]) -> Vec<bool> {
    let is_former = |i: usize| formers.contains(&sequence[i]);
    (0..sequence.len())
        .map(|i| {
            is_former(i)
                || (i > 0 && i + 1 < sequence.len() && is_former(i - 1) && is_former(i + 1))
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Vec<ProteinChain>> {
    if spec.formers.is_empty() || spec.formers.len() >= 20 {
        return Err(Error::InvalidArgument(
            "need between 1 and 19 helix formers".into(),
        ));
    }
    if spec.min_len < 2 || spec.min_len > spec.max_len {
        return Err(Error::InvalidArgument(format!(
            "invalid length range {}..={}",
            spec.min_len, spec.max_len
        )));
    }
    if !(0.0..=1.0).contains(&spec.former_rate) {
        return Err(Error::InvalidArgument(format!(
            "former rate {} outside [0, 1]",
            spec.former_rate
        )));
    }
    let others: Vec<AminoAcid> = AminoAcid::all()
        .filter(|aa| !spec.formers.contains(aa))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.chains.to_string().len().max(4);
    (0..spec.chains)
        .map(|k| {
            let len = rng.gen_range(spec.min_len..=spec.max_len);
            let sequence: Vec<AminoAcid> = (0..len)
                .map(|i| {
                    let pick_former = i == 0 || i + 1 == len || rng.gen_bool(spec.former_rate);
                    let pool = if pick_former { &spec.formers } else { &others };
                    pool[rng.gen_range(0..pool.len())]
                })
                .collect();
            let mask = helix_rule(&sequence, &spec.formers);
            ProteinChain::new(
                format!("{}{:0width$}_A", spec.id_prefix, k),
                sequence,
                mask,
                spec.species.clone(),
            )
        })
        .collect()
}
