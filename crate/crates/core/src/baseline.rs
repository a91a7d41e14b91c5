//! Count-based helicity baselines.
//!
//! For order `n` every n-gram occurrence is credited to its center residue
//! (1-based `ceil(n/2)`): `N` counts occurrences and `H` those whose center
//! lies in a helix. The prediction at a position is `H/N` of the n-gram
//! centered there, or the corpus helix rate when the n-gram was never seen or
//! does not fit inside the chain.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_sequence, sequence_string, AminoAcid};
use crate::error::{Error, Result};
use crate::pdb::ProteinChain;
use crate::train_eval::{evaluate, EvalReport, HelicityPredictor, Prediction};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramCount {
    #[serde(rename = "H")]
    pub helix: u64,
    #[serde(rename = "N")]
    pub total: u64,
}

/// Partial counts; merging two halves of a corpus equals counting it whole.
#[derive(Debug, Clone, Default, PartialEq)]
struct Counts {
    grams: BTreeMap<Vec<AminoAcid>, GramCount>,
    residues: u64,
    helix_residues: u64,
}

impl Counts {
    fn of_chain(chain: &ProteinChain, order: usize) -> Self {
        let mut counts = Counts {
            residues: chain.len() as u64,
            helix_residues: chain.helix_count() as u64,
            ..Default::default()
        };
        let center = center_index(order);
        for (start, gram) in chain.sequence.windows(order).enumerate() {
            let entry = counts.grams.entry(gram.to_vec()).or_default();
            entry.total += 1;
            entry.helix += chain.helix_mask[start + center] as u64;
        }
        counts
    }

    fn merge(mut self, other: Counts) -> Self {
        for (gram, c) in other.grams {
            let entry = self.grams.entry(gram).or_default();
            entry.helix += c.helix;
            entry.total += c.total;
        }
        self.residues += other.residues;
        self.helix_residues += other.helix_residues;
        self
    }
}

/// 0-based position of the residue an n-gram is credited to.
pub fn center_index(order: usize) -> usize {
    order.div_ceil(2) - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    order: usize,
    counts: BTreeMap<Vec<AminoAcid>, GramCount>,
    global_helix_rate: f64,
    pseudo_count: f64,
}

pub fn fit(chains: &[ProteinChain], order: usize) -> Result<BaselineTable> {
    fit_with_pseudo_count(chains, order, 0.0)
}

/// With `pseudo_count = a > 0`, probabilities become `(H + a*g) / (N + a)`
/// where `g` is the global helix rate.
pub fn fit_with_pseudo_count(
    chains: &[ProteinChain],
    order: usize,
    pseudo_count: f64,
) -> Result<BaselineTable> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "baseline order must be 1, 2 or 3, got {order}"
        )));
    }
    if !(pseudo_count >= 0.0 && pseudo_count.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pseudo-count must be non-negative, got {pseudo_count}"
        )));
    }
    let counts = chains
        .par_iter()
        .map(|c| Counts::of_chain(c, order))
        .reduce(Counts::default, Counts::merge);
    if counts.residues == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(BaselineTable {
        order,
        counts: counts.grams,
        global_helix_rate: counts.helix_residues as f64 / counts.residues as f64,
        pseudo_count,
    })
}

impl BaselineTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn global_helix_rate(&self) -> f64 {
        self.global_helix_rate
    }

    pub fn count(&self, gram: &[AminoAcid]) -> Option<GramCount> {
        self.counts.get(gram).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[AminoAcid], GramCount)> {
        self.counts.iter().map(|(g, c)| (g.as_slice(), *c))
    }

    /// `P(helix | gram)`, `None` for an unseen gram.
    pub fn probability(&self, gram: &[AminoAcid]) -> Option<f64> {
        let c = self.counts.get(gram)?;
        let denom = c.total as f64 + self.pseudo_count;
        (denom > 0.0).then(|| (c.helix as f64 + self.pseudo_count * self.global_helix_rate) / denom)
    }

    pub fn predict(&self, chain: &ProteinChain) -> Vec<f64> {
        let center = center_index(self.order);
        let len = chain.len();
        (0..len)
            .map(|p| {
                p.checked_sub(center)
                    .filter(|&start| start + self.order <= len)
                    .and_then(|start| self.probability(&chain.sequence[start..start + self.order]))
                    .unwrap_or(self.global_helix_rate)
            })
            .collect()
    }

    /// Helix propensity `(H_R / sum H) / (N_R / sum N)` per residue type seen
    /// in training. Only defined for unigram tables.
    pub fn propensity(&self) -> Result<BTreeMap<AminoAcid, f64>> {
        if self.order != 1 {
            return Err(Error::InvalidArgument(format!(
                "propensity needs a unigram table, this one has order {}",
                self.order
            )));
        }
        let helix: u64 = self.counts.values().map(|c| c.helix).sum();
        let total: u64 = self.counts.values().map(|c| c.total).sum();
        if helix == 0 {
            return Err(Error::NoHelices);
        }
        Ok(self
            .counts
            .iter()
            .filter(|(_, c)| c.total > 0)
            .map(|(gram, c)| {
                let in_helix = c.helix as f64 / helix as f64;
                let overall = c.total as f64 / total as f64;
                (gram[0], in_helix / overall)
            })
            .collect())
    }
}

pub fn predict(table: &BaselineTable, chain: &ProteinChain) -> Vec<f64> {
    table.predict(chain)
}

pub fn propensity(table: &BaselineTable) -> Result<BTreeMap<AminoAcid, f64>> {
    table.propensity()
}

impl HelicityPredictor for BaselineTable {
    fn predict_chain(&self, chain: &ProteinChain) -> Prediction {
        Prediction {
            values: self.predict(chain),
            fallback: false,
        }
    }
}

/// Full-protein RMSE of the baseline on `chains`.
pub fn baseline_report(table: &BaselineTable, chains: &[ProteinChain]) -> EvalReport {
    evaluate(table, chains, &format!("baseline order={}", table.order))
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    gram: String,
    #[serde(rename = "H")]
    helix: u64,
    #[serde(rename = "N")]
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct TableWire {
    order: usize,
    entries: Vec<TableEntry>,
    global_helix_rate: f64,
    #[serde(default)]
    pseudo_count: f64,
}

impl BaselineTable {
    pub fn to_json(&self) -> Result<String> {
        let wire = TableWire {
            order: self.order,
            entries: self
                .counts
                .iter()
                .map(|(g, c)| TableEntry {
                    gram: sequence_string(g),
                    helix: c.helix,
                    total: c.total,
                })
                .collect(),
            global_helix_rate: self.global_helix_rate,
            pseudo_count: self.pseudo_count,
        };
        let mut text = serde_json::to_string_pretty(&wire)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: TableWire = serde_json::from_str(text)?;
        if !(1..=3).contains(&wire.order) {
            return Err(Error::InvalidArgument(format!(
                "table order {}",
                wire.order
            )));
        }
        if !(0.0..=1.0).contains(&wire.global_helix_rate) {
            return Err(Error::InvalidArgument(format!(
                "global helix rate {} outside [0, 1]",
                wire.global_helix_rate
            )));
        }
        let mut counts = BTreeMap::new();
        for e in wire.entries {
            let gram = parse_sequence(&e.gram)
                .ok()
                .filter(|g| g.len() == wire.order)
                .ok_or_else(|| Error::InvalidArgument(format!("bad gram {:?}", e.gram)))?;
            if e.helix > e.total {
                return Err(Error::InvalidArgument(format!(
                    "gram {}: H = {} exceeds N = {}",
                    e.gram, e.helix, e.total
                )));
            }
            counts.insert(
                gram,
                GramCount {
                    helix: e.helix,
                    total: e.total,
                },
            );
        }
        Ok(Self {
            order: wire.order,
            counts,
            global_helix_rate: wire.global_helix_rate,
            pseudo_count: wire.pseudo_count,
        })
    }
}

/// Two-column CSV `residue,propensity`.
pub fn write_propensity_csv<W: Write>(table: &BTreeMap<AminoAcid, f64>, mut out: W) -> Result<()> {
    writeln!(out, "residue,propensity")?;
    for (aa, p) in table {
        writeln!(out, "{aa},{p}")?;
    }
    Ok(())
}
