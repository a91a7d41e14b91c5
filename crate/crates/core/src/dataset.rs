//! One-hot window encoding and train/test splitting.
//!
//! Residues are indexed by their position in [`ALPHABET`]. A window of length
//! `m` flattens `m` consecutive one-hot blocks into a vector of `20 * m`
//! entries, block `k` covering features `20k..20k + 20`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pdb::ProteinChain;

/// One-letter codes of the 20 standard amino acids, in encoding order.
pub const ALPHABET: &str = "ACDEFGHIKLMNPQRSTVWY";

pub const ALPHABET_SIZE: usize = 20;

const ALPHABET_BYTES: &[u8; ALPHABET_SIZE] = b"ACDEFGHIKLMNPQRSTVWY";

const THREE_LETTER: [&str; ALPHABET_SIZE] = [
    "ALA", "CYS", "ASP", "GLU", "PHE", "GLY", "HIS", "ILE", "LYS", "LEU", "MET", "ASN", "PRO",
    "GLN", "ARG", "SER", "THR", "VAL", "TRP", "TYR",
];

/// A standard amino acid, stored as its index in [`ALPHABET`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AminoAcid(u8);

impl AminoAcid {
    pub fn from_index(index: usize) -> Option<Self> {
        (index < ALPHABET_SIZE).then_some(Self(index as u8))
    }

    pub fn from_char(code: char) -> Option<Self> {
        let upper = code.to_ascii_uppercase();
        ALPHABET_BYTES
            .iter()
            .position(|&b| b as char == upper)
            .map(|i| Self(i as u8))
    }

    /// Looks up a standard three-letter residue name (`"ALA"`, `"TRP"`, ...).
    /// Non-standard variants are not resolved here.
    pub fn from_three_letter(name: &str) -> Option<Self> {
        THREE_LETTER
            .iter()
            .position(|&n| n.eq_ignore_ascii_case(name))
            .map(|i| Self(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn to_char(self) -> char {
        ALPHABET_BYTES[self.0 as usize] as char
    }

    pub fn three_letter(self) -> &'static str {
        THREE_LETTER[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = AminoAcid> {
        (0..ALPHABET_SIZE as u8).map(AminoAcid)
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Parses a one-letter sequence string. Returns the offending character on failure.
pub fn parse_sequence(text: &str) -> std::result::Result<Vec<AminoAcid>, char> {
    text.chars()
        .map(|c| AminoAcid::from_char(c).ok_or(c))
        .collect()
}

pub fn sequence_string(seq: &[AminoAcid]) -> String {
    seq.iter().map(|aa| aa.to_char()).collect()
}

/// The standard basis vector for `aa`.
pub fn encode_one_hot(aa: AminoAcid) -> [f64; ALPHABET_SIZE] {
    let mut v = [0.0; ALPHABET_SIZE];
    v[aa.index()] = 1.0;
    v
}

/// Flattened one-hot features for `residues`, `20 * residues.len()` long.
pub fn encode_residues(residues: &[AminoAcid]) -> Vec<f64> {
    let mut features = vec![0.0; ALPHABET_SIZE * residues.len()];
    for (k, aa) in residues.iter().enumerate() {
        features[k * ALPHABET_SIZE + aa.index()] = 1.0;
    }
    features
}

/// Inverse of [`encode_residues`]; `None` unless every block holds exactly one 1.
pub fn decode_features(features: &[f64]) -> Option<Vec<AminoAcid>> {
    if !features.len().is_multiple_of(ALPHABET_SIZE) {
        return None;
    }
    features
        .chunks(ALPHABET_SIZE)
        .map(|block| {
            let mut hot = block
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, _)| i);
            match (hot.next(), hot.next()) {
                (Some(i), None) if block[i] == 1.0 => AminoAcid::from_index(i),
                _ => None,
            }
        })
        .collect()
}

/// One training example cut from a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
    pub chain_id: String,
    pub offset: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Windows of a single chain. `skipped` is set when the chain is shorter than the window.
#[derive(Debug, Clone, Default)]
pub struct ChainWindows {
    pub windows: Vec<Window>,
    pub skipped: bool,
}

/// All full windows of length `m` at stride 1, in offset order. No padding is synthesized.
pub fn make_windows(chain: &ProteinChain, m: usize) -> ChainWindows {
    assert!(m >= 1, "window length must be positive");
    let len = chain.len();
    if len < m {
        return ChainWindows {
            windows: Vec::new(),
            skipped: true,
        };
    }
    let windows = (0..=len - m)
        .map(|offset| Window {
            features: encode_residues(&chain.sequence[offset..offset + m]),
            labels: chain.helix_mask[offset..offset + m]
                .iter()
                .map(|&h| if h { 1.0 } else { 0.0 })
                .collect(),
            chain_id: chain.id.clone(),
            offset,
        })
        .collect();
    ChainWindows {
        windows,
        skipped: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ProteinChain>,
    pub test: Vec<ProteinChain>,
    pub seed: u64,
}

/// Number of training chains for a corpus of `n`: `round(fraction * n)`, kept
/// within `1..n` so that neither side is empty.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    let k = (train_fraction * n as f64).round() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Splits by whole chain after a seeded shuffle.
pub fn split_dataset(
    chains: &[ProteinChain],
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = chains.len();
    if n < 2 {
        return Err(Error::CorpusTooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = train_size(n, train_fraction);
    Ok(DatasetSplit {
        train: order[..k].iter().map(|&i| chains[i].clone()).collect(),
        test: order[k..].iter().map(|&i| chains[i].clone()).collect(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(id: &str, seq: &str) -> ProteinChain {
        let sequence = parse_sequence(seq).unwrap();
        let helix_mask = sequence.iter().map(|aa| aa.to_char() == 'A').collect();
        ProteinChain::new(id, sequence, helix_mask, None).unwrap()
    }

    #[test]
    fn one_hot_basis_vectors() {
        for (code, idx) in [('A', 0), ('Y', 19), ('C', 1)] {
            let v = encode_one_hot(AminoAcid::from_char(code).unwrap());
            assert_eq!(v.iter().sum::<f64>(), 1.0);
            assert_eq!(v[idx], 1.0);
        }
    }

    #[test]
    fn three_letter_names_agree_with_alphabet() {
        for aa in AminoAcid::all() {
            assert_eq!(AminoAcid::from_three_letter(aa.three_letter()), Some(aa));
        }
        assert_eq!(AminoAcid::from_three_letter("leu").unwrap().to_char(), 'L');
        assert!(AminoAcid::from_three_letter("UNK").is_none());
    }

    #[test]
    fn window_counts() {
        let c12 = chain("X_A", "ACDEFGHIKLMN");
        let w = make_windows(&c12, 10);
        assert!(!w.skipped);
        assert_eq!(
            w.windows.iter().map(|w| w.offset).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        let c10 = chain("X_B", "ACDEFGHIKL");
        assert_eq!(make_windows(&c10, 10).windows.len(), 1);

        let c9 = chain("X_C", "ACDEFGHIK");
        let w = make_windows(&c9, 10);
        assert!(w.skipped);
        assert!(w.windows.is_empty());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let chains: Vec<_> = (0..10)
            .map(|i| chain(&format!("P{i:03}_A"), "ACDE"))
            .collect();
        let a = split_dataset(&chains, 0.8, 7).unwrap();
        let b = split_dataset(&chains, 0.8, 7).unwrap();
        assert_eq!(a.train.len(), 8);
        assert_eq!(a.test.len(), 2);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn split_rejects_tiny_corpus_and_bad_fraction() {
        let one = vec![chain("P000_A", "AC")];
        assert!(matches!(
            split_dataset(&one, 0.8, 0),
            Err(Error::CorpusTooSmall(1))
        ));
        let two = vec![chain("P000_A", "AC"), chain("P001_A", "AC")];
        assert!(split_dataset(&two, 1.0, 0).is_err());
        assert!(split_dataset(&two, 0.0, 0).is_err());
        let s = split_dataset(&two, 0.8, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
    }

    fn arb_chain() -> impl Strategy<Value = ProteinChain> {
        proptest::collection::vec((0usize..20, any::<bool>()), 1..60).prop_map(|res| {
            let sequence = res
                .iter()
                .map(|&(i, _)| AminoAcid::from_index(i).unwrap())
                .collect();
            let mask = res.iter().map(|&(_, h)| h).collect();
            ProteinChain::new("T000_A", sequence, mask, None).unwrap()
        })
    }

    proptest! {
        #[test]
        fn windows_decode_to_subsequence(c in arb_chain(), m in 1usize..15) {
            let w = make_windows(&c, m);
            prop_assert_eq!(w.skipped, c.len() < m);
            for win in &w.windows {
                prop_assert!(win.offset + m <= c.len());
                prop_assert_eq!(win.features.iter().filter(|&&v| v == 1.0).count(), m);
                let decoded = decode_features(&win.features).unwrap();
                prop_assert_eq!(&decoded[..], &c.sequence[win.offset..win.offset + m]);
            }
            if !w.skipped {
                let mut cover = vec![0usize; c.len()];
                for win in &w.windows {
                    for k in &mut cover[win.offset..win.offset + m] {
                        *k += 1;
                    }
                }
                prop_assert!(cover.iter().all(|&k| (1..=m).contains(&k)));
            }
        }

        #[test]
        fn complementary_fractions_partition_the_same_corpus(
            n in 2usize..40,
            f in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let chains: Vec<_> = (0..n)
                .map(|i| chain(&format!("P{i:03}_A"), "ACD"))
                .collect();
            let a = split_dataset(&chains, f, seed).unwrap();
            let b = split_dataset(&chains, 1.0 - f, seed).unwrap();
            let ids = |v: &[ProteinChain]| {
                let mut ids: Vec<_> = v.iter().map(|c| c.id.clone()).collect();
                ids.sort();
                ids
            };
            let all = ids(&chains);
            let mut union_a = ids(&a.train);
            union_a.extend(ids(&a.test));
            union_a.sort();
            let mut union_b = ids(&b.train);
            union_b.extend(ids(&b.test));
            union_b.sort();
            prop_assert_eq!(&union_a, &all);
            prop_assert_eq!(&union_b, &all);
            let x = f * n as f64;
            let half_integer = (x - x.floor() - 0.5).abs() < 1e-9;
            let clamped = train_size(n, f) != (x.round() as usize)
                || train_size(n, 1.0 - f) != (((1.0 - f) * n as f64).round() as usize);
            if !half_integer && !clamped {
                prop_assert_eq!(a.train.len(), b.test.len());
                prop_assert_eq!(a.test.len(), b.train.len());
            }
        }
    }
}
