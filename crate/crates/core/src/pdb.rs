//! PDB ingestion: fixed-column parsing of SEQRES, HELIX and ATOM records,
//! label alignment, deduplication, and the line-oriented corpus format.
//!
//! HELIX spans use author residue numbers while SEQRES is positional. When a
//! chain has coordinate records, the author numbering is anchored onto SEQRES
//! at the offset that matches the most residue names; otherwise numbering is
//! assumed to start at 1 and run contiguously over SEQRES.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_sequence, sequence_string, AminoAcid};
use crate::error::{Error, Result};

/// A helix span as written in a HELIX record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelixRecord {
    pub chain_id: char,
    pub init_seq_num: i32,
    pub init_insertion: Option<char>,
    pub end_seq_num: i32,
    pub end_insertion: Option<char>,
    pub helix_class: i32,
}

/// A residue seen in the coordinate section, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomResidue {
    pub number: i32,
    pub insertion: Option<char>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPdbEntry {
    pub pdb_id: String,
    pub seqres: IndexMap<char, Vec<String>>,
    pub helices: Vec<HelixRecord>,
    pub atom_numbering: IndexMap<char, Vec<AtomResidue>>,
}

/// A deduplicated single chain with its per-residue helix labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProteinChain {
    pub id: String,
    pub sequence: Vec<AminoAcid>,
    pub helix_mask: Vec<bool>,
    pub species_tag: Option<String>,
}

impl ProteinChain {
    pub fn new(
        id: impl Into<String>,
        sequence: Vec<AminoAcid>,
        helix_mask: Vec<bool>,
        species_tag: Option<String>,
    ) -> Result<Self> {
        if sequence.is_empty() {
            return Err(Error::InvalidArgument("chain sequence is empty".into()));
        }
        if sequence.len() != helix_mask.len() {
            return Err(Error::LengthMismatch {
                expected: sequence.len(),
                actual: helix_mask.len(),
            });
        }
        Ok(Self {
            id: id.into(),
            sequence,
            helix_mask,
            species_tag,
        })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// The entry part of `<pdb_id>_<chain_id>`.
    pub fn entry_id(&self) -> &str {
        self.id.split_once('_').map_or(&self.id, |(entry, _)| entry)
    }

    pub fn helix_count(&self) -> usize {
        self.helix_mask.iter().filter(|&&h| h).count()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.helix_mask
            .iter()
            .map(|&h| if h { 1.0 } else { 0.0 })
            .collect()
    }
}

/// 1-based inclusive column slice, trimmed. Missing columns read as empty.
fn columns(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start > end {
        return "";
    }
    line.get(start - 1..end).unwrap_or("").trim()
}

fn column_char(line: &str, col: usize) -> char {
    line.as_bytes()
        .get(col - 1)
        .map(|&b| b as char)
        .unwrap_or(' ')
}

fn parse_int(line_no: usize, record: &'static str, field: &str, text: &str) -> Result<i32> {
    text.parse().map_err(|_| Error::MalformedRecord {
        line: line_no,
        record,
        detail: format!("{field} {text:?} is not an integer"),
    })
}

/// Resolves a residue name to a standard amino acid, mapping the supported
/// non-standard variants onto their parents.
pub fn normalize_residue(name: &str) -> Option<AminoAcid> {
    match name.to_ascii_uppercase().as_str() {
        "MSE" => AminoAcid::from_char('M'),
        "SEC" => AminoAcid::from_char('C'),
        "PYL" => AminoAcid::from_char('K'),
        other => AminoAcid::from_three_letter(other),
    }
}

/// Parses PDB text. `fallback_id` is used when the file has no HEADER id code.
pub fn parse_pdb(text: &str, fallback_id: &str) -> Result<RawPdbEntry> {
    let mut header_id: Option<String> = None;
    let mut seqres: IndexMap<char, Vec<String>> = IndexMap::new();
    let mut helices = Vec::new();
    let mut atoms: IndexMap<char, Vec<AtomResidue>> = IndexMap::new();
    let mut coordinates_done = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        match columns(line, 1, 6) {
            "HEADER" => {
                let id = columns(line, 63, 66);
                if id.len() == 4 {
                    header_id = Some(id.to_ascii_uppercase());
                }
            }
            "SEQRES" => {
                parse_int(line_no, "SEQRES", "serial number", columns(line, 8, 10))?;
                parse_int(line_no, "SEQRES", "residue count", columns(line, 14, 17))?;
                let chain = column_char(line, 12);
                let names = seqres.entry(chain).or_default();
                for k in 0..13 {
                    let start = 20 + 4 * k;
                    let name = columns(line, start, start + 2);
                    if name.is_empty() {
                        break;
                    }
                    names.push(name.to_ascii_uppercase());
                }
            }
            "HELIX" => {
                let init_chain = column_char(line, 20);
                let end_chain = column_char(line, 32);
                let init = parse_int(line_no, "HELIX", "initSeqNum", columns(line, 22, 25))?;
                let end = parse_int(line_no, "HELIX", "endSeqNum", columns(line, 34, 37))?;
                let class_text = columns(line, 39, 40);
                let helix_class = if class_text.is_empty() {
                    1
                } else {
                    parse_int(line_no, "HELIX", "helixClass", class_text)?
                };
                if init_chain != end_chain {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        record: "HELIX",
                        detail: format!("span crosses chains {init_chain} and {end_chain}"),
                    });
                }
                if init > end {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        record: "HELIX",
                        detail: format!("start {init} is after end {end}"),
                    });
                }
                let insertion = |col| Some(column_char(line, col)).filter(|c| *c != ' ');
                helices.push(HelixRecord {
                    chain_id: init_chain,
                    init_seq_num: init,
                    init_insertion: insertion(26),
                    end_seq_num: end,
                    end_insertion: insertion(38),
                    helix_class,
                });
            }
            "ENDMDL" => coordinates_done = true,
            record @ ("ATOM" | "HETATM") if !coordinates_done => {
                let name = columns(line, 18, 20).to_ascii_uppercase();
                // Ligands and waters share chain ids with the polymer.
                if record == "HETATM" && normalize_residue(&name).is_none() {
                    continue;
                }
                let chain = column_char(line, 22);
                let number = parse_int(line_no, "ATOM", "resSeq", columns(line, 23, 26))?;
                let insertion = Some(column_char(line, 27)).filter(|c| *c != ' ');
                let residues = atoms.entry(chain).or_default();
                let same = residues
                    .last()
                    .is_some_and(|r| r.number == number && r.insertion == insertion);
                if !same {
                    residues.push(AtomResidue {
                        number,
                        insertion,
                        name,
                    });
                }
            }
            _ => {}
        }
    }

    seqres.retain(|_, names| !names.is_empty());
    if seqres.is_empty() {
        return Err(Error::NoSequence);
    }
    let pdb_id = header_id.unwrap_or_else(|| fallback_id.to_ascii_uppercase());
    if pdb_id.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "PDB id {pdb_id:?} is not 4 characters"
        )));
    }
    Ok(RawPdbEntry {
        pdb_id,
        seqres,
        helices,
        atom_numbering: atoms,
    })
}

/// Why a chain was left out of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: String,
}

impl std::fmt::Display for DropRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\t{}", self.id, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChainBuild {
    pub chains: Vec<ProteinChain>,
    pub dropped: Vec<DropRecord>,
}

type AuthorResidue = (i32, Option<char>);

/// Maps author residue ids (number, insertion code) onto 0-based SEQRES positions.
fn author_positions(
    seq: &[AminoAcid],
    atoms: Option<&Vec<AtomResidue>>,
) -> HashMap<AuthorResidue, usize> {
    let len = seq.len();
    let Some(atoms) = atoms.filter(|a| !a.is_empty()) else {
        return (0..len).map(|p| ((p as i32 + 1, None), p)).collect();
    };

    // Offsets relative to the first observed residue. Gaps in numbering are
    // unobserved residues; insertion codes advance by one.
    let mut rel = Vec::with_capacity(atoms.len());
    let mut cursor = 0usize;
    for (k, res) in atoms.iter().enumerate() {
        if k > 0 {
            let step = res.number as i64 - atoms[k - 1].number as i64;
            cursor += step.max(1) as usize;
        }
        rel.push(cursor);
    }
    let codes: Vec<Option<AminoAcid>> = atoms.iter().map(|r| normalize_residue(&r.name)).collect();

    let score = |anchor: usize| {
        rel.iter()
            .zip(&codes)
            .filter(|(&r, code)| {
                let p = anchor + r;
                p < len && code.is_some_and(|c| c == seq[p])
            })
            .count()
    };
    let anchor = (0..len)
        .map(|s| (score(s), s))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map_or(0, |(_, s)| s);

    let mut map = HashMap::new();
    for (res, &r) in atoms.iter().zip(&rel) {
        let p = anchor + r;
        if p < len {
            map.entry((res.number, res.insertion)).or_insert(p);
        }
    }
    map
}

/// Builds labeled chains from a parsed entry. Chains with residues outside the
/// 20 standard types (after variant normalization) or with helix spans that
/// cannot be placed are dropped and reported.
pub fn build_chains(entry: &RawPdbEntry, species: Option<&str>) -> ChainBuild {
    let mut out = ChainBuild::default();
    'chains: for (&chain_id, names) in &entry.seqres {
        let id = format!("{}_{}", entry.pdb_id, chain_id);
        let mut sequence = Vec::with_capacity(names.len());
        for name in names {
            match normalize_residue(name) {
                Some(aa) => sequence.push(aa),
                None => {
                    out.dropped.push(DropRecord {
                        id,
                        reason: format!("unresolvable residue {name}"),
                    });
                    continue 'chains;
                }
            }
        }

        let positions = author_positions(&sequence, entry.atom_numbering.get(&chain_id));
        let mut mask = vec![false; sequence.len()];
        for helix in entry.helices.iter().filter(|h| h.chain_id == chain_id) {
            let start_key = (helix.init_seq_num, helix.init_insertion);
            let end_key = (helix.end_seq_num, helix.end_insertion);
            let span = positions
                .get(&start_key)
                .ok_or(start_key)
                .and_then(|&s| positions.get(&end_key).map(|&e| (s, e)).ok_or(end_key));
            match span {
                Ok((start, end)) if start <= end => mask[start..=end].fill(true),
                Ok(_) | Err(_) => {
                    let (number, insertion) = span.err().unwrap_or(start_key);
                    let err = Error::NumberingMismatch {
                        chain: id.clone(),
                        residue: format!(
                            "{number}{}",
                            insertion.map_or(String::new(), String::from)
                        ),
                    };
                    out.dropped.push(DropRecord {
                        id,
                        reason: err.to_string(),
                    });
                    continue 'chains;
                }
            }
        }

        out.chains.push(ProteinChain {
            id,
            sequence,
            helix_mask: mask,
            species_tag: species.map(str::to_owned),
        });
    }
    out
}

/// Keeps the first chain of each distinct (sequence, mask) pair within a PDB
/// entry. Returns the kept chains and a drop record for every removed copy.
pub fn dedup_chains_logged(chains: Vec<ProteinChain>) -> (Vec<ProteinChain>, Vec<DropRecord>) {
    let mut seen: HashMap<(String, Vec<AminoAcid>, Vec<bool>), String> = HashMap::new();
    let mut kept = Vec::with_capacity(chains.len());
    let mut removed = Vec::new();
    for chain in chains {
        let key = (
            chain.entry_id().to_owned(),
            chain.sequence.clone(),
            chain.helix_mask.clone(),
        );
        match seen.get(&key) {
            Some(first) => removed.push(DropRecord {
                id: chain.id,
                reason: format!("duplicate of {first}"),
            }),
            None => {
                seen.insert(key, chain.id.clone());
                kept.push(chain);
            }
        }
    }
    (kept, removed)
}

pub fn dedup_chains(chains: Vec<ProteinChain>) -> Vec<ProteinChain> {
    dedup_chains_logged(chains).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthBucket {
    pub start: usize,
    pub end: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub chains: usize,
    pub residues: usize,
    pub helix_residues: usize,
    pub helix_fraction: f64,
    pub length_buckets: Vec<LengthBucket>,
    pub species: BTreeMap<String, usize>,
}

pub const LENGTH_BUCKET_WIDTH: usize = 100;

pub fn corpus_stats(chains: &[ProteinChain]) -> CorpusStats {
    let mut buckets: BTreeMap<usize, usize> = BTreeMap::new();
    let mut species: BTreeMap<String, usize> = BTreeMap::new();
    let mut residues = 0;
    let mut helix_residues = 0;
    for chain in chains {
        *buckets
            .entry(chain.len() / LENGTH_BUCKET_WIDTH)
            .or_default() += 1;
        let tag = chain
            .species_tag
            .clone()
            .unwrap_or_else(|| "untagged".into());
        *species.entry(tag).or_default() += 1;
        residues += chain.len();
        helix_residues += chain.helix_count();
    }
    CorpusStats {
        chains: chains.len(),
        residues,
        helix_residues,
        helix_fraction: if residues == 0 {
            0.0
        } else {
            helix_residues as f64 / residues as f64
        },
        length_buckets: buckets
            .into_iter()
            .map(|(b, count)| LengthBucket {
                start: b * LENGTH_BUCKET_WIDTH,
                end: (b + 1) * LENGTH_BUCKET_WIDTH - 1,
                count,
            })
            .collect(),
        species,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    id: String,
    species: Option<String>,
    sequence: String,
    helix_mask: String,
}

impl From<&ProteinChain> for CorpusRecord {
    fn from(chain: &ProteinChain) -> Self {
        Self {
            id: chain.id.clone(),
            species: chain.species_tag.clone(),
            sequence: sequence_string(&chain.sequence),
            helix_mask: chain
                .helix_mask
                .iter()
                .map(|&h| if h { '1' } else { '0' })
                .collect(),
        }
    }
}

/// Writes one JSON object per line.
pub fn write_corpus<W: Write>(chains: &[ProteinChain], mut out: W) -> Result<()> {
    for chain in chains {
        serde_json::to_writer(&mut out, &CorpusRecord::from(chain))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<ProteinChain>> {
    let mut chains = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| Error::Corpus {
            line: idx + 1,
            detail,
        };
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let sequence = parse_sequence(&record.sequence)
            .map_err(|c| bad(format!("residue {c:?} is not in the alphabet")))?;
        let helix_mask = record
            .helix_mask
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(bad(format!("mask character {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let chain = ProteinChain::new(record.id, sequence, helix_mask, record.species)
            .map_err(|e| bad(e.to_string()))?;
        chains.push(chain);
    }
    Ok(chains)
}

pub fn load_corpus(path: &std::path::Path) -> Result<Vec<ProteinChain>> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn save_corpus(path: &std::path::Path, chains: &[ProteinChain]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_corpus(chains, std::io::BufWriter::new(file))
}

/// Distinct chain ids, for callers that need fast membership checks.
pub fn chain_ids(chains: &[ProteinChain]) -> HashSet<&str> {
    chains.iter().map(|c| c.id.as_str()).collect()
}
