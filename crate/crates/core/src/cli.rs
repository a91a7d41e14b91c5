//! `helixpred` subcommands.
//!
//! Exit codes: 0 success, 2 bad input, 3 model/corpus shape or config
//! mismatch, 4 missing entity. All randomness comes from `--seed` (default 0).

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::baseline::{self, BaselineTable};
use crate::error::Error;
use crate::losses::LossKind;
use crate::nn::ModelFile;
use crate::pdb::{self, DropRecord, ProteinChain};
use crate::synthetic::{self, SyntheticSpec};
use crate::train_eval::{
    self, evaluate, ExperimentConfig, ExperimentResult, HelicityPredictor, Regime, TrainConfig,
};

pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_MISSING: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::ShapeMismatch(_) => EXIT_MISMATCH,
            _ => EXIT_BAD_INPUT,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err).into()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "helixpred",
    version,
    about = "Per-residue alpha-helix prediction from protein sequence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a directory of PDB files into a deduplicated corpus.
    Ingest(IngestArgs),
    /// Print length, species and helix-fraction statistics of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Split a corpus into train and test files by whole chain.
    Split(SplitArgs),
    /// Generate a synthetic corpus with a known helix rule.
    Synth(SynthArgs),
    /// Train a model on a corpus.
    Train(TrainArgs),
    /// Score a model on a corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Fit or evaluate the count-based baseline.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Run a controlled comparison.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Write per-position predicted and true helicity for one chain.
    ExportPlot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub pdb_dir: PathBuf,
    /// Species tag for every chain not listed in the manifest.
    #[arg(long)]
    pub species: Option<String>,
    /// Lines of `<pdb id>,<species>` (comma or tab separated).
    #[arg(long)]
    pub species_manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub drop_log: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 250)]
    pub chains: usize,
    #[arg(long, default_value = "ALE")]
    pub formers: String,
    #[arg(long, default_value_t = 0.35)]
    pub former_rate: f64,
    #[arg(long, default_value_t = 30)]
    pub min_len: usize,
    #[arg(long, default_value_t = 60)]
    pub max_len: usize,
    #[arg(long, default_value = "S")]
    pub prefix: String,
    #[arg(long)]
    pub species: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Mlp,
    Rnn,
}

#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// unweighted | gaussian | gaussian-as-printed | centered
    #[arg(long, default_value = "unweighted", value_parser = parse_loss)]
    pub loss: LossKind,
    /// protein-order | window-shuffle
    #[arg(long, default_value = "protein-order", value_parser = parse_regime)]
    pub regime: Regime,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TrainFlags {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            m: self.window,
            loss_kind: self.loss,
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
            regime: self.regime,
        }
    }
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[arg(long, value_enum, default_value_t = Arch::Mlp)]
    pub arch: Arch,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCommand {
    /// Count helix probabilities on a training corpus.
    Fit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 0.0)]
        pseudo_count: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-residue helix propensities (unigram tables only).
        #[arg(long)]
        propensity_csv: Option<PathBuf>,
    },
    /// Score a fitted table on a corpus.
    Eval {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentFlags {
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Result matrix as JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Flat `cell,average` table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Train on each of two species and test on both.
    CrossSpecies {
        #[arg(long)]
        corpus_a: PathBuf,
        #[arg(long)]
        corpus_b: PathBuf,
        #[arg(long, default_value = "human")]
        label_a: String,
        #[arg(long, default_value = "mouse")]
        label_b: String,
        /// Cap on the equal-size training subsets.
        #[arg(long)]
        subset_size: Option<usize>,
        #[command(flatten)]
        flags: ExperimentFlags,
    },
    /// Compare the unweighted, Gaussian and centered losses.
    Losses {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        flags: ExperimentFlags,
    },
    /// Compare window sizes 7, 10 and 13.
    WindowSizes {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        flags: ExperimentFlags,
    },
}

fn require_exists(paths: &[&Path]) -> CliResult {
    for p in paths {
        if !p.exists() {
            return Err(CliError::bad_input(format!(
                "{} does not exist",
                p.display()
            )));
        }
    }
    Ok(())
}

fn load_corpus(path: &Path) -> CliResult<Vec<ProteinChain>> {
    pdb::load_corpus(path).map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> CliResult<ModelFile> {
    ModelFile::load(path).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text)?;
    Ok(())
}

/// Runs a parsed command, writing user-facing output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Ingest(args) => ingest(&args, out),
        Command::Stats { corpus } => {
            require_exists(&[&corpus])?;
            let stats = pdb::corpus_stats(&load_corpus(&corpus)?);
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&stats).map_err(Error::from)?
            )?;
            Ok(())
        }
        Command::Split(args) => {
            require_exists(&[&args.corpus])?;
            let chains = load_corpus(&args.corpus)?;
            let split = crate::dataset::split_dataset(&chains, args.train_fraction, args.seed)?;
            pdb::save_corpus(&args.train_out, &split.train)?;
            pdb::save_corpus(&args.test_out, &split.test)?;
            writeln!(
                out,
                "train {} chains, test {} chains",
                split.train.len(),
                split.test.len()
            )?;
            Ok(())
        }
        Command::Synth(args) => {
            let spec = SyntheticSpec {
                chains: args.chains,
                min_len: args.min_len,
                max_len: args.max_len,
                formers: crate::dataset::parse_sequence(&args.formers).map_err(|c| {
                    CliError::bad_input(format!("unknown residue {c:?} in --formers"))
                })?,
                former_rate: args.former_rate,
                id_prefix: args.prefix,
                species: args.species,
                seed: args.seed,
            };
            let chains = synthetic::generate(&spec)?;
            pdb::save_corpus(&args.out, &chains)?;
            writeln!(out, "wrote {} chains", chains.len())?;
            Ok(())
        }
        Command::Train(args) => train(&args, out),
        Command::Eval {
            model,
            corpus,
            report,
        } => {
            require_exists(&[&model, &corpus])?;
            let model = load_model(&model)?;
            let chains = load_corpus(&corpus)?;
            let result = evaluate(&model, &chains, &model.metadata.fingerprint);
            write_text(&report, &result.to_json()?)?;
            writeln!(out, "average_loss={}", result.average)?;
            Ok(())
        }
        Command::Baseline(cmd) => baseline_cmd(cmd, out),
        Command::Experiment(cmd) => experiment(cmd, out),
        Command::ExportPlot {
            model,
            corpus,
            id,
            out: path,
        } => {
            require_exists(&[&model, &corpus])?;
            let model = load_model(&model)?;
            let chains = load_corpus(&corpus)?;
            let chain = chains.iter().find(|c| c.id == id).ok_or_else(|| CliError {
                code: EXIT_MISSING,
                message: format!("chain {id} is not in the corpus"),
            })?;
            let pred = model.predict_chain(chain);
            let mut w = BufWriter::new(fs::File::create(&path)?);
            writeln!(w, "position,predicted,truth")?;
            for (p, (v, &t)) in pred.values.iter().zip(&chain.helix_mask).enumerate() {
                writeln!(w, "{p},{v},{}", t as u8)?;
            }
            w.flush()?;
            writeln!(out, "wrote {} positions for {id}", chain.len())?;
            Ok(())
        }
    }
}

fn read_manifest(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, species) = line.split_once([',', '\t']).ok_or_else(|| {
            CliError::bad_input(format!(
                "{}:{}: expected `<pdb id>,<species>`",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(id.trim().to_ascii_uppercase(), species.trim().to_owned());
    }
    Ok(map)
}

fn pdb_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pdb") || e.eq_ignore_ascii_case("ent"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn fallback_id(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let stem = stem
        .strip_prefix("pdb")
        .filter(|s| s.len() == 4)
        .unwrap_or(stem);
    stem.chars()
        .take(4)
        .collect::<String>()
        .to_ascii_uppercase()
}

fn ingest(args: &IngestArgs, out: &mut dyn Write) -> CliResult {
    require_exists(&[&args.pdb_dir])?;
    if let Some(m) = &args.species_manifest {
        require_exists(&[m])?;
    }
    let manifest = match &args.species_manifest {
        Some(path) => read_manifest(path)?,
        None => HashMap::new(),
    };
    let files = pdb_files(&args.pdb_dir)?;
    if files.is_empty() {
        return Err(CliError::bad_input(format!(
            "no .pdb files in {}",
            args.pdb_dir.display()
        )));
    }

    let parsed: Vec<Result<pdb::ChainBuild, DropRecord>> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("?")
                .to_owned();
            let fail = |reason: String| DropRecord {
                id: name.clone(),
                reason,
            };
            let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
            let entry =
                pdb::parse_pdb(&text, &fallback_id(path)).map_err(|e| fail(e.to_string()))?;
            let species = manifest
                .get(&entry.pdb_id)
                .map(String::as_str)
                .or(args.species.as_deref());
            Ok(pdb::build_chains(&entry, species))
        })
        .collect();

    let mut chains = Vec::new();
    let mut dropped = Vec::new();
    let mut parsed_files = 0;
    for result in parsed {
        match result {
            Ok(build) => {
                parsed_files += 1;
                chains.extend(build.chains);
                dropped.extend(build.dropped);
            }
            Err(record) => dropped.push(record),
        }
    }
    let (chains, duplicates) = pdb::dedup_chains_logged(chains);
    dropped.extend(duplicates);

    pdb::save_corpus(&args.out, &chains)?;
    let mut log = BufWriter::new(fs::File::create(&args.drop_log)?);
    for record in &dropped {
        writeln!(log, "{record}")?;
    }
    log.flush()?;
    writeln!(
        out,
        "parsed {parsed_files} files, kept {} chains, dropped {}",
        chains.len(),
        dropped.len()
    )?;
    Ok(())
}

fn train(args: &TrainArgs, out: &mut dyn Write) -> CliResult {
    require_exists(&[&args.corpus])?;
    let chains = load_corpus(&args.corpus)?;
    let config = args.flags.config();
    let (file, history) = match args.arch {
        Arch::Mlp => {
            let outcome = train_eval::train(&config, &chains)?;
            if !outcome.skipped.is_empty() {
                eprintln!(
                    "skipped {} chain(s) shorter than window {}",
                    outcome.skipped.len(),
                    config.m
                );
            }
            (
                train_eval::model_file(&config, &chains, &outcome),
                outcome.history,
            )
        }
        Arch::Rnn => {
            let outcome = train_eval::train_rnn(&config, &chains)?;
            (
                train_eval::rnn_model_file(&config, &chains, &outcome),
                outcome.history,
            )
        }
    };
    file.save(&args.out)?;
    writeln!(out, "epoch,mean_train_loss")?;
    for (i, loss) in history.iter().enumerate() {
        writeln!(out, "{},{loss}", i + 1)?;
    }
    Ok(())
}

fn baseline_cmd(cmd: BaselineCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        BaselineCommand::Fit {
            corpus,
            order,
            pseudo_count,
            out: path,
            propensity_csv,
        } => {
            require_exists(&[&corpus])?;
            let chains = load_corpus(&corpus)?;
            let table = baseline::fit_with_pseudo_count(&chains, order, pseudo_count)?;
            write_text(&path, &table.to_json()?)?;
            if let Some(csv) = propensity_csv {
                let props = table.propensity()?;
                let mut w = BufWriter::new(fs::File::create(csv)?);
                baseline::write_propensity_csv(&props, &mut w)?;
                w.flush()?;
            }
            writeln!(
                out,
                "order {order}: {} grams, global helix rate {}",
                table.entries().count(),
                table.global_helix_rate()
            )?;
            Ok(())
        }
        BaselineCommand::Eval {
            table,
            corpus,
            report,
        } => {
            require_exists(&[&table, &corpus])?;
            let table = BaselineTable::from_json(&fs::read_to_string(&table)?)?;
            let chains = load_corpus(&corpus)?;
            let result = baseline::baseline_report(&table, &chains);
            write_text(&report, &result.to_json()?)?;
            writeln!(out, "average_loss={}", result.average)?;
            Ok(())
        }
    }
}

fn write_experiment(
    result: &ExperimentResult,
    flags: &ExperimentFlags,
    out: &mut dyn Write,
) -> CliResult {
    write_text(&flags.out, &result.to_json()?)?;
    if let Some(csv) = &flags.csv {
        let mut w = BufWriter::new(fs::File::create(csv)?);
        result.write_csv(&mut w)?;
        w.flush()?;
    }
    for (cell, report) in &result.cells {
        writeln!(out, "{cell} average_loss={}", report.average)?;
    }
    for (cell, report) in &result.baselines {
        writeln!(out, "baseline {cell} average_loss={}", report.average)?;
    }
    Ok(())
}

fn experiment_config(
    flags: &ExperimentFlags,
    subset_size: Option<usize>,
) -> CliResult<ExperimentConfig> {
    let config = ExperimentConfig {
        train: flags.train.config(),
        train_fraction: flags.train_fraction,
        subset_size,
    };
    config.train.validate()?;
    Ok(config)
}

fn experiment(cmd: ExperimentCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        ExperimentCommand::CrossSpecies {
            corpus_a,
            corpus_b,
            label_a,
            label_b,
            subset_size,
            flags,
        } => {
            require_exists(&[&corpus_a, &corpus_b])?;
            let config = experiment_config(&flags, subset_size)?;
            let a = load_corpus(&corpus_a)?;
            let b = load_corpus(&corpus_b)?;
            let result =
                train_eval::experiment_cross_species((&label_a, &a), (&label_b, &b), &config)?;
            write_experiment(&result, &flags, out)
        }
        ExperimentCommand::Losses { corpus, flags } => {
            require_exists(&[&corpus])?;
            let config = experiment_config(&flags, None)?;
            let result = train_eval::experiment_losses(&load_corpus(&corpus)?, &config)?;
            write_experiment(&result, &flags, out)
        }
        ExperimentCommand::WindowSizes { corpus, flags } => {
            require_exists(&[&corpus])?;
            let config = experiment_config(&flags, None)?;
            let result = train_eval::experiment_window_sizes(&load_corpus(&corpus)?, &config)?;
            write_experiment(&result, &flags, out)
        }
    }
}
