//! Per-residue alpha-helix prediction from protein sequence.
//!
//! - [`pdb`]: PDB ingestion into labeled chains and the JSON-lines corpus format.
//! - [`dataset`]: one-hot window encoding and train/test splits.
//! - [`losses`]: the weighted RMSE family used for training.
//! - [`nn`]: the windowed MLP and the recurrent network, with exact gradients.
//! - [`baseline`]: n-gram helix-probability and propensity baselines.
//! - [`train_eval`]: training regimes, full-protein scoring and experiments.
//! - [`synthetic`]: generated corpora with a known helix rule.
//! - [`cli`]: the `helixpred` command-line front end.

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod losses;
pub mod nn;
pub mod pdb;
pub mod synthetic;
pub mod train_eval;

pub use error::{Error, Result};
