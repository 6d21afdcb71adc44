//! Next-search-term recommendation for clinical search logs.
//!
//! Physicians searching a patient record submit short sequences of search
//! terms. This crate scores candidate next terms with two complementary
//! signals and blends them:
//!
//! - **Dynamics (foMC)**: a global first-order Markov chain over search
//!   terms; the score of a candidate is its transition probability from the
//!   last searched term.
//! - **Multi-collaborative filtering**: neighborhood CF driven by cosine
//!   similarities between physicians, patients and terms. Two scorers are
//!   provided: `ypCF` (similarity-weighted centered triplet frequencies from
//!   similar physician/patient pairs) and `TptCF` (transition evidence pooled
//!   from similar patients through terms similar to the last search).
//! - **DmCF**: the hybrid, `(1 - alpha) * dynamics + alpha * cf`.
//!
//! The crate also ships the full evaluation harness used to compare these
//! methods: temporal cutoff splitting, hit-rate-at-N, hyperparameter sweeps
//! with TSV/JSON reports, corpus statistics, and a seeded synthetic log
//! generator for reproducible experiments.
//!
//! Modules follow the data flow:
//!
//! 1. [`log`] parses tab-separated search logs into events.
//! 2. [`sequence`] groups events into per-visit search sequences and splits
//!    them at a cutoff time into training data and test cases.
//! 3. [`markov`], [`similarity`] and [`cf`] build the models.
//! 4. [`hybrid`] blends score vectors and ranks the top-N terms.
//! 5. [`eval`] runs the cutoff protocol and grid sweeps.
//! 6. [`stats`] and [`synth`] cover corpus statistics and data synthesis.

pub mod cf;
pub mod cli;
mod error;
pub mod eval;
pub mod hybrid;
pub mod log;
pub mod markov;
pub mod sequence;
pub mod similarity;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
