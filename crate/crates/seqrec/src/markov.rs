//! Global first-order Markov dynamics over search terms.
//!
//! The transition probability from term `t_i` to term `t_j` is the total
//! frequency of `t_i -> t_j` transitions across all training sequences,
//! divided by the total frequency of all transitions out of `t_i`. The
//! model is global: it pools every physician and patient, and transitions
//! never cross visit boundaries. No smoothing is applied, so each stored
//! row is an exact maximum-likelihood distribution.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::hybrid::{Provenance, ScoreVector};
use crate::sequence::SequenceSet;

/// Adjacent-pair transition counts with cached row totals.
///
/// Zero-count entries are never stored, and `row_totals[t]` always equals
/// the sum of `counts[t]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionModel {
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    row_totals: BTreeMap<String, u64>,
    vocabulary: BTreeSet<String>,
    watermark: Option<i64>,
}

impl TransitionModel {
    pub fn count(&self, from: &str, to: &str) -> u64 {
        self.counts
            .get(from)
            .and_then(|row| row.get(to))
            .copied()
            .unwrap_or(0)
    }

    pub fn row_total(&self, from: &str) -> u64 {
        self.row_totals.get(from).copied().unwrap_or(0)
    }

    /// Stored outgoing transitions of `from`, if any.
    pub fn row(&self, from: &str) -> Option<&BTreeMap<String, u64>> {
        self.counts.get(from)
    }

    /// Terms that have at least one outgoing transition.
    pub fn source_terms(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    /// Largest timestamp seen by the training data this model was built
    /// from; lets tests prove no post-cutoff event leaked in.
    pub fn watermark(&self) -> Option<i64> {
        self.watermark
    }

    /// Dumps the model as TSV (`term_i  term_j  count  probability`), rows
    /// sorted lexicographically by (term_i, term_j) for diff-stability.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (from, row) in &self.counts {
            let total = self.row_totals[from] as f64;
            for (to, &count) in row {
                writeln!(out, "{from}\t{to}\t{count}\t{}", count as f64 / total)?;
            }
        }
        Ok(())
    }
}

/// Counts every adjacent term pair in every training sequence.
pub fn build_transition_model(train: &SequenceSet) -> TransitionModel {
    let mut model = TransitionModel {
        vocabulary: train.vocabulary.clone(),
        watermark: train.max_timestamp(),
        ..TransitionModel::default()
    };
    for seq in &train.sequences {
        for pair in seq.terms.windows(2) {
            let (from, to) = (&pair[0].0, &pair[1].0);
            *model
                .counts
                .entry(from.clone())
                .or_default()
                .entry(to.clone())
                .or_insert(0) += 1;
            *model.row_totals.entry(from.clone()).or_insert(0) += 1;
        }
    }
    model
}

/// Scores every candidate term with its transition probability from
/// `last_term`.
///
/// If `last_term` has no outgoing transitions in training (cold start) the
/// vector is empty and flagged; the hybrid blend then degrades to the CF
/// component alone.
pub fn score_fomc(model: &TransitionModel, last_term: &str) -> ScoreVector {
    match model.counts.get(last_term) {
        Some(row) => {
            let total = model.row_totals[last_term] as f64;
            let mut scores = ScoreVector::new(Provenance::FoMc { cold_start: false });
            for (to, &count) in row {
                scores.insert(to.clone(), count as f64 / total);
            }
            scores
        }
        None => ScoreVector::new(Provenance::FoMc { cold_start: true }),
    }
}
