//! Search sequences and the temporal cutoff split.
//!
//! A search sequence is the ordered list of terms one physician searched on
//! one patient during one visit. The ordering key is `(timestamp, input
//! line)`: logs can carry second-granularity ties and the original line
//! number restores a total order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::log::EventLog;

/// Ordered terms of one (physician, patient, visit) triple.
///
/// `terms` holds `(term, timestamp)` pairs, non-decreasing by timestamp.
/// Consecutive duplicate terms are kept; repeated searches are meaningful
/// transition and frequency evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSequence {
    pub physician_id: String,
    pub patient_id: String,
    pub visit_id: String,
    pub terms: Vec<(String, i64)>,
}

impl SearchSequence {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn last_term(&self) -> &str {
        &self.terms.last().expect("sequences are non-empty").0
    }
}

/// All search sequences of a corpus plus its entity sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceSet {
    /// Ordered by (physician_id, patient_id, visit_id).
    pub sequences: Vec<SearchSequence>,
    pub vocabulary: BTreeSet<String>,
    pub physicians: BTreeSet<String>,
    pub patients: BTreeSet<String>,
}

impl SequenceSet {
    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Largest timestamp present in any sequence; `None` for an empty set.
    /// Used as a training-isolation watermark by the model builders.
    pub fn max_timestamp(&self) -> Option<i64> {
        self.sequences
            .iter()
            .flat_map(|s| s.terms.iter().map(|&(_, ts)| ts))
            .max()
    }

    fn from_sequences(sequences: Vec<SearchSequence>) -> Self {
        let mut vocabulary = BTreeSet::new();
        let mut physicians = BTreeSet::new();
        let mut patients = BTreeSet::new();
        for seq in &sequences {
            physicians.insert(seq.physician_id.clone());
            patients.insert(seq.patient_id.clone());
            for (term, _) in &seq.terms {
                vocabulary.insert(term.clone());
            }
        }
        SequenceSet {
            sequences,
            vocabulary,
            physicians,
            patients,
        }
    }
}

/// One evaluation query produced by [`cutoff_split`].
///
/// `context` is the strictly-pre-cutoff prefix of the sequence (never
/// empty); `target` is the earliest post-cutoff term of the same sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub physician_id: String,
    pub patient_id: String,
    pub visit_id: String,
    pub context: Vec<(String, i64)>,
    pub target: String,
    pub target_timestamp: i64,
}

impl TestCase {
    /// The query term: the last term searched before the cutoff.
    pub fn last_term(&self) -> &str {
        &self.context.last().expect("context is non-empty").0
    }
}

/// Groups events by (physician, patient, visit) and orders each group by
/// `(timestamp, input line)`. Deterministic: identical logs produce
/// identical sets.
pub fn build_sequences(log: &EventLog) -> SequenceSet {
    type VisitKey = (String, String, String);
    let mut groups: BTreeMap<VisitKey, Vec<(String, i64, usize)>> = BTreeMap::new();
    for (line, event) in log.events.iter().enumerate() {
        groups
            .entry((
                event.physician_id.clone(),
                event.patient_id.clone(),
                event.visit_id.clone(),
            ))
            .or_default()
            .push((event.term.clone(), event.timestamp, line));
    }
    let sequences = groups
        .into_iter()
        .map(|((physician_id, patient_id, visit_id), mut terms)| {
            terms.sort_by_key(|&(_, ts, line)| (ts, line));
            SearchSequence {
                physician_id,
                patient_id,
                visit_id,
                terms: terms.into_iter().map(|(term, ts, _)| (term, ts)).collect(),
            }
        })
        .collect();
    SequenceSet::from_sequences(sequences)
}

/// Splits a corpus at `cutoff` (epoch seconds) into a training set and test
/// cases.
///
/// For every sequence, the strictly-pre-cutoff prefix goes to training.
/// Sequences with an empty prefix are dropped entirely; sequences with a
/// non-empty prefix and at least one post-cutoff term additionally yield one
/// [`TestCase`] targeting the earliest post-cutoff term. Sequences entirely
/// before the cutoff are used for training only.
pub fn cutoff_split(set: &SequenceSet, cutoff: i64) -> (SequenceSet, Vec<TestCase>) {
    let mut train = Vec::new();
    let mut tests = Vec::new();
    for seq in &set.sequences {
        let split_at = seq.terms.partition_point(|&(_, ts)| ts < cutoff);
        if split_at == 0 {
            continue; // no training terms: sequence is unusable
        }
        train.push(SearchSequence {
            physician_id: seq.physician_id.clone(),
            patient_id: seq.patient_id.clone(),
            visit_id: seq.visit_id.clone(),
            terms: seq.terms[..split_at].to_vec(),
        });
        if let Some((target, target_timestamp)) = seq.terms.get(split_at).cloned() {
            tests.push(TestCase {
                physician_id: seq.physician_id.clone(),
                patient_id: seq.patient_id.clone(),
                visit_id: seq.visit_id.clone(),
                context: seq.terms[..split_at].to_vec(),
                target,
                target_timestamp,
            });
        }
    }
    (SequenceSet::from_sequences(train), tests)
}
