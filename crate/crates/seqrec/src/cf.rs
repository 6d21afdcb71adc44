//! The two collaborative-filtering scorers.
//!
//! **ypCF** scores a candidate term from similar (physician, patient)
//! neighbor pairs: the target pair's mean term frequency plus the
//! similarity-weighted average of the neighbors' centered triplet
//! frequencies. Centering (subtracting each pair's own mean) removes the
//! bias of pairs that simply search a lot.
//!
//! **TptCF** scores a candidate from transition evidence: for each similar
//! patient, the frequency of transitions into the candidate from terms
//! similar to the last searched term, weighted by term similarity and
//! normalized per patient; patient contributions are combined as a convex
//! combination of their similarities.

use std::collections::BTreeMap;

use crate::hybrid::{Provenance, ScoreVector};
use crate::sequence::SequenceSet;
use crate::similarity::{similar_terms, NeighborSets, ProfileStore};

/// Frequencies of (physician, patient, term) triplets in a training set:
/// how many times each physician searched each term on each patient,
/// pooled over visits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripletStore {
    freq: BTreeMap<(String, String), BTreeMap<String, u64>>,
    watermark: Option<i64>,
}

impl TripletStore {
    pub fn freq(&self, physician: &str, patient: &str, term: &str) -> u64 {
        self.pair_terms(physician, patient)
            .and_then(|terms| terms.get(term))
            .copied()
            .unwrap_or(0)
    }

    /// Term frequencies of one (physician, patient) pair, if it has any.
    pub fn pair_terms(&self, physician: &str, patient: &str) -> Option<&BTreeMap<String, u64>> {
        self.freq
            .get(&(physician.to_string(), patient.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn watermark(&self) -> Option<i64> {
        self.watermark
    }
}

/// Builds the triplet frequency store from training data.
pub fn build_triplet_store(train: &SequenceSet) -> TripletStore {
    let mut store = TripletStore {
        watermark: train.max_timestamp(),
        ..TripletStore::default()
    };
    for seq in &train.sequences {
        let pair = store
            .freq
            .entry((seq.physician_id.clone(), seq.patient_id.clone()))
            .or_default();
        for (term, _) in &seq.terms {
            *pair.entry(term.clone()).or_insert(0) += 1;
        }
    }
    store
}

/// Mean triplet frequency of a (physician, patient) pair: total frequency
/// over the number of distinct terms the physician searched on the patient.
/// A pair with no triplets has mean 0, the neutral additive baseline.
pub fn mean_pair_frequency(store: &TripletStore, physician: &str, patient: &str) -> f64 {
    match store.pair_terms(physician, patient) {
        Some(terms) if !terms.is_empty() => {
            let total: u64 = terms.values().sum();
            total as f64 / terms.len() as f64
        }
        _ => 0.0,
    }
}

/// Scores candidate terms by similarity-weighted centered neighbor
/// frequencies.
///
/// Candidates are the terms appearing in some neighbor triplet. For each
/// candidate, the weighted average runs over exactly the neighbor pairs
/// holding that triplet (a per-term denominator), and is shifted by the
/// target pair's own mean frequency. Terms without any supporting triplet
/// stay unscored. Scores can be negative and are not bounded by 1.
pub fn score_ypcf(
    store: &TripletStore,
    neighbors: &NeighborSets,
    physician: &str,
    patient: &str,
) -> ScoreVector {
    let target_mean = mean_pair_frequency(store, physician, patient);
    let mut weighted: BTreeMap<String, (f64, f64)> = BTreeMap::new(); // term -> (num, den)
    for (other_physician, sim_y) in &neighbors.similar_physicians {
        for (other_patient, sim_p) in &neighbors.similar_patients {
            let Some(terms) = store.pair_terms(other_physician, other_patient) else {
                continue;
            };
            let pair_mean = mean_pair_frequency(store, other_physician, other_patient);
            let weight = sim_y * sim_p;
            for (term, &freq) in terms {
                let centered = freq as f64 - pair_mean;
                let entry = weighted.entry(term.clone()).or_insert((0.0, 0.0));
                entry.0 += centered * weight;
                entry.1 += weight;
            }
        }
    }
    let mut scores = ScoreVector::new(Provenance::YpCf);
    for (term, (num, den)) in weighted {
        debug_assert!(den > 0.0, "neighbor similarities are strictly positive");
        scores.insert(term, target_mean + num / den);
    }
    scores
}

/// Per-patient transition frequencies: for each patient, how often each
/// adjacent term pair occurred across all physicians' sequences on that
/// patient. Transitions never cross visit boundaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatientTransitionStore {
    transitions: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
    watermark: Option<i64>,
}

impl PatientTransitionStore {
    pub fn count(&self, patient: &str, from: &str, to: &str) -> u64 {
        self.transitions
            .get(patient)
            .and_then(|rows| rows.get(from))
            .and_then(|row| row.get(to))
            .copied()
            .unwrap_or(0)
    }

    /// Transition targets out of `from` on `patient`, if any.
    pub fn row(&self, patient: &str, from: &str) -> Option<&BTreeMap<String, u64>> {
        self.transitions.get(patient).and_then(|rows| rows.get(from))
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn watermark(&self) -> Option<i64> {
        self.watermark
    }
}

/// Builds per-patient transition counts from training data.
pub fn build_patient_transitions(train: &SequenceSet) -> PatientTransitionStore {
    let mut store = PatientTransitionStore {
        watermark: train.max_timestamp(),
        ..PatientTransitionStore::default()
    };
    for seq in &train.sequences {
        for pair in seq.terms.windows(2) {
            *store
                .transitions
                .entry(seq.patient_id.clone())
                .or_default()
                .entry(pair[0].0.clone())
                .or_default()
                .entry(pair[1].0.clone())
                .or_insert(0) += 1;
        }
    }
    store
}

/// Scores candidate terms from transition evidence on similar patients.
///
/// With `S_t` the terms similar to `last_term` above `beta`, each similar
/// patient contributes, for every candidate `t`, the similarity-weighted
/// transition mass into `t` from `S_t` divided by the total transition mass
/// into `t` from `S_t` on that patient (0 when that patient has no such
/// transitions). Contributions are combined with weights
/// `sim_p / sum(sim_p)` over the whole similar-patient list, so scores stay
/// within the largest term similarity.
pub fn score_tptcf(
    transitions: &PatientTransitionStore,
    profiles: &ProfileStore,
    last_term: &str,
    similar_patients: &[(String, f64)],
    beta: f64,
) -> ScoreVector {
    let mut scores = ScoreVector::new(Provenance::TptCf);
    let term_set = similar_terms(profiles, last_term, beta);
    if similar_patients.is_empty() || term_set.is_empty() {
        return scores;
    }
    let sim_total: f64 = similar_patients.iter().map(|&(_, s)| s).sum();
    debug_assert!(sim_total > 0.0);

    for (patient, sim_p) in similar_patients {
        // candidate -> (sim-weighted transition mass, raw transition mass)
        let mut mass: BTreeMap<&str, (f64, u64)> = BTreeMap::new();
        for (similar_term, sim_t) in &term_set {
            if let Some(row) = transitions.row(patient, similar_term) {
                for (candidate, &count) in row {
                    let entry = mass.entry(candidate).or_insert((0.0, 0));
                    entry.0 += count as f64 * sim_t;
                    entry.1 += count;
                }
            }
        }
        let patient_weight = sim_p / sim_total;
        for (candidate, (weighted, raw)) in mass {
            let inner = weighted / raw as f64; // raw > 0 for every stored entry
            let slot = scores.scores.entry(candidate.to_string()).or_insert(0.0);
            *slot += patient_weight * inner;
        }
    }
    scores
}
