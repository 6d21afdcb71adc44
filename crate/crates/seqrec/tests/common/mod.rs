//! Shared helpers for integration tests: seeded random corpora and
//! independent brute-force oracles that re-derive every score by literal
//! nested loops over the raw sequences, bypassing the store-based engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use seqrec::log::{EventLog, SearchEvent};
use seqrec::sequence::{build_sequences, SequenceSet};

/// Builds a random corpus, deterministically from `seed`. Timestamps are
/// drawn from a small range so ties exercise the line-number tie-break.
pub fn random_corpus(
    seed: u64,
    max_physicians: usize,
    max_patients: usize,
    max_terms: usize,
    max_events: usize,
) -> SequenceSet {
    random_corpus_with_prefix(seed, max_physicians, max_patients, max_terms, max_events, "")
}

pub fn random_corpus_with_prefix(
    seed: u64,
    max_physicians: usize,
    max_patients: usize,
    max_terms: usize,
    max_events: usize,
    id_prefix: &str,
) -> SequenceSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n_physicians = rng.gen_range(1..=max_physicians);
    let n_patients = rng.gen_range(1..=max_patients);
    let n_terms = rng.gen_range(1..=max_terms);
    let n_events = rng.gen_range(1..=max_events);
    let n_visits = (n_events / 2).max(1);
    let events = (0..n_events)
        .map(|_| SearchEvent {
            physician_id: format!("{id_prefix}y{}", rng.gen_range(0..n_physicians)),
            patient_id: format!("{id_prefix}p{}", rng.gen_range(0..n_patients)),
            visit_id: format!("{id_prefix}v{}", rng.gen_range(0..n_visits)),
            timestamp: rng.gen_range(0..200),
            term: format!("t{}", rng.gen_range(0..n_terms)),
        })
        .collect();
    build_sequences(&EventLog { events })
}

/// Literal transition probability: re-scans every sequence and counts
/// adjacent pairs.
pub fn oracle_transition_prob(train: &SequenceSet, from: &str, to: &str) -> f64 {
    let (mut num, mut den) = (0u64, 0u64);
    for seq in &train.sequences {
        for pair in seq.terms.windows(2) {
            if pair[0].0 == from {
                den += 1;
                if pair[1].0 == to {
                    num += 1;
                }
            }
        }
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Literal adjacent-pair count for one (from, to) pair.
pub fn oracle_transition_count(train: &SequenceSet, from: &str, to: &str) -> u64 {
    let mut count = 0;
    for seq in &train.sequences {
        for pair in seq.terms.windows(2) {
            if pair[0].0 == from && pair[1].0 == to {
                count += 1;
            }
        }
    }
    count
}

/// Literal triplet frequency: occurrences of `term` across every sequence
/// of `physician` on `patient`.
pub fn oracle_triplet_freq(train: &SequenceSet, physician: &str, patient: &str, term: &str) -> u64 {
    train
        .sequences
        .iter()
        .filter(|s| s.physician_id == physician && s.patient_id == patient)
        .flat_map(|s| s.terms.iter())
        .filter(|(t, _)| t == term)
        .count() as u64
}

fn oracle_pair_terms(train: &SequenceSet, physician: &str, patient: &str) -> BTreeSet<String> {
    train
        .sequences
        .iter()
        .filter(|s| s.physician_id == physician && s.patient_id == patient)
        .flat_map(|s| s.terms.iter().map(|(t, _)| t.clone()))
        .collect()
}

/// Literal mean frequency of the terms a physician searched on a patient.
pub fn oracle_mean_pair_frequency(train: &SequenceSet, physician: &str, patient: &str) -> f64 {
    let terms = oracle_pair_terms(train, physician, patient);
    if terms.is_empty() {
        return 0.0;
    }
    let total: u64 = terms
        .iter()
        .map(|t| oracle_triplet_freq(train, physician, patient, t))
        .sum();
    total as f64 / terms.len() as f64
}

/// Literal evaluation of the ypCF score: for every candidate term in some
/// neighbor triplet, the target pair's mean frequency plus the
/// similarity-weighted average of centered neighbor frequencies, with the
/// denominator restricted to the neighbor pairs holding that triplet.
pub fn oracle_ypcf(
    train: &SequenceSet,
    similar_physicians: &[(String, f64)],
    similar_patients: &[(String, f64)],
    physician: &str,
    patient: &str,
) -> BTreeMap<String, f64> {
    let target_mean = oracle_mean_pair_frequency(train, physician, patient);
    let mut candidates: BTreeSet<String> = BTreeSet::new();
    for (other_physician, _) in similar_physicians {
        for (other_patient, _) in similar_patients {
            candidates.extend(oracle_pair_terms(train, other_physician, other_patient));
        }
    }
    let mut scores = BTreeMap::new();
    for term in candidates {
        let (mut num, mut den) = (0.0, 0.0);
        for (other_physician, sim_y) in similar_physicians {
            for (other_patient, sim_p) in similar_patients {
                let freq = oracle_triplet_freq(train, other_physician, other_patient, &term);
                if freq == 0 {
                    continue; // no such triplet for this pair
                }
                let pair_mean = oracle_mean_pair_frequency(train, other_physician, other_patient);
                num += (freq as f64 - pair_mean) * sim_y * sim_p;
                den += sim_y * sim_p;
            }
        }
        if den > 0.0 {
            scores.insert(term, target_mean + num / den);
        }
    }
    scores
}

/// Literal per-patient transition frequency.
pub fn oracle_patient_transition(train: &SequenceSet, patient: &str, from: &str, to: &str) -> u64 {
    train
        .sequences
        .iter()
        .filter(|s| s.patient_id == patient)
        .map(|s| {
            s.terms
                .windows(2)
                .filter(|pair| pair[0].0 == from && pair[1].0 == to)
                .count() as u64
        })
        .sum()
}

/// Dense term profile: patient -> frequency, by scanning the raw sequences.
fn oracle_term_profile(train: &SequenceSet, term: &str) -> BTreeMap<String, f64> {
    let mut profile: BTreeMap<String, f64> = BTreeMap::new();
    for seq in &train.sequences {
        for (t, _) in &seq.terms {
            if t == term {
                *profile.entry(seq.patient_id.clone()).or_insert(0.0) += 1.0;
            }
        }
    }
    profile
}

fn oracle_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .map(|(dim, x)| x * b.get(dim).copied().unwrap_or(0.0))
        .sum();
    let norm = |v: &BTreeMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).min(1.0)
    }
}

/// Literal term-term similarity from scratch.
pub fn oracle_term_similarity(train: &SequenceSet, a: &str, b: &str) -> f64 {
    oracle_cosine(&oracle_term_profile(train, a), &oracle_term_profile(train, b))
}

/// Literal evaluation of the TptCF score by quadruple nested loops over
/// vocabulary terms, similar patients and similar terms, with all
/// similarities and transition counts re-derived from the raw sequences.
/// Returns a score for every vocabulary term (0 when there is no evidence).
pub fn oracle_tptcf(
    train: &SequenceSet,
    last_term: &str,
    similar_patients: &[(String, f64)],
    beta: f64,
) -> BTreeMap<String, f64> {
    let similar_term_set: Vec<(String, f64)> = train
        .vocabulary
        .iter()
        .filter_map(|candidate| {
            let sim = oracle_term_similarity(train, last_term, candidate);
            (sim > beta).then(|| (candidate.clone(), sim))
        })
        .collect();
    let sim_total: f64 = similar_patients.iter().map(|&(_, s)| s).sum();
    let mut scores = BTreeMap::new();
    for candidate in &train.vocabulary {
        let mut score = 0.0;
        if sim_total > 0.0 {
            for (other_patient, sim_p) in similar_patients {
                let mut weighted = 0.0;
                let mut total = 0u64;
                for (similar_term, sim_t) in &similar_term_set {
                    let g = oracle_patient_transition(train, other_patient, similar_term, candidate);
                    weighted += g as f64 * sim_t;
                    total += g;
                }
                if total > 0 {
                    score += sim_p / sim_total * (weighted / total as f64);
                }
            }
        }
        scores.insert(candidate.clone(), score);
    }
    scores
}
