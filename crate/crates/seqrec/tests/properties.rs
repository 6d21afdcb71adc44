//! Corpus-level invariants that complement the per-module unit tests.

mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use seqrec::cf::{build_triplet_store, score_ypcf};
use seqrec::hybrid::{blend, recommend_topn, Provenance, ScoreVector};
use seqrec::log::{parse_log, ParseOptions};
use seqrec::markov::build_transition_model;
use seqrec::sequence::{build_sequences, cutoff_split, SequenceSet};
use seqrec::similarity::{build_profiles, sim_p2y, NeighborIndex, NeighborSets};
use seqrec::stats::corpus_stats;

fn merge(a: &SequenceSet, b: &SequenceSet) -> SequenceSet {
    let mut sequences = a.sequences.clone();
    sequences.extend(b.sequences.iter().cloned());
    // Rebuild through the public path to keep the entity sets consistent.
    let events: Vec<seqrec::log::SearchEvent> = sequences
        .iter()
        .flat_map(|s| {
            s.terms.iter().map(|(term, ts)| seqrec::log::SearchEvent {
                physician_id: s.physician_id.clone(),
                patient_id: s.patient_id.clone(),
                visit_id: s.visit_id.clone(),
                timestamp: *ts,
                term: term.clone(),
            })
        })
        .collect();
    build_sequences(&seqrec::log::EventLog { events })
}

#[test]
fn cutoff_split_partitions_cleanly() {
    let mut cases = 0;
    for seed in 0..40u64 {
        let corpus = random_corpus(seed, 8, 8, 12, 120);
        for cutoff in [25, 100, 175] {
            let (train, tests) = cutoff_split(&corpus, cutoff);
            for seq in &train.sequences {
                assert!(seq.terms.iter().all(|&(_, ts)| ts < cutoff));
                assert!(!seq.terms.is_empty());
            }
            let mut seen = std::collections::BTreeSet::new();
            for case in &tests {
                assert!(!case.context.is_empty());
                assert!(case.context.iter().all(|&(_, ts)| ts < cutoff));
                assert!(case.target_timestamp >= cutoff);
                let key = (
                    case.physician_id.clone(),
                    case.patient_id.clone(),
                    case.visit_id.clone(),
                );
                assert!(seen.insert(key), "one test case per sequence");
                cases += 1;
            }
            // Every test case target is the earliest post-cutoff term of
            // its original sequence.
            for case in &tests {
                let original = corpus
                    .sequences
                    .iter()
                    .find(|s| {
                        s.physician_id == case.physician_id
                            && s.patient_id == case.patient_id
                            && s.visit_id == case.visit_id
                    })
                    .unwrap();
                let first_post = original.terms.iter().find(|&&(_, ts)| ts >= cutoff).unwrap();
                assert_eq!(first_post.0, case.target);
                assert_eq!(first_post.1, case.target_timestamp);
            }
        }
    }
    assert!(cases > 100);
}

#[test]
fn parse_and_build_are_deterministic_on_identical_bytes() {
    let corpus = random_corpus(7, 6, 6, 10, 100);
    let mut log = seqrec::log::EventLog::default();
    for seq in &corpus.sequences {
        for (term, ts) in &seq.terms {
            log.events.push(seqrec::log::SearchEvent {
                physician_id: seq.physician_id.clone(),
                patient_id: seq.patient_id.clone(),
                visit_id: seq.visit_id.clone(),
                timestamp: *ts,
                term: term.clone(),
            });
        }
    }
    let bytes = log.to_tsv_string();
    let first = build_sequences(&parse_log(bytes.as_bytes(), &ParseOptions::default()).unwrap());
    let second = build_sequences(&parse_log(bytes.as_bytes(), &ParseOptions::default()).unwrap());
    assert_eq!(first, second);
}

#[test]
fn stats_add_element_wise_over_disjoint_corpora() {
    for seed in 0..10u64 {
        let a = random_corpus_with_prefix(seed, 5, 5, 8, 60, "a_");
        let b = random_corpus_with_prefix(seed + 1000, 5, 5, 8, 60, "b_");
        let merged = corpus_stats(&merge(&a, &b));
        let (sa, sb) = (corpus_stats(&a), corpus_stats(&b));

        assert_eq!(merged.n_sequences, sa.n_sequences + sb.n_sequences);
        assert_eq!(
            merged.total_sequence_length,
            sa.total_sequence_length + sb.total_sequence_length
        );
        assert_eq!(merged.n_patients, sa.n_patients + sb.n_patients);
        assert_eq!(merged.n_physicians, sa.n_physicians + sb.n_physicians);

        let mut lengths = sa.sequence_length_histogram.clone();
        for (k, v) in &sb.sequence_length_histogram {
            *lengths.entry(*k).or_insert(0) += v;
        }
        assert_eq!(merged.sequence_length_histogram, lengths);

        let mut uniques = sa.unique_terms_per_patient_histogram.clone();
        for (k, v) in &sb.unique_terms_per_patient_histogram {
            *uniques.entry(*k).or_insert(0) += v;
        }
        assert_eq!(merged.unique_terms_per_patient_histogram, uniques);
    }
}

#[test]
fn transition_counts_add_over_concatenated_corpora() {
    for seed in 0..10u64 {
        // Disjoint visit ids, shared term vocabulary.
        let a = random_corpus_with_prefix(seed, 5, 5, 8, 80, "a_");
        let b = random_corpus_with_prefix(seed + 2000, 5, 5, 8, 80, "b_");
        let (ma, mb) = (build_transition_model(&a), build_transition_model(&b));
        let merged = build_transition_model(&merge(&a, &b));
        let vocab: std::collections::BTreeSet<&String> =
            merged.vocabulary().iter().collect();
        for from in &vocab {
            for to in &vocab {
                assert_eq!(
                    merged.count(from, to),
                    ma.count(from, to) + mb.count(from, to)
                );
            }
            assert_eq!(merged.row_total(from), ma.row_total(from) + mb.row_total(from));
        }
    }
}

#[test]
fn ypcf_scores_are_invariant_under_neighbor_reordering() {
    for seed in 0..20u64 {
        let corpus = random_corpus(seed + 300, 6, 6, 10, 120);
        let profiles = build_profiles(&corpus);
        let index = NeighborIndex::build(&corpus);
        let triplets = build_triplet_store(&corpus);
        let physician = corpus.physicians.iter().next().unwrap();
        let patient = corpus.patients.iter().next().unwrap();
        let neighbors = sim_p2y(&profiles, &index, physician, patient, 4, 4);
        if neighbors.similar_physicians.is_empty() {
            continue;
        }
        let mut reversed_physicians = neighbors.similar_physicians.clone();
        reversed_physicians.reverse();
        let mut rotated_patients = neighbors.similar_patients.clone();
        let rotation = 1.min(rotated_patients.len().saturating_sub(1));
        rotated_patients.rotate_left(rotation);
        let shuffled = NeighborSets {
            similar_physicians: reversed_physicians,
            similar_patients: rotated_patients,
            order: neighbors.order,
        };
        let original = score_ypcf(&triplets, &neighbors, physician, patient);
        let reordered = score_ypcf(&triplets, &shuffled, physician, patient);
        assert_eq!(
            original.scores.keys().collect::<Vec<_>>(),
            reordered.scores.keys().collect::<Vec<_>>()
        );
        for (term, value) in &original.scores {
            assert!((value - reordered.scores[term]).abs() <= 1e-12);
        }
    }
}

#[test]
fn dense_similarity_recomputation_matches_sparse_engine() {
    // Dense O(n^2) profiles rebuilt by raw scans, compared entity by
    // entity against the sparse store on corpora with <= 15 of everything.
    fn dense_profiles(
        corpus: &SequenceSet,
        key: impl Fn(&seqrec::sequence::SearchSequence, &str) -> (String, String),
    ) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut profiles: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for seq in &corpus.sequences {
            for (term, _) in &seq.terms {
                let (entity, dimension) = key(seq, term);
                *profiles.entry(entity).or_default().entry(dimension).or_insert(0.0) += 1.0;
            }
        }
        profiles
    }
    fn dense_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
        let dot: f64 = a.iter().map(|(d, x)| x * b.get(d).copied().unwrap_or(0.0)).sum();
        let norm = |v: &BTreeMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
        if norm(a) == 0.0 || norm(b) == 0.0 {
            0.0
        } else {
            (dot / (norm(a) * norm(b))).min(1.0)
        }
    }

    fn check(dense: &BTreeMap<String, BTreeMap<String, f64>>, sim: impl Fn(&str, &str) -> f64) {
        for (a, profile_a) in dense {
            for (b, profile_b) in dense {
                let expected = dense_cosine(profile_a, profile_b);
                assert!(
                    (sim(a, b) - expected).abs() <= 1e-9,
                    "similarity({a}, {b}) diverged"
                );
            }
        }
    }

    for seed in 0..25u64 {
        let corpus = random_corpus(seed + 4000, 10, 12, 15, 100);
        let store = build_profiles(&corpus);
        let by_physician =
            dense_profiles(&corpus, |s, t| (s.physician_id.clone(), t.to_string()));
        let by_patient = dense_profiles(&corpus, |s, t| (s.patient_id.clone(), t.to_string()));
        let by_term = dense_profiles(&corpus, |s, t| (t.to_string(), s.patient_id.clone()));

        check(&by_physician, |a, b| store.sim_physician(a, b));
        check(&by_patient, |a, b| store.sim_patient(a, b));
        check(&by_term, |a, b| store.sim_term(a, b));
    }
}

#[test]
fn neighbor_sets_are_sorted_bounded_and_self_free() {
    for seed in 0..20u64 {
        let corpus = random_corpus(seed + 5000, 8, 8, 12, 120);
        let store = build_profiles(&corpus);
        let index = NeighborIndex::build(&corpus);
        for physician in corpus.physicians.iter().take(3) {
            for patient in corpus.patients.iter().take(3) {
                for (k_p, k_y) in [(1, 2), (3, 3)] {
                    for sets in [
                        sim_p2y(&store, &index, physician, patient, k_p, k_y),
                        seqrec::similarity::sim_y2p(&store, &index, physician, patient, k_p, k_y),
                    ] {
                        assert!(sets.similar_patients.len() <= k_p);
                        assert!(sets.similar_physicians.len() <= k_y);
                        for (list, target) in [
                            (&sets.similar_patients, patient),
                            (&sets.similar_physicians, physician),
                        ] {
                            assert!(list.iter().all(|(id, sim)| id != target && *sim > 0.0));
                            for pair in list.windows(2) {
                                assert!(
                                    pair[0].1 > pair[1].1
                                        || (pair[0].1 == pair[1].1 && pair[0].0 < pair[1].0)
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn deterministic_corpus_gives_perfect_fomc_hit_rate() {
    // With the planted successor taken every time, every learned row is a
    // point mass and every test target is that successor.
    let log = seqrec::synth::synth_generate(
        &seqrec::synth::SynthConfig {
            n_physicians: 10,
            n_patients: 40,
            n_terms: 10,
            n_sequences: 2_000,
            dominant_transition_prob: 1.0,
            ..seqrec::synth::SynthConfig::default()
        },
        5,
    )
    .unwrap();
    let mut timestamps: Vec<i64> = log.events.iter().map(|e| e.timestamp).collect();
    timestamps.sort_unstable();
    let cutoff = timestamps[timestamps.len() * 8 / 10];
    let (train, tests) = cutoff_split(&build_sequences(&log), cutoff);
    assert!(tests.len() > 50);
    let report = seqrec::eval::evaluate(
        &seqrec::eval::MethodConfig::fomc(),
        &train,
        &tests,
        cutoff,
        &[1],
    )
    .unwrap();
    assert_eq!(report.hr[&1], 1.0);
}

fn score_map_strategy() -> impl Strategy<Value = BTreeMap<String, f64>> {
    proptest::collection::btree_map("[a-f]", -5.0..5.0f64, 0..6)
}

fn to_vector(map: &BTreeMap<String, f64>, provenance: Provenance) -> ScoreVector {
    let mut v = ScoreVector::new(provenance);
    for (term, &score) in map {
        v.insert(term.clone(), score);
    }
    v
}

proptest! {
    #[test]
    fn blend_is_linear_in_both_components(
        dyn_map in score_map_strategy(),
        cf_map in score_map_strategy(),
        alpha in 0.0..=1.0f64,
        scale in -3.0..3.0f64,
    ) {
        let dyn_scores = to_vector(&dyn_map, Provenance::FoMc { cold_start: false });
        let cf_scores = to_vector(&cf_map, Provenance::YpCf);
        let scaled_dyn = to_vector(
            &dyn_map.iter().map(|(k, v)| (k.clone(), v * scale)).collect(),
            Provenance::FoMc { cold_start: false },
        );
        let scaled_cf = to_vector(
            &cf_map.iter().map(|(k, v)| (k.clone(), v * scale)).collect(),
            Provenance::YpCf,
        );
        let blended = blend(alpha, &dyn_scores, &cf_scores);
        let blended_then_scaled: BTreeMap<&String, f64> = blended
            .scores
            .iter()
            .map(|(k, v)| (k, v * scale))
            .collect();
        let scaled_then_blended = blend(alpha, &scaled_dyn, &scaled_cf);
        for (term, value) in &scaled_then_blended.scores {
            prop_assert!((value - blended_then_scaled[term]).abs() <= 1e-12);
        }
    }

    #[test]
    fn topn_is_a_prefix_of_topn_plus_one(
        map in score_map_strategy(),
        freq in proptest::collection::btree_map("[a-f]", 0u64..20, 0..6),
        n in 1usize..6,
    ) {
        let scores = to_vector(&map, Provenance::YpCf);
        let shorter = recommend_topn(&scores, n, &freq);
        let longer = recommend_topn(&scores, n + 1, &freq);
        prop_assert_eq!(&longer.ranked_terms[..shorter.ranked_terms.len()], &shorter.ranked_terms[..]);
    }
}
