//! Corpus statistics: entity counts, sequence lengths and their histograms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};

use crate::sequence::SequenceSet;

/// Summary statistics of a [`SequenceSet`].
///
/// Averages are exact rationals evaluated in `f64`; they are rounded to
/// three decimals only when serialized to JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_patients: usize,
    pub n_physicians: usize,
    pub n_terms: usize,
    pub n_sequences: usize,
    pub total_sequence_length: u64,
    #[serde(serialize_with = "round3")]
    pub avg_len_per_patient: f64,
    #[serde(serialize_with = "round3")]
    pub avg_len_per_sequence: f64,
    /// sequence length -> number of sequences of that length.
    pub sequence_length_histogram: BTreeMap<u64, u64>,
    /// unique-term count -> number of patients with that many unique terms.
    pub unique_terms_per_patient_histogram: BTreeMap<u64, u64>,
    /// Set when the corpus was empty and the averages are reported as 0.
    pub empty: bool,
}

fn round3<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_f64((value * 1000.0).round() / 1000.0)
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Computes a [`StatsReport`]. An empty corpus yields all-zero counts,
/// averages of 0 and the `empty` flag set.
pub fn corpus_stats(set: &SequenceSet) -> StatsReport {
    let n_sequences = set.sequences.len();
    let total: u64 = set.sequences.iter().map(|s| s.len() as u64).sum();

    let mut sequence_length_histogram = BTreeMap::new();
    for seq in &set.sequences {
        *sequence_length_histogram.entry(seq.len() as u64).or_insert(0) += 1;
    }

    let mut terms_per_patient: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for seq in &set.sequences {
        let entry = terms_per_patient.entry(&seq.patient_id).or_default();
        for (term, _) in &seq.terms {
            entry.insert(term);
        }
    }
    let mut unique_terms_per_patient_histogram = BTreeMap::new();
    for unique in terms_per_patient.values() {
        *unique_terms_per_patient_histogram
            .entry(unique.len() as u64)
            .or_insert(0) += 1;
    }

    let empty = n_sequences == 0;
    StatsReport {
        n_patients: set.patients.len(),
        n_physicians: set.physicians.len(),
        n_terms: set.vocabulary.len(),
        n_sequences,
        total_sequence_length: total,
        avg_len_per_patient: if set.patients.is_empty() {
            0.0
        } else {
            total as f64 / set.patients.len() as f64
        },
        avg_len_per_sequence: if empty {
            0.0
        } else {
            total as f64 / n_sequences as f64
        },
        sequence_length_histogram,
        unique_terms_per_patient_histogram,
        empty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::{parse_log, ParseOptions};
    use crate::sequence::build_sequences;

    fn set_from(text: &str) -> SequenceSet {
        build_sequences(&parse_log(text.as_bytes(), &ParseOptions::default()).unwrap())
    }

    #[test]
    fn single_sequence_counts() {
        let set = set_from("Y1\tP1\tV1\t1\ta\nY1\tP1\tV1\t2\tb\nY1\tP1\tV1\t3\tc\n");
        let report = corpus_stats(&set);
        assert_eq!(report.n_sequences, 1);
        assert_eq!(report.total_sequence_length, 3);
        assert_eq!(report.avg_len_per_sequence, 3.0);
        assert_eq!(report.avg_len_per_patient, 3.0);
        assert_eq!(report.sequence_length_histogram, BTreeMap::from([(3, 1)]));
        assert!(!report.empty);
    }

    #[test]
    fn unique_terms_pool_across_a_patients_sequences() {
        // Two sequences [a, b] and [a] on one patient: unique terms {a, b}.
        let set = set_from("Y1\tP1\tV1\t1\ta\nY1\tP1\tV1\t2\tb\nY1\tP1\tV2\t3\ta\n");
        let report = corpus_stats(&set);
        assert_eq!(
            report.unique_terms_per_patient_histogram,
            BTreeMap::from([(2, 1)])
        );
    }

    #[test]
    fn empty_corpus_reports_zero_with_flag() {
        let report = corpus_stats(&SequenceSet::default());
        assert_eq!(report.n_sequences, 0);
        assert_eq!(report.avg_len_per_sequence, 0.0);
        assert_eq!(report.avg_len_per_patient, 0.0);
        assert!(report.empty);
    }

    #[test]
    fn histograms_account_for_every_sequence_and_patient() {
        let set = set_from(concat!(
            "Y1\tP1\tV1\t1\ta\n",
            "Y1\tP1\tV2\t2\ta\nY1\tP1\tV2\t3\tb\n",
            "Y2\tP2\tV3\t4\tc\n",
        ));
        let report = corpus_stats(&set);
        let len_total: u64 = report.sequence_length_histogram.values().sum();
        assert_eq!(len_total, report.n_sequences as u64);
        let patient_total: u64 = report.unique_terms_per_patient_histogram.values().sum();
        assert_eq!(patient_total, report.n_patients as u64);
    }

    #[test]
    fn json_rounds_averages_to_three_decimals() {
        // 7 terms over 3 sequences: 2.333333... rounds to 2.333.
        let set = set_from(concat!(
            "Y1\tP1\tV1\t1\ta\nY1\tP1\tV1\t2\ta\nY1\tP1\tV1\t3\ta\n",
            "Y1\tP1\tV2\t4\ta\nY1\tP1\tV2\t5\ta\nY1\tP1\tV2\t6\ta\n",
            "Y1\tP1\tV3\t7\ta\n",
        ));
        let json = corpus_stats(&set).to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["avg_len_per_sequence"], 2.333);
        assert_eq!(value["n_sequences"], 3);
    }
}
