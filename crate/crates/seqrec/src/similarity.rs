//! Sparse frequency profiles and the three cosine similarities.
//!
//! Every entity is represented by a bag-of-frequencies vector built from
//! training data only:
//!
//! - a physician by the terms they searched, pooled over all patients;
//! - a patient by the terms searched on them, pooled over all physicians;
//! - a term by the patients it was searched on, pooled over all physicians
//!   (so the term matrix is exactly the transpose of the patient matrix).
//!
//! Similarity between two entities of the same kind is the cosine of their
//! profiles. Search-log co-occurrence is extremely sparse (typically over
//! 97% of pairs share nothing), so similarities are computed lazily per
//! query against candidates gathered through shared dimensions, never as a
//! full precomputed matrix.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::sequence::SequenceSet;

/// A sparse non-negative vector with a cached Euclidean norm. Zero entries
/// are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<String, f64>,
    norm: f64,
}

impl SparseVector {
    pub fn from_counts<I: IntoIterator<Item = (String, u64)>>(counts: I) -> Self {
        Self::from_entries(
            counts
                .into_iter()
                .map(|(dim, count)| (dim, count as f64))
                .collect(),
        )
    }

    pub fn from_entries(entries: BTreeMap<String, f64>) -> Self {
        let entries: BTreeMap<String, f64> = entries
            .into_iter()
            .filter(|&(_, value)| {
                debug_assert!(value >= 0.0, "frequencies are non-negative");
                value != 0.0
            })
            .collect();
        let norm = entries.values().map(|v| v * v).sum::<f64>().sqrt();
        SparseVector { entries, norm }
    }

    pub fn get(&self, dim: &str) -> f64 {
        self.entries.get(dim).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(dim, &v)| (dim.as_str(), v))
    }

    /// Dimensions with a nonzero entry.
    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(dim, v)| v * large.get(dim))
            .sum()
    }
}

/// Cosine similarity in [0, 1]; zero if either vector has zero norm.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (a.norm * b.norm)).min(1.0)
}

/// The physician, patient and term frequency profiles of a training set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileStore {
    physician_profiles: BTreeMap<String, SparseVector>,
    patient_profiles: BTreeMap<String, SparseVector>,
    term_profiles: BTreeMap<String, SparseVector>,
    watermark: Option<i64>,
}

impl ProfileStore {
    pub fn physician_profile(&self, physician: &str) -> Option<&SparseVector> {
        self.physician_profiles.get(physician)
    }

    pub fn patient_profile(&self, patient: &str) -> Option<&SparseVector> {
        self.patient_profiles.get(patient)
    }

    pub fn term_profile(&self, term: &str) -> Option<&SparseVector> {
        self.term_profiles.get(term)
    }

    pub fn physicians(&self) -> impl Iterator<Item = (&str, &SparseVector)> {
        self.physician_profiles.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn patients(&self) -> impl Iterator<Item = (&str, &SparseVector)> {
        self.patient_profiles.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &SparseVector)> {
        self.term_profiles.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.physician_profiles.is_empty()
            && self.patient_profiles.is_empty()
            && self.term_profiles.is_empty()
    }

    pub fn watermark(&self) -> Option<i64> {
        self.watermark
    }

    /// Physician-physician similarity.
    pub fn sim_physician(&self, a: &str, b: &str) -> f64 {
        match (self.physician_profile(a), self.physician_profile(b)) {
            (Some(x), Some(y)) => cosine(x, y),
            _ => 0.0,
        }
    }

    /// Patient-patient similarity.
    pub fn sim_patient(&self, a: &str, b: &str) -> f64 {
        match (self.patient_profile(a), self.patient_profile(b)) {
            (Some(x), Some(y)) => cosine(x, y),
            _ => 0.0,
        }
    }

    /// Term-term similarity.
    pub fn sim_term(&self, a: &str, b: &str) -> f64 {
        match (self.term_profile(a), self.term_profile(b)) {
            (Some(x), Some(y)) => cosine(x, y),
            _ => 0.0,
        }
    }
}

/// Builds all three profile maps in one pass over the training sequences.
pub fn build_profiles(train: &SequenceSet) -> ProfileStore {
    let mut physicians: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut patients: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut terms: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for seq in &train.sequences {
        for (term, _) in &seq.terms {
            *physicians
                .entry(seq.physician_id.clone())
                .or_default()
                .entry(term.clone())
                .or_insert(0) += 1;
            *patients
                .entry(seq.patient_id.clone())
                .or_default()
                .entry(term.clone())
                .or_insert(0) += 1;
            *terms
                .entry(term.clone())
                .or_default()
                .entry(seq.patient_id.clone())
                .or_insert(0) += 1;
        }
    }
    let collect = |m: BTreeMap<String, BTreeMap<String, u64>>| {
        m.into_iter()
            .map(|(k, counts)| (k, SparseVector::from_counts(counts)))
            .collect()
    };
    ProfileStore {
        physician_profiles: collect(physicians),
        patient_profiles: collect(patients),
        term_profiles: collect(terms),
        watermark: train.max_timestamp(),
    }
}

/// Which of the two neighbor-identification procedures produced a
/// [`NeighborSets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum NeighborOrder {
    /// Patients first, then physicians filtered through them.
    P2Y,
    /// Physicians first, then patients filtered through them.
    Y2P,
}

/// The neighbor sets of one (physician, patient) query.
///
/// Both lists are sorted by similarity descending (ties by id ascending),
/// capped at their `k`, never contain the target entity, and only carry
/// strictly positive similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    pub similar_patients: Vec<(String, f64)>,
    pub similar_physicians: Vec<(String, f64)>,
    pub order: NeighborOrder,
}

/// Who-searched-what-on-whom indexes over a training set, built once and
/// shared by all neighbor queries against it.
#[derive(Debug, Clone, Default)]
pub struct NeighborIndex {
    /// patient -> term -> physicians who searched that term on that patient.
    patient_term_physicians: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    /// physician -> patient -> terms they searched on that patient.
    physician_patient_terms: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    /// term -> physicians who ever searched it.
    term_physicians: BTreeMap<String, BTreeSet<String>>,
}

impl NeighborIndex {
    pub fn build(train: &SequenceSet) -> Self {
        let mut index = NeighborIndex::default();
        for seq in &train.sequences {
            for (term, _) in &seq.terms {
                index
                    .patient_term_physicians
                    .entry(seq.patient_id.clone())
                    .or_default()
                    .entry(term.clone())
                    .or_default()
                    .insert(seq.physician_id.clone());
                index
                    .physician_patient_terms
                    .entry(seq.physician_id.clone())
                    .or_default()
                    .entry(seq.patient_id.clone())
                    .or_default()
                    .insert(term.clone());
                index
                    .term_physicians
                    .entry(term.clone())
                    .or_default()
                    .insert(seq.physician_id.clone());
            }
        }
        index
    }
}

fn rank_neighbors(mut scored: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Top-`k` patients most similar to `patient`, excluding the patient itself
/// and anything with zero similarity. Candidates are gathered through
/// shared terms, so only patients with overlapping profiles are scored.
pub fn top_similar_patients(
    store: &ProfileStore,
    patient: &str,
    k: usize,
) -> Vec<(String, f64)> {
    let Some(profile) = store.patient_profile(patient) else {
        return Vec::new();
    };
    let mut candidates: BTreeSet<&str> = BTreeSet::new();
    for term in profile.support() {
        if let Some(term_profile) = store.term_profile(term) {
            candidates.extend(term_profile.support());
        }
    }
    candidates.remove(patient);
    let scored = candidates
        .into_iter()
        .filter_map(|other| {
            let sim = cosine(profile, store.patient_profile(other)?);
            (sim > 0.0).then(|| (other.to_string(), sim))
        })
        .collect();
    rank_neighbors(scored, k)
}

/// Top-`k` physicians most similar to `physician`; the mirror of
/// [`top_similar_patients`].
pub fn top_similar_physicians(
    store: &ProfileStore,
    index: &NeighborIndex,
    physician: &str,
    k: usize,
) -> Vec<(String, f64)> {
    let Some(profile) = store.physician_profile(physician) else {
        return Vec::new();
    };
    let mut candidates: BTreeSet<&str> = BTreeSet::new();
    for term in profile.support() {
        if let Some(searchers) = index.term_physicians.get(term) {
            candidates.extend(searchers.iter().map(String::as_str));
        }
    }
    candidates.remove(physician);
    let scored = candidates
        .into_iter()
        .filter_map(|other| {
            let sim = cosine(profile, store.physician_profile(other)?);
            (sim > 0.0).then(|| (other.to_string(), sim))
        })
        .collect();
    rank_neighbors(scored, k)
}

/// Patient-first neighbor identification.
///
/// First the top-`k_p` patients similar to `patient` are selected. Then the
/// candidate physicians are those who searched some term both on `patient`
/// and on at least one selected similar patient (the same term on both);
/// the top-`k_y` of those by physician similarity form the physician set.
pub fn sim_p2y(
    store: &ProfileStore,
    index: &NeighborIndex,
    physician: &str,
    patient: &str,
    k_p: usize,
    k_y: usize,
) -> NeighborSets {
    let similar_patients = top_similar_patients(store, patient, k_p);
    let mut candidates: BTreeSet<&String> = BTreeSet::new();
    if let Some(terms_on_target) = index.patient_term_physicians.get(patient) {
        for (term, searchers_on_target) in terms_on_target {
            for (other_patient, _) in &similar_patients {
                let shared = index
                    .patient_term_physicians
                    .get(other_patient)
                    .and_then(|terms| terms.get(term));
                if let Some(searchers_on_other) = shared {
                    candidates.extend(searchers_on_target.intersection(searchers_on_other));
                }
            }
        }
    }
    let scored = candidates
        .into_iter()
        .filter(|&candidate| candidate != physician)
        .filter_map(|candidate| {
            let sim = store.sim_physician(physician, candidate);
            (sim > 0.0).then(|| (candidate.clone(), sim))
        })
        .collect();
    NeighborSets {
        similar_patients,
        similar_physicians: rank_neighbors(scored, k_y),
        order: NeighborOrder::P2Y,
    }
}

/// Physician-first neighbor identification: the reversed order of
/// [`sim_p2y`].
///
/// First the top-`k_y` physicians similar to `physician` are selected. The
/// candidate patients are those on whom a selected physician searched a
/// term that was ever searched (by anyone) on `patient`; the top-`k_p` of
/// those by patient similarity form the patient set.
pub fn sim_y2p(
    store: &ProfileStore,
    index: &NeighborIndex,
    physician: &str,
    patient: &str,
    k_p: usize,
    k_y: usize,
) -> NeighborSets {
    let similar_physicians = top_similar_physicians(store, index, physician, k_y);
    let terms_on_target: BTreeSet<&str> = store
        .patient_profile(patient)
        .map(|profile| profile.support().collect())
        .unwrap_or_default();
    let mut candidates: BTreeSet<&String> = BTreeSet::new();
    for (other_physician, _) in &similar_physicians {
        if let Some(their_patients) = index.physician_patient_terms.get(other_physician) {
            for (other_patient, terms) in their_patients {
                if other_patient != patient
                    && terms.iter().any(|t| terms_on_target.contains(t.as_str()))
                {
                    candidates.insert(other_patient);
                }
            }
        }
    }
    let scored = candidates
        .into_iter()
        .filter_map(|candidate| {
            let sim = store.sim_patient(patient, candidate);
            (sim > 0.0).then(|| (candidate.clone(), sim))
        })
        .collect();
    NeighborSets {
        similar_patients: rank_neighbors(scored, k_p),
        similar_physicians,
        order: NeighborOrder::Y2P,
    }
}

/// Every term whose similarity to `term` strictly exceeds `beta`, sorted by
/// term id.
///
/// A term seen in training always admits itself (self-similarity 1) for any
/// `beta < 1`; `beta = 1` yields the empty set by strictness, and so does an
/// unseen term (its profile is the zero vector).
pub fn similar_terms(store: &ProfileStore, term: &str, beta: f64) -> Vec<(String, f64)> {
    let Some(profile) = store.term_profile(term) else {
        return Vec::new();
    };
    let mut candidates: BTreeSet<&str> = BTreeSet::new();
    for patient in profile.support() {
        if let Some(patient_profile) = store.patient_profile(patient) {
            candidates.extend(patient_profile.support());
        }
    }
    candidates
        .into_iter()
        .filter_map(|candidate| {
            let sim = cosine(profile, store.term_profile(candidate)?);
            (sim > beta).then(|| (candidate.to_string(), sim))
        })
        .collect()
}

/// Which profile family a [`similarity_distribution`] is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Physician,
    Patient,
    Term,
}

/// Fraction of nonzero pairwise similarities plus a 10-bin histogram of the
/// nonzero values, bins `(0.0, 0.1], ..., (0.9, 1.0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityDistribution {
    pub nonzero_fraction: f64,
    pub histogram: [u64; 10],
}

impl SimilarityDistribution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution serialize")
    }
}

/// Exhaustively computes all pairwise similarities of one entity kind.
/// Quadratic in the number of entities; intended for offline corpus
/// analysis, not for scoring.
pub fn similarity_distribution(store: &ProfileStore, kind: SimilarityKind) -> SimilarityDistribution {
    let profiles: Vec<&SparseVector> = match kind {
        SimilarityKind::Physician => store.physicians().map(|(_, v)| v).collect(),
        SimilarityKind::Patient => store.patients().map(|(_, v)| v).collect(),
        SimilarityKind::Term => store.terms().map(|(_, v)| v).collect(),
    };
    let mut histogram = [0u64; 10];
    let mut nonzero = 0u64;
    let mut total = 0u64;
    for i in 0..profiles.len() {
        for j in (i + 1)..profiles.len() {
            total += 1;
            let sim = cosine(profiles[i], profiles[j]);
            if sim > 0.0 {
                nonzero += 1;
                let bin = ((sim * 10.0).ceil() as usize).clamp(1, 10) - 1;
                histogram[bin] += 1;
            }
        }
    }
    SimilarityDistribution {
        nonzero_fraction: if total == 0 {
            0.0
        } else {
            nonzero as f64 / total as f64
        },
        histogram,
    }
}
