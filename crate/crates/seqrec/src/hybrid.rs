//! Score blending and top-N ranking.
//!
//! The hybrid score of a candidate term is the linear combination
//! `(1 - alpha) * dynamics + alpha * cf`. Blending is raw by default: the
//! two components live on different natural scales (transition
//! probabilities in [0, 1] versus centered frequencies), and the
//! combination uses them as-is. [`min_max_normalize`] is available for
//! callers that prefer both components rescaled to [0, 1] per query.

use std::collections::BTreeMap;

use serde::Serialize;

/// Which scorer produced a [`ScoreVector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    /// First-order Markov dynamics. `cold_start` is set when the query term
    /// had no outgoing transitions in training and the vector is all-zero.
    FoMc { cold_start: bool },
    YpCf,
    TptCf,
    DmCf { alpha: f64 },
}

/// Per-term scores for one query. Terms absent from the map are unscored,
/// which is distinct from an explicit score of 0. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl ScoreVector {
    pub fn new(provenance: Provenance) -> Self {
        ScoreVector {
            scores: BTreeMap::new(),
            provenance,
        }
    }

    pub fn insert(&mut self, term: impl Into<String>, score: f64) {
        debug_assert!(score.is_finite(), "scores must be finite");
        self.scores.insert(term.into(), score);
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.scores.get(term).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn cold_start(&self) -> bool {
        matches!(self.provenance, Provenance::FoMc { cold_start: true })
    }
}

/// Blends two score vectors: over the union of their scored terms,
/// `score(t) = (1 - alpha) * dyn(t) + alpha * cf(t)`, treating a term absent
/// from one vector as 0 in that vector only.
pub fn blend(alpha: f64, dyn_scores: &ScoreVector, cf_scores: &ScoreVector) -> ScoreVector {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let mut out = ScoreVector::new(Provenance::DmCf { alpha });
    for (term, &dyn_score) in &dyn_scores.scores {
        let cf_score = cf_scores.get(term).unwrap_or(0.0);
        out.insert(term.clone(), (1.0 - alpha) * dyn_score + alpha * cf_score);
    }
    for (term, &cf_score) in &cf_scores.scores {
        if !dyn_scores.scores.contains_key(term) {
            out.insert(term.clone(), alpha * cf_score);
        }
    }
    out
}

/// Rescales a score vector to [0, 1] by min-max normalization. A constant
/// non-empty vector maps to all-1; an empty vector stays empty.
pub fn min_max_normalize(scores: &ScoreVector) -> ScoreVector {
    let mut out = ScoreVector::new(scores.provenance);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in scores.scores.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    for (term, &v) in &scores.scores {
        let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
        out.insert(term.clone(), scaled);
    }
    out
}

/// A ranked top-N term list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    /// Sorted by score descending, then global training frequency
    /// descending, then term ascending.
    pub ranked_terms: Vec<(String, f64)>,
}

impl Recommendation {
    /// 1-based rank of `term`, if recommended.
    pub fn rank_of(&self, term: &str) -> Option<usize> {
        self.ranked_terms
            .iter()
            .position(|(t, _)| t == term)
            .map(|i| i + 1)
    }

    pub fn terms(&self) -> Vec<&str> {
        self.ranked_terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

/// Ranks the scored terms and keeps the top `n`.
///
/// Ties are broken by global training frequency (descending), then term id
/// (ascending), so rankings are reproducible. Terms scored exactly 0 are
/// not recommended: a zero carries no preference either way, and dropping
/// it makes the blend at extreme weights rank exactly like its surviving
/// component. If fewer than `n` terms qualify the list is shorter.
pub fn recommend_topn(
    scores: &ScoreVector,
    n: usize,
    freq_tiebreak: &BTreeMap<String, u64>,
) -> Recommendation {
    let mut ranked: Vec<(&String, f64, u64)> = scores
        .scores
        .iter()
        .filter(|&(_, &score)| score != 0.0)
        .map(|(term, &score)| (term, score, freq_tiebreak.get(term).copied().unwrap_or(0)))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| a.0.cmp(b.0))
    });
    ranked.truncate(n);
    Recommendation {
        ranked_terms: ranked
            .into_iter()
            .map(|(term, score, _)| (term.clone(), score))
            .collect(),
    }
}

/// The JSON document emitted for a single recommendation query.
#[derive(Debug, Clone, Serialize)]
pub struct RecommendationRecord {
    pub query: QueryRecord,
    pub topn: Vec<ScoredTerm>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryRecord {
    pub physician_id: String,
    pub patient_id: String,
    pub last_term: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoredTerm {
    pub term: String,
    pub score: f64,
}

impl RecommendationRecord {
    pub fn new(physician_id: &str, patient_id: &str, last_term: &str, rec: &Recommendation) -> Self {
        RecommendationRecord {
            query: QueryRecord {
                physician_id: physician_id.to_string(),
                patient_id: patient_id.to_string(),
                last_term: last_term.to_string(),
            },
            topn: rec
                .ranked_terms
                .iter()
                .map(|(term, score)| ScoredTerm {
                    term: term.clone(),
                    score: *score,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recommendation serialize")
    }
}
