//! Seeded synthetic search-log generation.
//!
//! Real clinical search logs are not redistributable, so experiments run on
//! synthetic logs with a similar shape: many short sequences (geometric
//! lengths), a planted first-order transition structure, and timestamps
//! spread over a configurable window. Generation is fully deterministic
//! given `(config, seed)`, across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::log::{EventLog, SearchEvent};

/// Configuration for [`synth_generate`].
///
/// Defaults mirror the scale of a real eight-month clinical search log:
/// 2,121 physicians, 13,819 patients, 9,781 terms and 24,183 sequences with
/// a mean length close to 2.885 (`seq_len_geometric_p` ≈ 1/2.885), spread
/// over a 243-day window starting 2013-01-24 UTC.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_physicians: usize,
    pub n_patients: usize,
    pub n_terms: usize,
    pub n_sequences: usize,
    /// Success probability of the geometric length distribution; the mean
    /// sequence length is `1 / seq_len_geometric_p`. Must be in (0, 1].
    pub seq_len_geometric_p: f64,
    /// Probability that term `t{i}` is followed by `t{(i+1) % n_terms}`;
    /// otherwise the next term is uniform random. Must be in [0, 1].
    pub dominant_transition_prob: f64,
    /// Width of the generation window in seconds; sequence start times are
    /// uniform over it.
    pub time_span: i64,
    /// Epoch seconds of the window start, so that calendar cutoffs make
    /// sense on synthetic data.
    pub start_time: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_physicians: 2_121,
            n_patients: 13_819,
            n_terms: 9_781,
            n_sequences: 24_183,
            seq_len_geometric_p: 0.347,
            dominant_transition_prob: 0.3,
            time_span: 20_995_200, // 243 days
            start_time: 1_358_985_600, // 2013-01-24 00:00:00 UTC
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("n_physicians", self.n_physicians),
            ("n_patients", self.n_patients),
            ("n_terms", self.n_terms),
            ("n_sequences", self.n_sequences),
        ] {
            if value < 1 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if !(self.seq_len_geometric_p > 0.0 && self.seq_len_geometric_p <= 1.0) {
            return Err(Error::InvalidConfig(
                "seq_len_geometric_p must be in (0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.dominant_transition_prob) {
            return Err(Error::InvalidConfig(
                "dominant_transition_prob must be in [0, 1]".into(),
            ));
        }
        if self.time_span < 1 {
            return Err(Error::InvalidConfig("time_span must be >= 1".into()));
        }
        if self.start_time < 0 {
            return Err(Error::InvalidConfig("start_time must be >= 0".into()));
        }
        Ok(())
    }
}

// Bernoulli-trial geometric sampling: no transcendentals, so the drawn
// lengths are bit-identical on every platform.
fn geometric_len<R: Rng>(rng: &mut R, p: f64) -> usize {
    let mut len = 1;
    while len < 10_000 && rng.gen::<f64>() >= p {
        len += 1;
    }
    len
}

/// Generates a synthetic [`EventLog`], deterministically for a given
/// `(config, seed)` pair.
///
/// Each sequence draws a physician, a patient and a fresh visit id; its
/// length is geometric; its first term is uniform; each following term is
/// the planted successor `t{(i+1) % n_terms}` with probability
/// `dominant_transition_prob`, else uniform. Timestamps are strictly
/// increasing within a sequence.
pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<EventLog> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Within-sequence gaps are sized so that a fair share of sequences
    // straddle any central cutoff time.
    let gap_max = (config.time_span / 20).max(1);
    let mut events = Vec::new();
    for visit in 0..config.n_sequences {
        let physician = rng.gen_range(0..config.n_physicians);
        let patient = rng.gen_range(0..config.n_patients);
        let len = geometric_len(&mut rng, config.seq_len_geometric_p);
        let mut timestamp = config.start_time + rng.gen_range(0..config.time_span);
        let mut term = rng.gen_range(0..config.n_terms);
        for position in 0..len {
            if position > 0 {
                term = if rng.gen::<f64>() < config.dominant_transition_prob {
                    (term + 1) % config.n_terms
                } else {
                    rng.gen_range(0..config.n_terms)
                };
                timestamp += rng.gen_range(1..=gap_max);
            }
            events.push(SearchEvent {
                physician_id: format!("y{physician}"),
                patient_id: format!("p{patient}"),
                visit_id: format!("v{visit}"),
                timestamp,
                term: format!("t{term}"),
            });
        }
    }
    Ok(EventLog { events })
}
