//! The cutoff evaluation protocol, hit rates and hyperparameter sweeps.
//!
//! Everything strictly before a cutoff time trains the models; each
//! sequence that continues past the cutoff contributes one test case whose
//! target is its earliest post-cutoff term. A method configuration scores
//! each test query (physician, patient, last pre-cutoff term), and HR@N is
//! the fraction of test cases whose target lands in the top-N
//! recommendations. Targets outside the training vocabulary stay in the
//! denominator as guaranteed misses.
//!
//! Sweeps evaluate the Cartesian product of valid configurations against
//! models that were built once and shared; only query-time parameters
//! (alpha, the neighbor-set sizes and beta) vary. Per-case accumulation
//! runs in a fixed order, so results are byte-identical regardless of the
//! parallelism used.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{
    build_patient_transitions, build_triplet_store, score_tptcf, score_ypcf,
    PatientTransitionStore, TripletStore,
};
use crate::error::{Error, Result};
use crate::hybrid::{blend, min_max_normalize, recommend_topn, Recommendation, ScoreVector};
use crate::markov::{build_transition_model, score_fomc, TransitionModel};
use crate::sequence::{SequenceSet, TestCase};
use crate::similarity::{
    build_profiles, sim_p2y, sim_y2p, top_similar_patients, NeighborIndex, NeighborOrder,
    ProfileStore,
};

/// The scoring methods under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "foMC")]
    FoMc,
    #[serde(rename = "ypCF")]
    YpCf,
    #[serde(rename = "TptCF")]
    TptCf,
    #[serde(rename = "DmCF-ypCF")]
    DmCfYpCf,
    #[serde(rename = "DmCF-TptCF")]
    DmCfTptCf,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::FoMc => "foMC",
            Method::YpCf => "ypCF",
            Method::TptCf => "TptCF",
            Method::DmCfYpCf => "DmCF-ypCF",
            Method::DmCfTptCf => "DmCF-TptCF",
        }
    }

    pub fn is_dmcf(self) -> bool {
        matches!(self, Method::DmCfYpCf | Method::DmCfTptCf)
    }

    pub fn uses_ypcf(self) -> bool {
        matches!(self, Method::YpCf | Method::DmCfYpCf)
    }

    pub fn uses_tptcf(self) -> bool {
        matches!(self, Method::TptCf | Method::DmCfTptCf)
    }
}

/// One fully-specified method configuration.
///
/// Parameters are present exactly where they apply: `alpha` only for DmCF
/// blends, `sim_order` and `k_y` only for ypCF variants, `beta` only for
/// TptCF variants, `k_p` for every CF-based method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodConfig {
    pub method: Method,
    pub sim_order: Option<NeighborOrder>,
    pub alpha: Option<f64>,
    pub k_p: Option<usize>,
    pub k_y: Option<usize>,
    pub beta: Option<f64>,
}

impl MethodConfig {
    pub fn fomc() -> Self {
        MethodConfig {
            method: Method::FoMc,
            sim_order: None,
            alpha: None,
            k_p: None,
            k_y: None,
            beta: None,
        }
    }

    pub fn ypcf(sim_order: NeighborOrder, k_p: usize, k_y: usize) -> Self {
        MethodConfig {
            method: Method::YpCf,
            sim_order: Some(sim_order),
            alpha: None,
            k_p: Some(k_p),
            k_y: Some(k_y),
            beta: None,
        }
    }

    pub fn tptcf(k_p: usize, beta: f64) -> Self {
        MethodConfig {
            method: Method::TptCf,
            sim_order: None,
            alpha: None,
            k_p: Some(k_p),
            k_y: None,
            beta: Some(beta),
        }
    }

    pub fn dmcf_ypcf(alpha: f64, sim_order: NeighborOrder, k_p: usize, k_y: usize) -> Self {
        MethodConfig {
            alpha: Some(alpha),
            method: Method::DmCfYpCf,
            ..Self::ypcf(sim_order, k_p, k_y)
        }
    }

    pub fn dmcf_tptcf(alpha: f64, k_p: usize, beta: f64) -> Self {
        MethodConfig {
            alpha: Some(alpha),
            method: Method::DmCfTptCf,
            ..Self::tptcf(k_p, beta)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let method = self.method;
        let invalid = |message: String| Err(Error::InvalidConfig(message));
        let require = |name: &str, present: bool, wanted: bool| -> Result<()> {
            if wanted && !present {
                return Err(Error::InvalidConfig(format!(
                    "{} requires {name}",
                    method.label()
                )));
            }
            if !wanted && present {
                return Err(Error::InvalidConfig(format!(
                    "{} does not take {name}",
                    method.label()
                )));
            }
            Ok(())
        };
        require("alpha", self.alpha.is_some(), method.is_dmcf())?;
        require("sim", self.sim_order.is_some(), method.uses_ypcf())?;
        require("kp", self.k_p.is_some(), method != Method::FoMc)?;
        require("ky", self.k_y.is_some(), method.uses_ypcf())?;
        require("beta", self.beta.is_some(), method.uses_tptcf())?;
        if let Some(alpha) = self.alpha {
            if !(0.0..=1.0).contains(&alpha) {
                return invalid(format!("alpha {alpha} not in [0, 1]"));
            }
        }
        if let Some(beta) = self.beta {
            if !(0.0..=1.0).contains(&beta) {
                return invalid(format!("beta {beta} not in [0, 1]"));
            }
        }
        for (name, k) in [("kp", self.k_p), ("ky", self.k_y)] {
            if k == Some(0) {
                return invalid(format!("{name} must be >= 1"));
            }
        }
        Ok(())
    }
}

fn cmp_opt_f64(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

fn cmp_config(a: &MethodConfig, b: &MethodConfig) -> Ordering {
    a.method
        .cmp(&b.method)
        .then_with(|| a.sim_order.cmp(&b.sim_order))
        .then_with(|| cmp_opt_f64(a.alpha, b.alpha))
        .then_with(|| a.k_p.cmp(&b.k_p))
        .then_with(|| a.k_y.cmp(&b.k_y))
        .then_with(|| cmp_opt_f64(a.beta, b.beta))
}

/// Hit rates of one configuration under one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: MethodConfig,
    pub cutoff: i64,
    pub n_test_cases: usize,
    /// N -> HR@N, non-decreasing in N.
    pub hr: BTreeMap<u32, f64>,
}

/// Every model structure the scorers need, built once per training set.
#[derive(Debug, Clone)]
pub struct Models {
    pub transitions: TransitionModel,
    pub profiles: ProfileStore,
    pub neighbor_index: NeighborIndex,
    pub triplets: TripletStore,
    pub patient_transitions: PatientTransitionStore,
    /// Global training frequency per term, the ranking tie-break.
    pub term_freq: BTreeMap<String, u64>,
}

impl Models {
    pub fn build(train: &SequenceSet) -> Self {
        let mut term_freq = BTreeMap::new();
        for seq in &train.sequences {
            for (term, _) in &seq.terms {
                *term_freq.entry(term.clone()).or_insert(0) += 1;
            }
        }
        Models {
            transitions: build_transition_model(train),
            profiles: build_profiles(train),
            neighbor_index: NeighborIndex::build(train),
            triplets: build_triplet_store(train),
            patient_transitions: build_patient_transitions(train),
            term_freq,
        }
    }
}

fn cf_component(
    models: &Models,
    config: &MethodConfig,
    physician: &str,
    patient: &str,
    last_term: &str,
) -> ScoreVector {
    if config.method.uses_ypcf() {
        let k_p = config.k_p.expect("validated");
        let k_y = config.k_y.expect("validated");
        let neighbors = match config.sim_order.expect("validated") {
            NeighborOrder::P2Y => {
                sim_p2y(&models.profiles, &models.neighbor_index, physician, patient, k_p, k_y)
            }
            NeighborOrder::Y2P => {
                sim_y2p(&models.profiles, &models.neighbor_index, physician, patient, k_p, k_y)
            }
        };
        score_ypcf(&models.triplets, &neighbors, physician, patient)
    } else {
        let similar =
            top_similar_patients(&models.profiles, patient, config.k_p.expect("validated"));
        score_tptcf(
            &models.patient_transitions,
            &models.profiles,
            last_term,
            &similar,
            config.beta.expect("validated"),
        )
    }
}

/// Scores one (physician, patient, last-term) query under `config` and
/// ranks the top `n` terms.
///
/// `normalize` min-max rescales each component to [0, 1] before a DmCF
/// blend; it is ignored by single-component methods and off throughout the
/// evaluation protocol, which blends raw scores.
pub fn score_query(
    models: &Models,
    config: &MethodConfig,
    physician: &str,
    patient: &str,
    last_term: &str,
    n: usize,
    normalize: bool,
) -> Recommendation {
    let scores = match config.method {
        Method::FoMc => score_fomc(&models.transitions, last_term),
        Method::YpCf | Method::TptCf => cf_component(models, config, physician, patient, last_term),
        Method::DmCfYpCf | Method::DmCfTptCf => {
            let mut dynamics = score_fomc(&models.transitions, last_term);
            let mut cf = cf_component(models, config, physician, patient, last_term);
            if normalize {
                dynamics = min_max_normalize(&dynamics);
                cf = min_max_normalize(&cf);
            }
            blend(config.alpha.expect("validated"), &dynamics, &cf)
        }
    };
    recommend_topn(&scores, n, &models.term_freq)
}

/// Scores one test case under `config` with raw (unnormalized) blending.
pub fn score_case(models: &Models, config: &MethodConfig, case: &TestCase, n: usize) -> Recommendation {
    score_query(
        models,
        config,
        &case.physician_id,
        &case.patient_id,
        case.last_term(),
        n,
        false,
    )
}

/// Fraction of results whose target appears within the first `n` ranks.
pub fn hit_rate_at_n(results: &[(Recommendation, String)], n: usize) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::NoTestCases);
    }
    let hits = results
        .iter()
        .filter(|(rec, target)| matches!(rec.rank_of(target), Some(rank) if rank <= n))
        .count();
    Ok(hits as f64 / results.len() as f64)
}

/// Evaluates one configuration against prebuilt models.
pub fn evaluate_with_models(
    models: &Models,
    config: &MethodConfig,
    tests: &[TestCase],
    cutoff: i64,
    ns: &[u32],
) -> Result<MetricsReport> {
    config.validate()?;
    if tests.is_empty() {
        return Err(Error::NoTestCases);
    }
    let ns: BTreeSet<u32> = ns.iter().copied().filter(|&n| n >= 1).collect();
    if ns.is_empty() {
        return Err(Error::InvalidConfig("no N values given".into()));
    }
    let max_n = *ns.iter().last().unwrap() as usize;
    let mut hits: BTreeMap<u32, u64> = ns.iter().map(|&n| (n, 0)).collect();
    for case in tests {
        let recommendation = score_case(models, config, case, max_n);
        if let Some(rank) = recommendation.rank_of(&case.target) {
            for (&n, count) in hits.iter_mut() {
                if rank <= n as usize {
                    *count += 1;
                }
            }
        }
    }
    Ok(MetricsReport {
        config: config.clone(),
        cutoff,
        n_test_cases: tests.len(),
        hr: hits
            .into_iter()
            .map(|(n, count)| (n, count as f64 / tests.len() as f64))
            .collect(),
    })
}

/// Builds all models from `train` and evaluates one configuration.
pub fn evaluate(
    config: &MethodConfig,
    train: &SequenceSet,
    tests: &[TestCase],
    cutoff: i64,
    ns: &[u32],
) -> Result<MetricsReport> {
    config.validate()?;
    let models = Models::build(train);
    evaluate_with_models(&models, config, tests, cutoff, ns)
}

/// Axes of a hyperparameter sweep. Each method in `methods` is expanded
/// against exactly the axes it takes.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub methods: Vec<Method>,
    pub sim_orders: Vec<NeighborOrder>,
    pub alphas: Vec<f64>,
    pub k_ps: Vec<usize>,
    pub k_ys: Vec<usize>,
    pub betas: Vec<f64>,
}

/// Expands a grid into the sorted list of valid configurations.
pub fn expand_grid(grid: &SweepGrid) -> Result<Vec<MethodConfig>> {
    let mut methods = grid.methods.clone();
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(Error::InvalidConfig("sweep grid names no methods".into()));
    }
    let mut sim_orders = grid.sim_orders.clone();
    sim_orders.sort();
    sim_orders.dedup();
    let dedup_f64 = |values: &[f64]| {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let alphas = dedup_f64(&grid.alphas);
    let betas = dedup_f64(&grid.betas);
    let mut k_ps = grid.k_ps.clone();
    k_ps.sort();
    k_ps.dedup();
    let mut k_ys = grid.k_ys.clone();
    k_ys.sort();
    k_ys.dedup();

    let need = |axis: &str, ok: bool, method: Method| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "method {} requires {axis} values",
                method.label()
            )))
        }
    };

    let mut configs = Vec::new();
    for &method in &methods {
        if method != Method::FoMc {
            need("kp", !k_ps.is_empty(), method)?;
        }
        if method.uses_ypcf() {
            need("sim", !sim_orders.is_empty(), method)?;
            need("ky", !k_ys.is_empty(), method)?;
        }
        if method.uses_tptcf() {
            need("beta", !betas.is_empty(), method)?;
        }
        if method.is_dmcf() {
            need("alpha", !alphas.is_empty(), method)?;
        }
        match method {
            Method::FoMc => configs.push(MethodConfig::fomc()),
            Method::YpCf => {
                for &sim in &sim_orders {
                    for &k_p in &k_ps {
                        for &k_y in &k_ys {
                            configs.push(MethodConfig::ypcf(sim, k_p, k_y));
                        }
                    }
                }
            }
            Method::TptCf => {
                for &k_p in &k_ps {
                    for &beta in &betas {
                        configs.push(MethodConfig::tptcf(k_p, beta));
                    }
                }
            }
            Method::DmCfYpCf => {
                for &alpha in &alphas {
                    for &sim in &sim_orders {
                        for &k_p in &k_ps {
                            for &k_y in &k_ys {
                                configs.push(MethodConfig::dmcf_ypcf(alpha, sim, k_p, k_y));
                            }
                        }
                    }
                }
            }
            Method::DmCfTptCf => {
                for &alpha in &alphas {
                    for &k_p in &k_ps {
                        for &beta in &betas {
                            configs.push(MethodConfig::dmcf_tptcf(alpha, k_p, beta));
                        }
                    }
                }
            }
        }
    }
    for config in &configs {
        config.validate()?;
    }
    configs.sort_by(cmp_config);
    Ok(configs)
}

/// Evaluates every configuration of `grid`, optionally in parallel.
///
/// Reports come back sorted by (method, sim, alpha, kp, ky, beta). The
/// thread count never changes values or order, only wall-clock time.
pub fn sweep(
    grid: &SweepGrid,
    train: &SequenceSet,
    tests: &[TestCase],
    cutoff: i64,
    ns: &[u32],
    jobs: usize,
) -> Result<Vec<MetricsReport>> {
    let configs = expand_grid(grid)?;
    let models = Models::build(train);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|config| evaluate_with_models(&models, config, tests, cutoff, ns))
            .collect()
    })
}

/// The best report per (method, sim order, N): the sweep summary that
/// mirrors the bolding convention of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestEntry {
    pub method: Method,
    pub sim_order: Option<NeighborOrder>,
    pub n: u32,
    pub report_index: usize,
    pub hit_rate: f64,
}

pub fn best_per_method(reports: &[MetricsReport]) -> Vec<BestEntry> {
    let mut groups: BTreeMap<(Method, Option<NeighborOrder>), Vec<usize>> = BTreeMap::new();
    for (idx, report) in reports.iter().enumerate() {
        groups
            .entry((report.config.method, report.config.sim_order))
            .or_default()
            .push(idx);
    }
    let mut best = Vec::new();
    for ((method, sim_order), indices) in groups {
        let ns: BTreeSet<u32> = indices
            .iter()
            .flat_map(|&i| reports[i].hr.keys().copied())
            .collect();
        for n in ns {
            let mut winner: Option<(usize, f64)> = None;
            for &idx in &indices {
                if let Some(&hr) = reports[idx].hr.get(&n) {
                    if winner.is_none_or(|(_, best_hr)| hr > best_hr) {
                        winner = Some((idx, hr));
                    }
                }
            }
            if let Some((report_index, hit_rate)) = winner {
                best.push(BestEntry {
                    method,
                    sim_order,
                    n,
                    report_index,
                    hit_rate,
                });
            }
        }
    }
    best
}

fn sim_label(order: Option<NeighborOrder>) -> &'static str {
    match order {
        Some(NeighborOrder::P2Y) => "simP2Y",
        Some(NeighborOrder::Y2P) => "simY2P",
        None => "-",
    }
}

fn opt_cell<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Renders reports as a TSV table: one row per configuration, hit rates
/// rounded to three decimals.
pub fn reports_to_tsv(reports: &[MetricsReport]) -> String {
    let ns: BTreeSet<u32> = reports
        .iter()
        .flat_map(|r| r.hr.keys().copied())
        .collect();
    let mut out = String::from("method\tsim\talpha\tkp\tky\tbeta");
    for n in &ns {
        let _ = write!(out, "\tHR@{n}");
    }
    out.push('\n');
    for report in reports {
        let config = &report.config;
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            config.method.label(),
            sim_label(config.sim_order),
            opt_cell(config.alpha),
            opt_cell(config.k_p),
            opt_cell(config.k_y),
            opt_cell(config.beta),
        );
        for n in &ns {
            match report.hr.get(n) {
                Some(hr) => {
                    let _ = write!(out, "\t{hr:.3}");
                }
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}
