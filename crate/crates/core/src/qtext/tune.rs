//! Seeded random local search over the nine Q*Text parameters.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spearman::{spearman, SpearmanError};
use super::{NormalizedRecord, QTextParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("{count} rating keys have no scored counterpart, first {first:?}")]
    KeyMisalignment { count: usize, first: String },
    #[error("ratings are constant or fewer than 3 align with scored items")]
    DegenerateRatings,
    #[error("invalid tuning configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Spearman(#[from] SpearmanError),
}

/// Human quality ratings keyed by record (`instance_id:method_id`) or by
/// method id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanRatings {
    pub ratings: BTreeMap<String, f64>,
}

impl HumanRatings {
    pub fn record_key(instance_id: &str, method_id: &str) -> String {
        format!("{instance_id}:{method_id}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One rating per generation; each rating pairs with that record's score.
    #[default]
    Record,
    /// One rating per method; each pairs with the method's mean score.
    Method,
}

/// Rating-aligned groups of normalized triples. A group's score is the mean
/// Q*Text of its members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedData {
    pub keys: Vec<String>,
    pub groups: Vec<Vec<[f64; 3]>>,
    pub ratings: Vec<f64>,
    /// Scored groups without a rating; left out of the correlation.
    pub unrated: usize,
}

impl AlignedData {
    /// One group per triple, in order.
    pub fn from_pairs(triples: &[[f64; 3]], ratings: &[f64]) -> Self {
        AlignedData {
            keys: (0..triples.len()).map(|k| k.to_string()).collect(),
            groups: triples.iter().map(|t| vec![*t]).collect(),
            ratings: ratings.to_vec(),
            unrated: 0,
        }
    }

    pub fn scores(&self, params: &QTextParams) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|m| params.score_unchecked(m)).sum::<f64>() / g.len() as f64)
            .collect()
    }

    pub fn rho(&self, params: &QTextParams) -> Result<f64, SpearmanError> {
        spearman(&self.scores(params), &self.ratings)
    }
}

/// Pairs scored records with ratings. Every rating key must name a scored
/// record (or method); scored items without a rating are dropped and
/// counted in [`AlignedData::unrated`].
pub fn align(records: &[NormalizedRecord], ratings: &HumanRatings, granularity: Granularity) -> Result<AlignedData, TuneError> {
    let mut groups: BTreeMap<String, Vec<[f64; 3]>> = BTreeMap::new();
    for r in records {
        let key = match granularity {
            Granularity::Record => HumanRatings::record_key(&r.instance_id, &r.method_id),
            Granularity::Method => r.method_id.clone(),
        };
        groups.entry(key).or_default().push(r.m);
    }
    let missing: BTreeSet<&String> = ratings.ratings.keys().filter(|k| !groups.contains_key(*k)).collect();
    if let Some(first) = missing.iter().next() {
        return Err(TuneError::KeyMisalignment { count: missing.len(), first: (*first).clone() });
    }
    let mut out = AlignedData { keys: Vec::new(), groups: Vec::new(), ratings: Vec::new(), unrated: 0 };
    for (key, g) in groups {
        match ratings.ratings.get(&key) {
            Some(&h) => {
                out.keys.push(key);
                out.groups.push(g);
                out.ratings.push(h);
            }
            None => out.unrated += 1,
        }
    }
    let constant = out.ratings.windows(2).all(|w| w[0] == w[1]);
    if out.ratings.len() < 3 || constant || out.ratings.iter().any(|h| !h.is_finite()) {
        return Err(TuneError::DegenerateRatings);
    }
    Ok(out)
}

/// Point the Gaussian proposals are centered on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Hill climbing: perturb the best parameters found so far.
    #[default]
    Incumbent,
    /// Perturb the fixed starting point on every trial.
    Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    pub max_trials: usize,
    pub perturbation_scale: f64,
    pub seed: u64,
    pub restarts: usize,
    pub anchor: Anchor,
    /// Stop a restart once its correlation reaches this value.
    pub target_rho: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig { max_trials: 10_000, perturbation_scale: 0.1, seed: 0, restarts: 1, anchor: Anchor::Incumbent, target_rho: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub restart: usize,
    /// 0 is the starting point; proposals count from 1.
    pub trial: usize,
    /// `None` when the proposal's scores are constant.
    pub rho: Option<f64>,
    pub best_rho: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: QTextParams,
    pub rho: f64,
    /// Restart that produced `params`.
    pub best_restart: usize,
    pub trace: Vec<TrialRecord>,
}

struct Run {
    params: QTextParams,
    rho: f64,
    trace: Vec<TrialRecord>,
}

fn run_restart(data: &AlignedData, cfg: &TuneConfig, restart: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let noise = Normal::new(0.0, cfg.perturbation_scale).expect("scale validated");
    let origin = QTextParams::INITIAL;
    let mut best = origin;
    // constant scores cannot be ranked against ratings; treat as no correlation
    let start = data.rho(&origin).ok();
    let mut best_rho = start.unwrap_or(f64::NEG_INFINITY);
    let mut trace = vec![TrialRecord { restart, trial: 0, rho: start, best_rho, accepted: true }];
    for trial in 1..=cfg.max_trials {
        if best_rho >= cfg.target_rho {
            break;
        }
        let center = match cfg.anchor {
            Anchor::Incumbent => best.to_vector(),
            Anchor::Origin => origin.to_vector(),
        };
        let mut proposal = center;
        for v in &mut proposal {
            *v += noise.sample(&mut rng);
        }
        let candidate = QTextParams::clipped(proposal);
        let rho = data.rho(&candidate).ok();
        let accepted = matches!(rho, Some(r) if r > best_rho);
        if accepted {
            best = candidate;
            best_rho = rho.unwrap();
        }
        trace.push(TrialRecord { restart, trial, rho, best_rho, accepted });
    }
    Run { params: best, rho: best_rho, trace }
}

/// Maximizes Spearman correlation between group scores and ratings.
///
/// Each restart starts from [`QTextParams::INITIAL`] with its own random
/// stream derived from the seed. Restarts run in parallel; the best
/// correlation wins, with ties going to the lower restart index.
pub fn tune(data: &AlignedData, cfg: &TuneConfig) -> Result<TuneResult, TuneError> {
    if cfg.max_trials == 0 {
        return Err(TuneError::InvalidConfig("max_trials must be at least 1"));
    }
    if !(cfg.perturbation_scale > 0.0 && cfg.perturbation_scale.is_finite()) {
        return Err(TuneError::InvalidConfig("perturbation_scale must be positive"));
    }
    if cfg.restarts == 0 {
        return Err(TuneError::InvalidConfig("restarts must be at least 1"));
    }
    if data.groups.len() != data.ratings.len() {
        return Err(SpearmanError::LengthMismatch(data.groups.len(), data.ratings.len()).into());
    }
    if data.ratings.len() < 3 || data.ratings.windows(2).all(|w| w[0] == w[1]) {
        return Err(TuneError::DegenerateRatings);
    }
    let runs: Vec<Run> = (0..cfg.restarts).into_par_iter().map(|r| run_restart(data, cfg, r)).collect();
    let mut best_restart = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.rho > runs[best_restart].rho {
            best_restart = k;
        }
    }
    let params = runs[best_restart].params;
    let rho = runs[best_restart].rho;
    let trace = runs.into_iter().flat_map(|r| r.trace).collect();
    Ok(TuneResult { params, rho, best_restart, trace })
}

/// Uniform draw inside the parameter box; used for synthetic fixtures.
pub fn random_params<R: Rng>(rng: &mut R) -> QTextParams {
    let (lo, hi) = (QTextParams::lower_bounds(), QTextParams::upper_bounds());
    let mut v = [0.0; 9];
    for k in 0..9 {
        v[k] = rng.random_range(lo[k]..=hi[k]);
    }
    QTextParams::from_vector(v)
}
