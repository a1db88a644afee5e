//! Q*Text: a composite text quality score.
//!
//! Each metric is first scaled to `[0, 1]` with higher meaning better
//! (perplexity is inverted). The score is a weighted mean of the scaled
//! metrics, each damped by a Gaussian penalty around a target value:
//!
//! ```text
//! Q = Σ w_i M_i exp(−α_i (M_i − μ_i)²) / Σ w_i
//! ```
//!
//! Slot order everywhere in this module is perplexity, coherence, diversity.

mod spearman;
mod tune;

pub use spearman::{mean_ranks, pearson, spearman, SpearmanError};
pub use tune::{align, random_params, tune, AlignedData, Anchor, Granularity, HumanRatings, TrialRecord, TuneConfig, TuneError, TuneResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dominance::{Direction, MetricRecord};

pub const METRIC_NAMES: [&str; 3] = ["perplexity", "coherence", "diversity"];
pub const DIRECTIONS: [Direction; 3] = [Direction::LowerIsBetter, Direction::HigherIsBetter, Direction::HigherIsBetter];

pub const WEIGHT_BOUNDS: (f64, f64) = (0.1, 5.0);
pub const TARGET_BOUNDS: (f64, f64) = (0.0, 1.0);
pub const PENALTY_BOUNDS: (f64, f64) = (0.1, 10.0);

const PUBLISHED: &str = include_str!("../../assets/qtext_params.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QTextError {
    #[error("{metric} is constant ({value}) over the data; min-max scaling is undefined")]
    DegenerateSpread { metric: &'static str, value: f64 },
    #[error("no records to normalize")]
    NoRecords,
    #[error("record ({instance}, {method}) has no finite {metric}")]
    MissingMetric { instance: String, method: String, metric: &'static str },
    #[error("normalized {metric} = {value} is outside [0, 1]")]
    OutOfRangeInput { metric: &'static str, value: f64 },
    #[error("parameter {name}[{slot}] = {value} is outside [{lo}, {hi}]")]
    ParameterOutOfBounds { name: &'static str, slot: usize, value: f64, lo: f64, hi: f64 },
    #[error("invalid parameter document: {0}")]
    InvalidDocument(String),
}

/// Weights, Gaussian targets and penalty strengths, one per metric slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTextParams {
    pub w: [f64; 3],
    pub mu: [f64; 3],
    pub alpha: [f64; 3],
}

impl QTextParams {
    /// Starting point of the tuner.
    pub const INITIAL: QTextParams = QTextParams { w: [1.0; 3], mu: [0.5; 3], alpha: [1.0; 3] };

    /// The shipped tuned parameters.
    pub fn published() -> QTextParams {
        QTextModel::published().params
    }

    pub fn new(w: [f64; 3], mu: [f64; 3], alpha: [f64; 3]) -> Result<Self, QTextError> {
        let p = QTextParams { w, mu, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), QTextError> {
        for (name, vals, (lo, hi)) in [("w", self.w, WEIGHT_BOUNDS), ("mu", self.mu, TARGET_BOUNDS), ("alpha", self.alpha, PENALTY_BOUNDS)] {
            for (slot, &value) in vals.iter().enumerate() {
                if !(lo..=hi).contains(&value) {
                    return Err(QTextError::ParameterOutOfBounds { name, slot, value, lo, hi });
                }
            }
        }
        Ok(())
    }

    /// `[w_1, w_2, w_3, μ_1, μ_2, μ_3, α_1, α_2, α_3]`.
    pub fn to_vector(&self) -> [f64; 9] {
        let mut v = [0.0; 9];
        v[..3].copy_from_slice(&self.w);
        v[3..6].copy_from_slice(&self.mu);
        v[6..].copy_from_slice(&self.alpha);
        v
    }

    pub fn from_vector(v: [f64; 9]) -> Self {
        QTextParams { w: [v[0], v[1], v[2]], mu: [v[3], v[4], v[5]], alpha: [v[6], v[7], v[8]] }
    }

    pub fn lower_bounds() -> [f64; 9] {
        let (w, m, a) = (WEIGHT_BOUNDS.0, TARGET_BOUNDS.0, PENALTY_BOUNDS.0);
        [w, w, w, m, m, m, a, a, a]
    }

    pub fn upper_bounds() -> [f64; 9] {
        let (w, m, a) = (WEIGHT_BOUNDS.1, TARGET_BOUNDS.1, PENALTY_BOUNDS.1);
        [w, w, w, m, m, m, a, a, a]
    }

    /// Clamps every coordinate into its bound.
    pub fn clipped(v: [f64; 9]) -> Self {
        let (lo, hi) = (Self::lower_bounds(), Self::upper_bounds());
        let mut out = v;
        for k in 0..9 {
            out[k] = v[k].clamp(lo[k], hi[k]);
        }
        Self::from_vector(out)
    }

    /// Gaussian penalty of slot `i` at `x`.
    pub fn penalty(&self, i: usize, x: f64) -> f64 {
        (-self.alpha[i] * (x - self.mu[i]).powi(2)).exp()
    }

    /// Score without range checks; the tuner's inner loop.
    pub fn score_unchecked(&self, m: &[f64; 3]) -> f64 {
        let mut num = 0.0;
        for i in 0..3 {
            num += self.w[i] * m[i] * self.penalty(i, m[i]);
        }
        num / (self.w[0] + self.w[1] + self.w[2])
    }
}

/// Q*Text of one normalized triple.
pub fn score(m: &[f64; 3], params: &QTextParams) -> Result<f64, QTextError> {
    for (i, &v) in m.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(QTextError::OutOfRangeInput { metric: METRIC_NAMES[i], value: v });
        }
    }
    Ok(params.score_unchecked(m))
}

/// Partial derivatives of the score with respect to each normalized metric.
pub fn score_gradient(m: &[f64; 3], params: &QTextParams) -> [f64; 3] {
    let total = params.w.iter().sum::<f64>();
    let mut g = [0.0; 3];
    for i in 0..3 {
        let p = params.penalty(i, m[i]);
        let dp = -2.0 * params.alpha[i] * (m[i] - params.mu[i]) * p;
        g[i] = params.w[i] * (p + m[i] * dp) / total;
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRange {
    pub direction: Direction,
    pub min: f64,
    pub max: f64,
}

impl MetricRange {
    fn scale(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        match self.direction {
            Direction::HigherIsBetter => (x - self.min) / span,
            Direction::LowerIsBetter => (self.max - x) / span,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    /// Caller-supplied timestamp; left empty so repeated runs stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

/// Min-max ranges used to scale raw metrics, kept so new records can be
/// scored on the same scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub perplexity: MetricRange,
    pub coherence: MetricRange,
    pub diversity: MetricRange,
    pub records: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRecord {
    pub instance_id: String,
    pub method_id: String,
    /// Perplexity, coherence, diversity, each in `[0, 1]`.
    pub m: [f64; 3],
}

fn raw_triple(r: &MetricRecord) -> Result<[f64; 3], QTextError> {
    let mut out = [0.0; 3];
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        out[i] = r.get(name).filter(|v| v.is_finite()).ok_or_else(|| QTextError::MissingMetric {
            instance: r.instance_id.clone(),
            method: r.method_id.clone(),
            metric: name,
        })?;
    }
    Ok(out)
}

impl NormalizationBounds {
    pub fn ranges(&self) -> [&MetricRange; 3] {
        [&self.perplexity, &self.coherence, &self.diversity]
    }

    /// Computes ranges over `records`.
    pub fn fit(records: &[MetricRecord], dataset: &str) -> Result<Self, QTextError> {
        if records.is_empty() {
            return Err(QTextError::NoRecords);
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for r in records {
            let t = raw_triple(r)?;
            for i in 0..3 {
                lo[i] = lo[i].min(t[i]);
                hi[i] = hi[i].max(t[i]);
            }
        }
        for i in 0..3 {
            if !(hi[i] > lo[i]) {
                return Err(QTextError::DegenerateSpread { metric: METRIC_NAMES[i], value: lo[i] });
            }
        }
        let range = |i: usize| MetricRange { direction: DIRECTIONS[i], min: lo[i], max: hi[i] };
        Ok(NormalizationBounds {
            perplexity: range(0),
            coherence: range(1),
            diversity: range(2),
            records: records.len(),
            provenance: Provenance { dataset: dataset.to_string(), created: None },
        })
    }

    /// Scales one raw triple, clamping into `[0, 1]`. Returns the triple and
    /// how many slots needed clamping.
    pub fn scale(&self, raw: &[f64; 3]) -> ([f64; 3], usize) {
        let mut out = [0.0; 3];
        let mut clamped = 0;
        for (i, range) in self.ranges().iter().enumerate() {
            let v = range.scale(raw[i]);
            out[i] = v.clamp(0.0, 1.0);
            clamped += usize::from(out[i] != v);
        }
        (out, clamped)
    }

    /// Scales records with these stored bounds; values outside the stored
    /// ranges are clamped and counted.
    pub fn apply(&self, records: &[MetricRecord]) -> Result<(Vec<NormalizedRecord>, usize), QTextError> {
        let mut clamps = 0;
        let mut out = Vec::with_capacity(records.len());
        for r in records {
            let (m, c) = self.scale(&raw_triple(r)?);
            clamps += c;
            out.push(NormalizedRecord { instance_id: r.instance_id.clone(), method_id: r.method_id.clone(), m });
        }
        Ok((out, clamps))
    }
}

/// Fits bounds over `records` and scales them.
pub fn normalize(records: &[MetricRecord], dataset: &str) -> Result<(Vec<NormalizedRecord>, NormalizationBounds), QTextError> {
    let bounds = NormalizationBounds::fit(records, dataset)?;
    let (normalized, _) = bounds.apply(records)?;
    Ok((normalized, bounds))
}

/// Parameters together with the bounds they were tuned against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTextModel {
    pub params: QTextParams,
    pub bounds: Option<NormalizationBounds>,
    pub source: String,
}

impl QTextModel {
    pub fn published() -> QTextModel {
        serde_json::from_str(PUBLISHED).expect("shipped parameter file is valid")
    }

    pub fn from_json(text: &str) -> Result<QTextModel, QTextError> {
        let model: QTextModel = serde_json::from_str(text).map_err(|e| QTextError::InvalidDocument(e.to_string()))?;
        model.params.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rec(inst: &str, ppl: f64, coh: f64, div: f64) -> MetricRecord {
        MetricRecord::new(inst, "m", [("perplexity", ppl), ("coherence", coh), ("diversity", div)])
    }

    #[test]
    fn published_parameters_are_shipped_verbatim() {
        let p = QTextParams::published();
        assert_eq!(p.w, [0.586, 0.834, 3.853]);
        assert_eq!(p.mu, [0.458, 0.000, 0.854]);
        assert_eq!(p.alpha, [2.579, 1.496, 7.370]);
        p.validate().unwrap();
    }

    #[test]
    fn score_examples() {
        let p = QTextParams::new([1.0; 3], [0.2, 0.4, 0.6], [3.0; 3]).unwrap();
        assert_abs_diff_eq!(score(&[0.2, 0.4, 0.6], &p).unwrap(), 0.4, epsilon = 1e-15);

        let p = QTextParams::new([0.3, 4.0, 1.0], [0.9, 0.0, 0.1], [9.0, 0.5, 2.0]).unwrap();
        assert_eq!(score(&[0.0, 0.0, 0.0], &p).unwrap(), 0.0);

        let p = QTextParams::published();
        let expected = (0.586 * 0.5 * (-2.579f64 * 0.042f64.powi(2)).exp()
            + 0.834 * 0.5 * (-1.496f64 * 0.25).exp()
            + 3.853 * 0.5 * (-7.370f64 * 0.354f64.powi(2)).exp())
            / (0.586 + 0.834 + 3.853);
        assert_abs_diff_eq!(score(&[0.5; 3], &p).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn score_rejects_unscaled_input() {
        let p = QTextParams::INITIAL;
        assert!(matches!(score(&[0.5, 1.2, 0.5], &p), Err(QTextError::OutOfRangeInput { metric: "coherence", .. })));
        assert!(score(&[-0.1, 0.5, 0.5], &p).is_err());
        assert!(score(&[f64::NAN, 0.5, 0.5], &p).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(QTextParams::new([0.05, 1.0, 1.0], [0.5; 3], [1.0; 3]).is_err());
        assert!(QTextParams::new([1.0; 3], [0.5, 1.1, 0.5], [1.0; 3]).is_err());
        assert!(matches!(
            QTextParams::new([1.0; 3], [0.5; 3], [1.0, 1.0, 10.5]),
            Err(QTextError::ParameterOutOfBounds { name: "alpha", slot: 2, .. })
        ));
        let v = QTextParams::clipped([9.0, -1.0, 2.0, -0.5, 0.5, 1.5, 0.0, 20.0, 5.0]);
        assert_eq!(v.to_vector(), [5.0, 0.1, 2.0, 0.0, 0.5, 1.0, 0.1, 10.0, 5.0]);
    }

    #[test]
    fn normalization_examples() {
        let recs = [rec("a", 2.0, -4.0, 0.1), rec("b", 6.0, -3.0, 0.2), rec("c", 10.0, -2.0, 0.5)];
        let (norm, bounds) = normalize(&recs, "toy").unwrap();
        let ppl: Vec<f64> = norm.iter().map(|r| r.m[0]).collect();
        assert_eq!(ppl, vec![1.0, 0.5, 0.0]);
        let coh: Vec<f64> = norm.iter().map(|r| r.m[1]).collect();
        assert_eq!(coh, vec![0.0, 0.5, 1.0]);
        assert_eq!((bounds.coherence.min, bounds.coherence.max), (-4.0, -2.0));
        assert_eq!(bounds.provenance.dataset, "toy");

        let (out, clamps) = bounds.apply(&[rec("d", 12.0, -1.0, 0.3), rec("e", 4.0, -3.0, 0.3)]).unwrap();
        assert_eq!(out[0].m[0], 0.0);
        assert_eq!(out[0].m[1], 1.0);
        assert_eq!(clamps, 2);
        for (got, want) in out[1].m.iter().zip([0.75, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalization_errors() {
        assert_eq!(normalize(&[], "x").unwrap_err(), QTextError::NoRecords);
        let flat = [rec("a", 2.0, -4.0, 0.3), rec("b", 6.0, -3.0, 0.3)];
        assert_eq!(
            normalize(&flat, "x").unwrap_err(),
            QTextError::DegenerateSpread { metric: "diversity", value: 0.3 }
        );
        let partial = MetricRecord::new("a", "m", [("perplexity", 2.0), ("coherence", -1.0)]);
        assert!(matches!(normalize(&[partial], "x"), Err(QTextError::MissingMetric { metric: "diversity", .. })));
    }

    #[test]
    fn model_document_round_trips() {
        let recs = [rec("a", 2.0, -4.0, 0.1), rec("b", 6.0, -3.0, 0.2)];
        let bounds = NormalizationBounds::fit(&recs, "toy").unwrap();
        let model = QTextModel { params: QTextParams::published(), bounds: Some(bounds), source: "test".into() };
        let back = QTextModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        let bad = model.to_json().replace("3.853", "7.5");
        assert!(matches!(QTextModel::from_json(&bad), Err(QTextError::ParameterOutOfBounds { .. })));
    }

    fn params() -> impl Strategy<Value = QTextParams> {
        (
            prop::array::uniform3(0.1f64..=5.0),
            prop::array::uniform3(0.0f64..=1.0),
            prop::array::uniform3(0.1f64..=10.0),
        )
            .prop_map(|(w, mu, alpha)| QTextParams { w, mu, alpha })
    }

    proptest! {
        #[test]
        fn score_is_a_bounded_mean(m in prop::array::uniform3(0.0f64..=1.0), p in params()) {
            let s = score(&m, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn penalty_peaks_at_target(p in params(), slot in 0usize..3, d1 in 0.001f64..0.5, d2 in 0.001f64..0.5) {
            prop_assert_eq!(p.penalty(slot, p.mu[slot]), 1.0);
            let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assume!(far - near > 1e-6);
            for sign in [-1.0, 1.0] {
                prop_assert!(p.penalty(slot, p.mu[slot] + sign * far) < p.penalty(slot, p.mu[slot] + sign * near));
            }
        }

        #[test]
        fn gradient_matches_finite_differences(m in prop::array::uniform3(0.01f64..0.99), p in params()) {
            let g = score_gradient(&m, &p);
            let h = 1e-6;
            for i in 0..3 {
                let (mut up, mut dn) = (m, m);
                up[i] += h;
                dn[i] -= h;
                let fd = (p.score_unchecked(&up) - p.score_unchecked(&dn)) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() < 1e-6, "slot {} fd {} analytic {}", i, fd, g[i]);
            }
        }
    }
}
