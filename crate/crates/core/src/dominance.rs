//! Pareto dominance between decoding methods on a single instance, the
//! per-instance partial orders it induces, and pairwise tallies across
//! instances.
//!
//! Method `i` dominates `j` on an instance iff it is at least as good on every
//! metric (respecting each metric's direction) and strictly better on one.
//! Exact equality on all metrics is indifference; conflicting metrics are
//! incomparability. Tallies pool both as ties.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::{Elements, Poset, PosetError, Relation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DominanceError {
    #[error("records belong to different instances ({0:?} vs {1:?})")]
    MismatchedInstance(String, String),
    #[error("record for method {method:?} on instance {instance:?} does not carry exactly the configured metrics")]
    MismatchedMetrics { instance: String, method: String },
    #[error("duplicate record for method {method:?} on instance {instance:?}")]
    DuplicateRecord { instance: String, method: String },
    #[error("at least two methods are needed to build an order, got {0}")]
    TooFewMethods(usize),
    #[error("method {method:?} has no record on instance {instance:?}")]
    MissingMethod { instance: String, method: String },
    #[error("dominance edges on instance {instance:?} do not form a partial order: {source}")]
    NotAPartialOrder { instance: String, source: PosetError },
    #[error("duplicate metric name {0:?}")]
    DuplicateMetric(String),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub direction: Direction,
}

/// The configured metrics, each with a direction. Names are unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MetricSpec>", into = "Vec<MetricSpec>")]
pub struct MetricSet(Vec<MetricSpec>);

impl MetricSet {
    pub fn new(specs: Vec<MetricSpec>) -> Result<Self, DominanceError> {
        let mut seen = BTreeSet::new();
        for s in &specs {
            if !seen.insert(s.name.as_str()) {
                return Err(DominanceError::DuplicateMetric(s.name.clone()));
            }
        }
        Ok(MetricSet(specs))
    }

    /// coherence and diversity higher-is-better, perplexity lower-is-better.
    pub fn text_default() -> Self {
        let spec = |name: &str, direction| MetricSpec { name: name.to_string(), direction };
        MetricSet(vec![
            spec("coherence", Direction::HigherIsBetter),
            spec("diversity", Direction::HigherIsBetter),
            spec("perplexity", Direction::LowerIsBetter),
        ])
    }

    pub fn specs(&self) -> &[MetricSpec] {
        &self.0
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|s| s.name.as_str())
    }

    pub fn direction_of(&self, name: &str) -> Option<Direction> {
        self.0.iter().find(|s| s.name == name).map(|s| s.direction)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<MetricSpec>> for MetricSet {
    type Error = DominanceError;
    fn try_from(v: Vec<MetricSpec>) -> Result<Self, Self::Error> {
        MetricSet::new(v)
    }
}

impl From<MetricSet> for Vec<MetricSpec> {
    fn from(m: MetricSet) -> Self {
        m.0
    }
}

/// One (instance, method) row of metric values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub instance_id: String,
    pub method_id: String,
    pub values: BTreeMap<String, f64>,
}

impl MetricRecord {
    pub fn new<'a>(
        instance_id: impl Into<String>,
        method_id: impl Into<String>,
        values: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Self {
        MetricRecord {
            instance_id: instance_id.into(),
            method_id: method_id.into(),
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        self.values.get(metric).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    IWins,
    JWins,
    Indifferent,
    Incomparable,
}

impl Outcome {
    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::IWins => Outcome::JWins,
            Outcome::JWins => Outcome::IWins,
            o => o,
        }
    }
}

/// Pairwise dominance under a metric set and an equality tolerance.
#[derive(Clone, Debug)]
pub struct Comparator {
    metrics: MetricSet,
    eq_tolerance: f64,
}

impl Comparator {
    pub fn new(metrics: MetricSet) -> Self {
        Comparator { metrics, eq_tolerance: 0.0 }
    }

    /// Values within `tol` of each other count as equal.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.eq_tolerance = tol.max(0.0);
        self
    }

    pub fn eq_tolerance(&self) -> f64 {
        self.eq_tolerance
    }

    pub fn metrics(&self) -> &MetricSet {
        &self.metrics
    }

    fn check_metrics(&self, r: &MetricRecord) -> Result<(), DominanceError> {
        let exact = r.values.len() == self.metrics.len()
            && self.metrics.names().all(|n| r.values.get(n).is_some_and(|v| v.is_finite()));
        if exact {
            Ok(())
        } else {
            Err(DominanceError::MismatchedMetrics {
                instance: r.instance_id.clone(),
                method: r.method_id.clone(),
            })
        }
    }

    pub fn compare(&self, a: &MetricRecord, b: &MetricRecord) -> Result<Outcome, DominanceError> {
        if a.instance_id != b.instance_id {
            return Err(DominanceError::MismatchedInstance(a.instance_id.clone(), b.instance_id.clone()));
        }
        self.check_metrics(a)?;
        self.check_metrics(b)?;
        Ok(self.compare_unchecked(a, b))
    }

    fn compare_unchecked(&self, a: &MetricRecord, b: &MetricRecord) -> Outcome {
        let (mut a_better, mut b_better) = (false, false);
        for spec in self.metrics.specs() {
            let (x, y) = (a.values[&spec.name], b.values[&spec.name]);
            if (x - y).abs() <= self.eq_tolerance {
                continue;
            }
            let a_higher = x > y;
            match (spec.direction, a_higher) {
                (Direction::HigherIsBetter, true) | (Direction::LowerIsBetter, false) => a_better = true,
                _ => b_better = true,
            }
        }
        match (a_better, b_better) {
            (true, false) => Outcome::IWins,
            (false, true) => Outcome::JWins,
            (false, false) => Outcome::Indifferent,
            (true, true) => Outcome::Incomparable,
        }
    }

    /// Partial order of the methods on one instance, over a roster of the
    /// records' method ids in sorted order.
    pub fn instance_poset(&self, records: &[&MetricRecord]) -> Result<Poset, DominanceError> {
        let methods: BTreeSet<&str> = records.iter().map(|r| r.method_id.as_str()).collect();
        let elements = Elements::new(methods)?;
        self.instance_poset_on(&elements, records)
    }

    /// Partial order over a fixed roster; every roster member must have
    /// exactly one record, and records for other methods are ignored.
    ///
    /// Dominance edges are transitively closed and then checked for
    /// antisymmetry, which can fail when a nonzero equality tolerance makes
    /// raw dominance intransitive.
    pub fn instance_poset_on(
        &self,
        elements: &Elements,
        records: &[&MetricRecord],
    ) -> Result<Poset, DominanceError> {
        if elements.len() < 2 {
            return Err(DominanceError::TooFewMethods(elements.len()));
        }
        let instance = records.first().map(|r| r.instance_id.clone()).unwrap_or_default();
        let mut slots: Vec<Option<&MetricRecord>> = vec![None; elements.len()];
        for r in records {
            if r.instance_id != instance {
                return Err(DominanceError::MismatchedInstance(instance, r.instance_id.clone()));
            }
            let Some(i) = elements.index_of(&r.method_id) else { continue };
            if slots[i].replace(r).is_some() {
                return Err(DominanceError::DuplicateRecord { instance, method: r.method_id.clone() });
            }
            self.check_metrics(r)?;
        }
        let rows: Vec<&MetricRecord> = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| DominanceError::MissingMethod {
                    instance: instance.clone(),
                    method: elements.name(i).to_string(),
                })
            })
            .collect::<Result<_, _>>()?;

        let mut rel = Relation::identity(elements.clone());
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                match self.compare_unchecked(rows[i], rows[j]) {
                    Outcome::IWins => rel.insert(i, j),
                    Outcome::JWins => rel.insert(j, i),
                    _ => {}
                }
            }
        }
        rel.transitive_closure()
            .into_poset()
            .map_err(|source| DominanceError::NotAPartialOrder { instance, source })
    }

    /// Pairwise win/win/tie counts over every instance where both methods
    /// have a record, sorted by method pair.
    pub fn tally(&self, records: &[MetricRecord]) -> Result<Vec<ComparisonTally>, DominanceError> {
        let by_instance = group_by_instance(records)?;
        for r in records {
            self.check_metrics(r)?;
        }
        let merged = by_instance
            .par_iter()
            .map(|(_, rows)| {
                let mut local: BTreeMap<(&str, &str), ComparisonTally> = BTreeMap::new();
                for (x, a) in rows.iter().enumerate() {
                    for b in &rows[x + 1..] {
                        // rows are sorted by method id, so `a` is the canonical i
                        let t = local
                            .entry((a.method_id.as_str(), b.method_id.as_str()))
                            .or_insert_with(|| ComparisonTally::new(&a.method_id, &b.method_id, 0, 0, 0));
                        t.record(self.compare_unchecked(a, b));
                    }
                }
                local
            })
            .reduce(BTreeMap::new, |mut acc, other| {
                for (k, t) in other {
                    acc.entry(k)
                        .and_modify(|e: &mut ComparisonTally| e.merge(&t))
                        .or_insert(t);
                }
                acc
            });
        Ok(merged.into_values().collect())
    }
}

/// Records grouped by instance, each group sorted by method id. Rejects
/// duplicate (instance, method) rows.
pub fn group_by_instance(records: &[MetricRecord]) -> Result<BTreeMap<&str, Vec<&MetricRecord>>, DominanceError> {
    let mut groups: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.instance_id.as_str()).or_default().push(r);
    }
    for rows in groups.values_mut() {
        rows.sort_by(|a, b| a.method_id.cmp(&b.method_id));
        if let Some(w) = rows.windows(2).find(|w| w[0].method_id == w[1].method_id) {
            return Err(DominanceError::DuplicateRecord {
                instance: w[0].instance_id.clone(),
                method: w[0].method_id.clone(),
            });
        }
    }
    Ok(groups)
}

/// Outcome counts for one unordered method pair, `method_i < method_j`.
/// `ties` pools indifference and incomparability; `indifferent` is the
/// part of `ties` where all metrics were equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTally {
    pub method_i: String,
    pub method_j: String,
    pub wins_i: u64,
    pub wins_j: u64,
    pub ties: u64,
    #[serde(default)]
    pub indifferent: u64,
}

impl ComparisonTally {
    pub fn new(i: &str, j: &str, wins_i: u64, wins_j: u64, ties: u64) -> Self {
        ComparisonTally {
            method_i: i.to_string(),
            method_j: j.to_string(),
            wins_i,
            wins_j,
            ties,
            indifferent: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.wins_i + self.wins_j + self.ties
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::IWins => self.wins_i += 1,
            Outcome::JWins => self.wins_j += 1,
            Outcome::Indifferent => {
                self.ties += 1;
                self.indifferent += 1;
            }
            Outcome::Incomparable => self.ties += 1,
        }
    }

    fn merge(&mut self, other: &ComparisonTally) {
        self.wins_i += other.wins_i;
        self.wins_j += other.wins_j;
        self.ties += other.ties;
        self.indifferent += other.indifferent;
    }

    /// The same counts with the roles of `i` and `j` exchanged.
    pub fn swapped(&self) -> ComparisonTally {
        ComparisonTally {
            method_i: self.method_j.clone(),
            method_j: self.method_i.clone(),
            wins_i: self.wins_j,
            wins_j: self.wins_i,
            ties: self.ties,
            indifferent: self.indifferent,
        }
    }
}

/// Strict-dominance count for an ordered pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedCount {
    pub winner: String,
    pub loser: String,
    pub count: u64,
    pub instances: u64,
}

/// Aggregate dominance structure across instances.
///
/// Counts are given over ordered pairs (each unordered pair contributes two
/// entries) as well as unordered pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceSummary {
    pub methods: usize,
    pub unordered_pairs: usize,
    pub ordered_pairs: usize,
    pub threshold: f64,
    /// Ordered pairs where the winner dominates on at least `threshold` of
    /// the co-observed instances.
    pub at_least_threshold: usize,
    /// Ordered pairs where the first method never strictly dominates.
    pub never_dominates: usize,
    /// Ordered pairs where the winner dominates on every co-observed instance.
    pub full_dominance: Vec<OrderedCount>,
    pub ordered: Vec<OrderedCount>,
}

impl DominanceSummary {
    pub fn from_tallies(tallies: &[ComparisonTally], threshold: f64) -> Self {
        let mut methods = BTreeSet::new();
        let mut ordered = Vec::with_capacity(tallies.len() * 2);
        for t in tallies {
            methods.insert(t.method_i.as_str());
            methods.insert(t.method_j.as_str());
            let n = t.total();
            ordered.push(OrderedCount { winner: t.method_i.clone(), loser: t.method_j.clone(), count: t.wins_i, instances: n });
            ordered.push(OrderedCount { winner: t.method_j.clone(), loser: t.method_i.clone(), count: t.wins_j, instances: n });
        }
        ordered.sort_by(|a, b| (&a.winner, &a.loser).cmp(&(&b.winner, &b.loser)));
        let at_least_threshold = ordered
            .iter()
            .filter(|o| o.instances > 0 && o.count as f64 >= threshold * o.instances as f64)
            .count();
        let never_dominates = ordered.iter().filter(|o| o.count == 0).count();
        let full_dominance = ordered
            .iter()
            .filter(|o| o.instances > 0 && o.count == o.instances)
            .cloned()
            .collect();
        DominanceSummary {
            methods: methods.len(),
            unordered_pairs: tallies.len(),
            ordered_pairs: ordered.len(),
            threshold,
            at_least_threshold,
            never_dominates,
            full_dominance,
            ordered,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(inst: &str, method: &str, c: f64, d: f64, p: f64) -> MetricRecord {
        MetricRecord::new(inst, method, [("coherence", c), ("diversity", d), ("perplexity", p)])
    }

    fn cmp() -> Comparator {
        Comparator::new(MetricSet::text_default())
    }

    #[test]
    fn compare_examples() {
        let a = rec("x", "a", -1.0, 0.5, 10.0);
        let b = rec("x", "b", -2.0, 0.5, 10.0);
        assert_eq!(cmp().compare(&a, &b).unwrap(), Outcome::IWins);
        assert_eq!(cmp().compare(&b, &a).unwrap(), Outcome::JWins);
        assert_eq!(cmp().compare(&a, &a.clone()).unwrap(), Outcome::Indifferent);
        let c = rec("x", "c", -2.0, 0.9, 10.0);
        assert_eq!(cmp().compare(&a, &c).unwrap(), Outcome::Incomparable);
        // lower perplexity is better
        let d = rec("x", "d", -1.0, 0.5, 12.0);
        assert_eq!(cmp().compare(&a, &d).unwrap(), Outcome::IWins);
    }

    #[test]
    fn compare_errors() {
        let a = rec("x", "a", -1.0, 0.5, 10.0);
        let b = rec("y", "b", -2.0, 0.5, 10.0);
        assert!(matches!(cmp().compare(&a, &b), Err(DominanceError::MismatchedInstance(..))));
        let short = MetricRecord::new("x", "s", [("coherence", -1.0)]);
        assert!(matches!(cmp().compare(&a, &short), Err(DominanceError::MismatchedMetrics { .. })));
        let nan = rec("x", "n", f64::NAN, 0.5, 10.0);
        assert!(matches!(cmp().compare(&a, &nan), Err(DominanceError::MismatchedMetrics { .. })));
    }

    #[test]
    fn tolerance_treats_close_values_as_equal() {
        let a = rec("x", "a", -1.0, 0.5, 10.0);
        let b = rec("x", "b", -1.0 - 1e-9, 0.5, 10.0);
        assert_eq!(cmp().compare(&a, &b).unwrap(), Outcome::IWins);
        assert_eq!(cmp().with_tolerance(1e-6).compare(&a, &b).unwrap(), Outcome::Indifferent);
    }

    #[test]
    fn instance_poset_examples() {
        let a = rec("x", "a", -1.0, 0.5, 10.0);
        let b = rec("x", "b", -2.0, 0.5, 10.0);
        let p = cmp().instance_poset(&[&a, &b]).unwrap();
        assert_eq!(p.strict_pairs(), vec![(0, 1)]);

        // all pairs incomparable: coherence rises while diversity falls
        let rows: Vec<MetricRecord> = (0..4)
            .map(|k| rec("x", &format!("m{k}"), k as f64, -(k as f64), 5.0))
            .collect();
        let refs: Vec<&MetricRecord> = rows.iter().collect();
        assert!(cmp().instance_poset(&refs).unwrap().strict_pairs().is_empty());

        let chain = [rec("x", "a", 3.0, 3.0, 1.0), rec("x", "b", 2.0, 2.0, 2.0), rec("x", "c", 1.0, 1.0, 3.0)];
        let refs: Vec<&MetricRecord> = chain.iter().collect();
        let p = cmp().instance_poset(&refs).unwrap();
        assert_eq!(p.strict_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn instance_poset_errors() {
        let a = rec("x", "a", -1.0, 0.5, 10.0);
        assert!(matches!(cmp().instance_poset(&[&a]), Err(DominanceError::TooFewMethods(1))));
        let dup = a.clone();
        let b = rec("x", "b", -1.0, 0.5, 10.0);
        let els = Elements::new(["a", "b"]).unwrap();
        assert!(matches!(
            cmp().instance_poset_on(&els, &[&a, &dup, &b]),
            Err(DominanceError::DuplicateRecord { .. })
        ));
        let els = Elements::new(["a", "b", "c"]).unwrap();
        assert!(matches!(
            cmp().instance_poset_on(&els, &[&a, &b]),
            Err(DominanceError::MissingMethod { .. })
        ));
    }

    #[test]
    fn tolerance_induced_cycle_is_reported() {
        // each metric separates exactly one pair beyond the tolerance:
        // coherence a > c, diversity b > a, perplexity c > b
        let c8r = cmp().with_tolerance(1.0);
        let a = rec("x", "a", 1.6, 0.0, -0.8);
        let b = rec("x", "b", 0.8, 1.6, 0.0);
        let c = rec("x", "c", 0.0, 0.8, -1.6);
        assert_eq!(c8r.compare(&a, &c).unwrap(), Outcome::IWins);
        assert_eq!(c8r.compare(&b, &a).unwrap(), Outcome::IWins);
        assert_eq!(c8r.compare(&c, &b).unwrap(), Outcome::IWins);
        assert!(matches!(
            c8r.instance_poset(&[&a, &b, &c]),
            Err(DominanceError::NotAPartialOrder { .. })
        ));
        // exact comparison of the same rows is incomparable everywhere
        assert!(cmp().instance_poset(&[&a, &b, &c]).unwrap().strict_pairs().is_empty());
    }

    #[test]
    fn tally_examples() {
        let mut rows = Vec::new();
        for inst in ["1", "2", "3"] {
            rows.push(rec(inst, "a", 0.0, 1.0, 1.0));
            rows.push(rec(inst, "b", -1.0, 1.0, 1.0));
        }
        let t = cmp().tally(&rows).unwrap();
        assert_eq!(t, vec![ComparisonTally::new("a", "b", 3, 0, 0)]);
        let s = DominanceSummary::from_tallies(&t, 0.9);
        assert_eq!(s.full_dominance.len(), 1);
        assert_eq!(s.full_dominance[0].winner, "a");
        assert_eq!(s.never_dominates, 1);
        assert_eq!(s.ordered_pairs, 2);

        let rows = vec![
            rec("1", "a", 1.0, 1.0, 1.0),
            rec("1", "b", 0.0, 1.0, 1.0),
            rec("2", "a", 0.0, 1.0, 1.0),
            rec("2", "b", 1.0, 1.0, 1.0),
            rec("3", "a", 1.0, 0.0, 1.0),
            rec("3", "b", 0.0, 1.0, 1.0),
            rec("4", "a", 0.0, 1.0, 1.0),
            rec("4", "b", 1.0, 0.0, 1.0),
        ];
        let t = cmp().tally(&rows).unwrap();
        assert_eq!((t[0].wins_i, t[0].wins_j, t[0].ties), (1, 1, 2));
    }

    #[test]
    fn tally_skips_missing_rows_and_rejects_duplicates() {
        let rows = vec![
            rec("1", "a", 1.0, 1.0, 1.0),
            rec("1", "b", 0.0, 1.0, 1.0),
            rec("2", "a", 1.0, 1.0, 1.0),
            rec("2", "c", 1.0, 1.0, 1.0),
        ];
        let t = cmp().tally(&rows).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1], {
            let mut x = ComparisonTally::new("a", "c", 0, 0, 1);
            x.indifferent = 1;
            x
        });
        let mut dup = rows.clone();
        dup.push(rec("2", "a", 0.0, 0.0, 0.0));
        assert!(matches!(cmp().tally(&dup), Err(DominanceError::DuplicateRecord { .. })));
    }
}
