//! One report per engine, computed from ingested records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::davidson::{self, FitConfig, WorthTable};
use crate::dominance::{group_by_instance, Comparator, ComparisonTally, MetricRecord};
use crate::poset::{Elements, Poset, PosetSet};
use crate::qtext::{self, Granularity, HumanRatings, NormalizationBounds, NormalizedRecord, QTextParams, TrialRecord, TuneConfig};
use crate::ufg::{rank_by_depth, CandidateDepth, DepthMode, DepthResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DavidsonReport {
    pub eq_tolerance: f64,
    pub fit: FitConfig,
    pub instances: usize,
    pub tallies: Vec<ComparisonTally>,
    pub table: WorthTable,
}

pub fn davidson_report(records: &[MetricRecord], cmp: &Comparator, fit: &FitConfig) -> Result<DavidsonReport, EngineError> {
    let tallies = cmp.tally(records)?;
    let table = davidson::fit(&tallies, fit)?;
    let instances = group_by_instance(records)?.len();
    Ok(DavidsonReport { eq_tolerance: cmp.eq_tolerance(), fit: fit.clone(), instances, tallies, table })
}

/// The method roster for partial orders: the filter when given, otherwise
/// every method as long as there are at most `limit`.
pub fn ufg_roster(records: &[MetricRecord], filter: Option<&[String]>, limit: usize) -> Result<Elements, EngineError> {
    let present: std::collections::BTreeSet<&str> = records.iter().map(|r| r.method_id.as_str()).collect();
    let names: Vec<String> = match filter {
        Some(f) => {
            let unknown: Vec<String> = f.iter().filter(|m| !present.contains(m.as_str())).cloned().collect();
            if !unknown.is_empty() {
                return Err(EngineError::UnknownMethods(unknown));
            }
            let mut v = f.to_vec();
            v.sort();
            v
        }
        None => present.iter().map(|s| s.to_string()).collect(),
    };
    if names.len() > limit {
        return Err(EngineError::MethodFilterRequired { methods: names.len(), limit });
    }
    Ok(Elements::new(names).map_err(crate::dominance::DominanceError::from)?)
}

/// One partial order per instance that has a record for every roster
/// method; the ids of other instances are returned separately.
pub fn instance_posets(
    records: &[MetricRecord],
    roster: &Elements,
    cmp: &Comparator,
) -> Result<(Vec<(String, Poset)>, Vec<String>), EngineError> {
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for (inst, rows) in group_by_instance(records)? {
        let complete = roster.names().iter().all(|m| rows.iter().any(|r| &r.method_id == m));
        if complete {
            used.push((inst.to_string(), cmp.instance_poset_on(roster, &rows)?));
        } else {
            skipped.push(inst.to_string());
        }
    }
    Ok((used, skipped))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UfgReport {
    pub roster: Vec<String>,
    pub instances_used: usize,
    pub instances_skipped: usize,
    pub depth: DepthResult,
}

pub fn ufg_report(
    records: &[MetricRecord],
    cmp: &Comparator,
    filter: Option<&[String]>,
    limit: usize,
    max_size: usize,
    mode: DepthMode,
) -> Result<UfgReport, EngineError> {
    let roster = ufg_roster(records, filter, limit)?;
    let (posets, skipped) = instance_posets(records, &roster, cmp)?;
    if posets.is_empty() {
        return Err(EngineError::NoCompleteInstances);
    }
    let instances_used = posets.len();
    let set = PosetSet::from_observations(posets.into_iter().map(|(_, p)| p)).map_err(crate::ufg::UfgError::from)?;
    let depth = rank_by_depth(&set, None, mode, max_size)?;
    Ok(UfgReport { roster: roster.names().to_vec(), instances_used, instances_skipped: skipped.len(), depth })
}

impl UfgReport {
    /// One line per candidate poset, deepest first, edges written `a>b`.
    pub fn to_text(&self) -> String {
        let mut order: Vec<&CandidateDepth> = self.depth.candidates.iter().collect();
        order.sort_by(|a, b| b.depth.total_cmp(&a.depth).then_with(|| a.poset.canonical_cmp(&b.poset)));
        let mut out = format!(
            "{} instances, {} distinct orders, {} ufg sets{}\n\n{:>10}  {:>5}  edges\n",
            self.instances_used,
            self.depth.distinct_observed,
            self.depth.ufg_set_count,
            if self.depth.truncated { " (capped)" } else { "" },
            "depth",
            "count"
        );
        for c in order {
            let names = c.poset.elements();
            let edges: Vec<String> =
                c.poset.strict_pairs().iter().map(|&(a, b)| format!("{}>{}", names.name(a), names.name(b))).collect();
            out.push_str(&format!("{:>10.6}  {:>5}  {}\n", c.depth, c.multiplicity, edges.join(" ")));
        }
        out
    }
}

/// How the Q*Text parameters are obtained.
#[derive(Clone, Debug)]
pub enum QTextParamChoice {
    /// Fixed parameters; stored bounds, when present, replace per-run bounds.
    Fixed { params: QTextParams, bounds: Option<NormalizationBounds>, source: String },
    Tune { ratings: HumanRatings, granularity: Granularity, cfg: TuneConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub instance_id: String,
    pub method_id: String,
    /// Normalized perplexity, coherence, diversity.
    pub m: [f64; 3],
    pub score: f64,
    /// `score` on a 0 to 100 scale.
    pub score_100: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningSummary {
    pub granularity: Granularity,
    pub config: TuneConfig,
    pub rho: f64,
    pub best_restart: usize,
    pub trials_run: usize,
    pub rated: usize,
    pub unrated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTextReport {
    pub params: QTextParams,
    pub params_source: String,
    pub bounds: Vec<NormalizationBounds>,
    /// Metric values clamped into `[0, 1]` by stored bounds.
    pub clamped: usize,
    pub tuning: Option<TuningSummary>,
    pub method_means: BTreeMap<String, f64>,
    pub records: Vec<ScoredRecord>,
}

impl QTextReport {
    pub fn method_ranking(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.method_means.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn to_text(&self) -> String {
        let ranking = self.method_ranking();
        let width = ranking.iter().map(|(m, _)| m.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>12}  {:>8}\n", "method", "mean Q*Text", "x100");
        for (m, s) in ranking {
            out.push_str(&format!("{m:<width$}  {s:>12.6}  {:>8.2}\n", s * 100.0));
        }
        if let Some(t) = &self.tuning {
            out.push_str(&format!("\ntuned spearman = {}\n", t.rho));
        }
        out
    }
}

/// Normalizes each group with its own bounds (or the stored ones), settles
/// the parameters and scores every record.
pub fn qtext_report(
    groups: &[(String, Vec<MetricRecord>)],
    choice: &QTextParamChoice,
) -> Result<(QTextReport, Option<Vec<TrialRecord>>), EngineError> {
    let mut normalized: Vec<NormalizedRecord> = Vec::new();
    let mut bounds = Vec::new();
    let mut clamped = 0;
    match choice {
        QTextParamChoice::Fixed { bounds: Some(stored), .. } => {
            for (_, recs) in groups {
                let (n, c) = stored.apply(recs)?;
                normalized.extend(n);
                clamped += c;
            }
            bounds.push(stored.clone());
        }
        _ => {
            for (name, recs) in groups {
                let (n, b) = qtext::normalize(recs, name)?;
                normalized.extend(n);
                bounds.push(b);
            }
        }
    }

    let (params, params_source, tuning, trace) = match choice {
        QTextParamChoice::Fixed { params, source, .. } => {
            params.validate()?;
            (*params, source.clone(), None, None)
        }
        QTextParamChoice::Tune { ratings, granularity, cfg } => {
            let aligned = qtext::align(&normalized, ratings, *granularity)?;
            let res = qtext::tune(&aligned, cfg)?;
            let summary = TuningSummary {
                granularity: *granularity,
                config: cfg.clone(),
                rho: res.rho,
                best_restart: res.best_restart,
                trials_run: res.trace.len(),
                rated: aligned.ratings.len(),
                unrated: aligned.unrated,
            };
            (res.params, "tuned".to_string(), Some(summary), Some(res.trace))
        }
    };

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let records: Vec<ScoredRecord> = normalized
        .into_iter()
        .map(|r| {
            let score = qtext::score(&r.m, &params).expect("normalized values lie in [0, 1]");
            let e = sums.entry(r.method_id.clone()).or_insert((0.0, 0));
            e.0 += score;
            e.1 += 1;
            ScoredRecord { instance_id: r.instance_id, method_id: r.method_id, m: r.m, score, score_100: score * 100.0 }
        })
        .collect();
    let method_means = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Ok((QTextReport { params, params_source, bounds, clamped, tuning, method_means, records }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dominance::MetricSet;

    fn rec(inst: &str, method: &str, c: f64, d: f64, p: f64) -> MetricRecord {
        MetricRecord::new(inst, method, [("coherence", c), ("diversity", d), ("perplexity", p)])
    }

    #[test]
    fn roster_selection() {
        let recs: Vec<MetricRecord> = (0..10).map(|k| rec("1", &format!("m{k}"), 0.0, 0.0, 1.0)).collect();
        assert_eq!(ufg_roster(&recs, None, 8), Err(EngineError::MethodFilterRequired { methods: 10, limit: 8 }));
        let f = vec!["m3".to_string(), "m1".to_string()];
        assert_eq!(ufg_roster(&recs, Some(&f), 8).unwrap().names(), ["m1", "m3"]);
        let bad = vec!["zz".to_string(), "m1".to_string()];
        assert_eq!(ufg_roster(&recs, Some(&bad), 8), Err(EngineError::UnknownMethods(vec!["zz".into()])));
    }

    #[test]
    fn incomplete_instances_are_skipped() {
        let recs = vec![
            rec("1", "a", 1.0, 1.0, 1.0),
            rec("1", "b", 0.0, 0.0, 2.0),
            rec("2", "a", 1.0, 1.0, 1.0),
        ];
        let cmp = Comparator::new(MetricSet::text_default());
        let roster = ufg_roster(&recs, None, 8).unwrap();
        let (used, skipped) = instance_posets(&recs, &roster, &cmp).unwrap();
        assert_eq!(used.len(), 1);
        assert_eq!(skipped, vec!["2"]);
    }

    #[test]
    fn fixed_params_with_stored_bounds_clamp() {
        let base = vec![rec("1", "a", -1.0, 0.0, 2.0), rec("1", "b", -3.0, 1.0, 6.0)];
        let stored = NormalizationBounds::fit(&base, "base").unwrap();
        let fresh = vec![("new".to_string(), vec![rec("2", "a", 0.0, 0.5, 4.0)])];
        let choice = QTextParamChoice::Fixed { params: QTextParams::INITIAL, bounds: Some(stored.clone()), source: "x".into() };
        let (report, trace) = qtext_report(&fresh, &choice).unwrap();
        assert!(trace.is_none());
        assert_eq!(report.clamped, 1);
        assert_eq!(report.records[0].m, [0.5, 1.0, 0.5]);
        assert_eq!(report.bounds, vec![stored]);
    }
}
