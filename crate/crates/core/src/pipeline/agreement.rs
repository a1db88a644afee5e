//! Rank agreement between Davidson worths and mean Q*Text scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::davidson::WorthTable;
use crate::qtext::spearman;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub method: String,
    pub worth: f64,
    pub qtext_mean: f64,
    /// 1-based rank by descending worth.
    pub davidson_rank: usize,
    /// 1-based rank by descending mean Q*Text.
    pub qtext_rank: usize,
    /// `davidson_rank − qtext_rank`.
    pub discrepancy: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub k: usize,
    pub davidson: Vec<String>,
    pub qtext: Vec<String>,
    pub shared: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Rows in Davidson rank order.
    pub rows: Vec<AgreementRow>,
    pub davidson_order: Vec<String>,
    pub qtext_order: Vec<String>,
    /// Spearman correlation of the two rankings; `None` below three methods.
    pub spearman: Option<f64>,
    pub top_k: Vec<TopK>,
    /// Methods present on only one side, left out of the comparison.
    pub unmatched: Vec<String>,
}

fn order_by_desc(values: &BTreeMap<&str, f64>) -> Vec<String> {
    let mut v: Vec<(&str, f64)> = values.iter().map(|(k, v)| (*k, *v)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().map(|(k, _)| k.to_string()).collect()
}

/// Compares the two total orders on their shared methods. Equal values are
/// ordered by method id.
pub fn agreement(worths: &WorthTable, qtext_means: &BTreeMap<String, f64>, top_k: usize) -> Result<AgreementReport, EngineError> {
    let all_worths = worths.worths();
    let shared: BTreeSet<&str> = all_worths.keys().copied().filter(|m| qtext_means.contains_key(*m)).collect();
    if shared.is_empty() {
        return Err(EngineError::NoSharedMethods);
    }
    let unmatched: Vec<String> = all_worths
        .keys()
        .copied()
        .chain(qtext_means.keys().map(String::as_str))
        .filter(|m| !shared.contains(m))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let w: BTreeMap<&str, f64> = shared.iter().map(|m| (*m, all_worths[m])).collect();
    let q: BTreeMap<&str, f64> = shared.iter().map(|m| (*m, qtext_means[*m])).collect();
    let davidson_order = order_by_desc(&w);
    let qtext_order = order_by_desc(&q);
    let rank_of = |order: &[String], m: &str| order.iter().position(|x| x == m).unwrap() + 1;
    let rows: Vec<AgreementRow> = davidson_order
        .iter()
        .map(|m| {
            let (dr, qr) = (rank_of(&davidson_order, m), rank_of(&qtext_order, m));
            AgreementRow {
                method: m.clone(),
                worth: w[m.as_str()],
                qtext_mean: q[m.as_str()],
                davidson_rank: dr,
                qtext_rank: qr,
                discrepancy: dr as i64 - qr as i64,
            }
        })
        .collect();
    let spearman = if rows.len() >= 3 {
        let dr: Vec<f64> = rows.iter().map(|r| r.davidson_rank as f64).collect();
        let qr: Vec<f64> = rows.iter().map(|r| r.qtext_rank as f64).collect();
        Some(spearman(&dr, &qr).expect("distinct ranks"))
    } else {
        None
    };
    let top_k = (1..=top_k.min(rows.len()))
        .map(|k| {
            let d: Vec<String> = davidson_order[..k].to_vec();
            let qk: Vec<String> = qtext_order[..k].to_vec();
            let mut s: Vec<String> = d.iter().filter(|m| qk.contains(m)).cloned().collect();
            s.sort();
            TopK { k, davidson: d, qtext: qk, shared: s }
        })
        .collect();
    Ok(AgreementReport { rows, davidson_order, qtext_order, spearman, top_k, unmatched })
}

impl AgreementReport {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>8}  {:>8}  {:>11}\n", "method", "davidson", "qtext", "discrepancy");
        for r in &self.rows {
            out.push_str(&format!("{:<width$}  {:>8}  {:>8}  {:>+11}\n", r.method, r.davidson_rank, r.qtext_rank, r.discrepancy));
        }
        match self.spearman {
            Some(rho) => out.push_str(&format!("\nspearman = {rho}\n")),
            None => out.push_str("\nspearman = n/a (fewer than three methods)\n"),
        }
        for t in &self.top_k {
            out.push_str(&format!("top-{}: shared {:?}\n", t.k, t.shared));
        }
        out
    }
}
