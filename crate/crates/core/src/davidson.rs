//! Extended Bradley-Terry model with ties (Davidson), fitted as a Poisson
//! log-linear model.
//!
//! For a pair `(i, j)` compared `n` times the model gives
//!
//! ```text
//! P(i > j) = π_i / (π_i + π_j + ν √(π_i π_j))
//! P(i ~ j) = ν √(π_i π_j) / (π_i + π_j + ν √(π_i π_j))
//! ```
//!
//! In log-linear form the three cells of a pair share one intercept `μ_ij`:
//!
//! ```text
//! log E[wins_i] = μ_ij + ½ λ_i − ½ λ_j
//! log E[wins_j] = μ_ij + ½ λ_j − ½ λ_i
//! log E[ties]   = μ_ij + log ν
//! ```
//!
//! with `λ_i = log π_i`. Maximizing the Poisson likelihood over the free
//! intercepts fixes each pair's fitted total at its observed total, which
//! leaves the multinomial likelihood above in `(λ, log ν)`. That profile is
//! fitted by Newton-Raphson, which for this canonical-link model is IRLS:
//! the observed and expected information coincide. `λ` of the first method
//! (in sorted order) is pinned at zero during the fit and worths are
//! renormalized to the simplex afterwards.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dominance::ComparisonTally;

/// Below this `log ν` the tie parameter is reported as exactly zero.
pub const LOG_NU_FLOOR: f64 = -30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DavidsonError {
    #[error("no comparisons to fit")]
    NoComparisons,
    #[error("tally compares {0:?} with itself")]
    SelfComparison(String),
    #[error("pair ({0:?}, {1:?}) is tallied more than once")]
    DuplicatePair(String, String),
    #[error("comparison graph is disconnected into {} components; worths are not identifiable across them", .0.len())]
    DisconnectedGraph(Vec<Vec<String>>),
    /// Groups of methods, one of which never loses to (or never beats) another.
    #[error("comparison outcomes separate the methods into {0:?}; worths diverge without Haldane smoothing")]
    SeparationDetected(Vec<Vec<String>>),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("preference probabilities need two distinct methods")]
    SameMethod,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCountPolicy {
    /// Refuse data whose likelihood has no finite maximizer.
    #[default]
    Error,
    /// Add 0.5 to every cell of every observed pair.
    Haldane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Relative change in log-likelihood that ends the iteration.
    pub tolerance: f64,
    pub zero_counts: ZeroCountPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { max_iterations: 500, tolerance: 1e-10, zero_counts: ZeroCountPolicy::Error }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorthEntry {
    pub method: String,
    pub worth: f64,
}

/// Fitted worths, tie parameter and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorthTable {
    /// Methods by descending worth; equal worths ordered by method id.
    pub ranking: Vec<WorthEntry>,
    pub nu: f64,
    /// `None` when no ties were observed and `ν` is fixed at zero.
    pub log_nu: Option<f64>,
    /// Multinomial log-likelihood kernel at the estimate.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute score component at the estimate.
    pub max_score: f64,
    pub pairs: usize,
    pub comparisons: f64,
    pub zero_counts: ZeroCountPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub i_wins: f64,
    pub j_wins: f64,
    pub tie: f64,
}

/// Outcome probabilities for a pair with the given worths.
pub fn preference(pi_i: f64, pi_j: f64, nu: f64) -> Preference {
    let tie_mass = nu * (pi_i * pi_j).sqrt();
    let denom = pi_i + pi_j + tie_mass;
    Preference { i_wins: pi_i / denom, j_wins: pi_j / denom, tie: tie_mass / denom }
}

impl WorthTable {
    pub fn worth(&self, method: &str) -> Option<f64> {
        self.ranking.iter().find(|e| e.method == method).map(|e| e.worth)
    }

    pub fn methods(&self) -> impl Iterator<Item = &str> {
        self.ranking.iter().map(|e| e.method.as_str())
    }

    pub fn worths(&self) -> BTreeMap<&str, f64> {
        self.ranking.iter().map(|e| (e.method.as_str(), e.worth)).collect()
    }

    pub fn preference_probability(&self, i: &str, j: &str) -> Result<Preference, DavidsonError> {
        if i == j {
            return Err(DavidsonError::SameMethod);
        }
        let get = |m: &str| self.worth(m).ok_or_else(|| DavidsonError::UnknownMethod(m.to_string()));
        Ok(preference(get(i)?, get(j)?, self.nu))
    }

    /// Fitted log-linear intercept of a pair: the log expected count scale
    /// that reproduces the pair's observed total.
    pub fn pair_intercept(&self, tally: &ComparisonTally) -> Result<f64, DavidsonError> {
        let (pi, pj) = self.pair_worths(tally)?;
        Ok((tally.total() as f64).ln() - ((pi / pj).sqrt() + (pj / pi).sqrt() + self.nu).ln())
    }

    /// `ln n − ln(√(π_i/π_j) + √(π_j/π_i))`: the intercept with the tie
    /// term left out. Agrees with [`Self::pair_intercept`] only when `ν = 0`.
    pub fn tie_free_intercept(&self, tally: &ComparisonTally) -> Result<f64, DavidsonError> {
        let (pi, pj) = self.pair_worths(tally)?;
        Ok((tally.total() as f64).ln() - ((pi / pj).sqrt() + (pj / pi).sqrt()).ln())
    }

    fn pair_worths(&self, t: &ComparisonTally) -> Result<(f64, f64), DavidsonError> {
        let get = |m: &str| self.worth(m).ok_or_else(|| DavidsonError::UnknownMethod(m.to_string()));
        Ok((get(&t.method_i)?, get(&t.method_j)?))
    }

    /// Two-column text table: method, estimated worth.
    pub fn to_text(&self) -> String {
        let width = self.ranking.iter().map(|e| e.method.len()).max().unwrap_or(0).max("Decoding method".len());
        let mut out = format!("{:<width$}  Estimated worth parameter\n", "Decoding method");
        for e in &self.ranking {
            out.push_str(&format!("{:<width$}  {:.17}\n", e.method, e.worth));
        }
        out.push_str(&format!("\nnu = {}\nloglik = {}\niterations = {}\nconverged = {}\n", self.nu, self.loglik, self.iterations, self.converged));
        out
    }
}

#[derive(Clone, Debug)]
struct PairCounts {
    i: usize,
    j: usize,
    wins_i: f64,
    wins_j: f64,
    ties: f64,
}

impl PairCounts {
    fn total(&self) -> f64 {
        self.wins_i + self.wins_j + self.ties
    }
}

struct Problem {
    methods: Vec<String>,
    pairs: Vec<PairCounts>,
    estimate_nu: bool,
}

impl Problem {
    fn dim(&self) -> usize {
        self.methods.len() - 1 + usize::from(self.estimate_nu)
    }

    fn lambda(beta: &DVector<f64>, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            beta[i - 1]
        }
    }

    /// Log-likelihood, score, and Fisher information at `beta`.
    fn evaluate(&self, beta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let k = self.dim();
        let theta_idx = self.estimate_nu.then(|| k - 1);
        let theta = theta_idx.map_or(f64::NEG_INFINITY, |t| beta[t]);
        let mut loglik = 0.0;
        let mut score = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        // design rows for (wins_i, wins_j, ties) over local params (λ_i, λ_j, θ)
        const X: [[f64; 3]; 3] = [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
        for pc in &self.pairs {
            let half = 0.5 * (Self::lambda(beta, pc.i) - Self::lambda(beta, pc.j));
            let eta = [half, -half, theta];
            let top = half.abs().max(theta);
            let lse = top + eta.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
            let p = eta.map(|e| (e - lse).exp());
            let counts = [pc.wins_i, pc.wins_j, pc.ties];
            let n = pc.total();
            let local = [(pc.i > 0).then(|| pc.i - 1), (pc.j > 0).then(|| pc.j - 1), theta_idx];

            let mut g = [0.0; 3];
            let mut xbar = [0.0; 3];
            for c in 0..3 {
                if counts[c] > 0.0 {
                    loglik += counts[c] * (eta[c] - lse);
                }
                let resid = counts[c] - n * p[c];
                for a in 0..3 {
                    g[a] += resid * X[c][a];
                    xbar[a] += p[c] * X[c][a];
                }
            }
            for a in 0..3 {
                let Some(ga) = local[a] else { continue };
                score[ga] += g[a];
                for b in 0..3 {
                    let Some(gb) = local[b] else { continue };
                    let second: f64 = (0..3).map(|c| p[c] * X[c][a] * X[c][b]).sum();
                    info[(ga, gb)] += n * (second - xbar[a] * xbar[b]);
                }
            }
        }
        (loglik, score, info)
    }

    fn newton_direction(score: &DVector<f64>, info: &DMatrix<f64>) -> DVector<f64> {
        let scale = info.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(f64::MIN_POSITIVE);
        let mut ridge = 0.0;
        loop {
            let mut m = info.clone();
            for d in 0..m.nrows() {
                m[(d, d)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                return ch.solve(score);
            }
            ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 10.0 };
            if ridge > 1e6 * scale {
                // give up on curvature and step along the score
                return score / scale;
            }
        }
    }
}

fn canonical_pairs(tallies: &[ComparisonTally], policy: ZeroCountPolicy) -> Result<(Vec<String>, Vec<PairCounts>), DavidsonError> {
    let mut methods = BTreeSet::new();
    for t in tallies {
        if t.method_i == t.method_j {
            return Err(DavidsonError::SelfComparison(t.method_i.clone()));
        }
        methods.insert(t.method_i.clone());
        methods.insert(t.method_j.clone());
    }
    let methods: Vec<String> = methods.into_iter().collect();
    let index: BTreeMap<&str, usize> = methods.iter().enumerate().map(|(k, m)| (m.as_str(), k)).collect();
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    let bump = if policy == ZeroCountPolicy::Haldane { 0.5 } else { 0.0 };
    for t in tallies {
        let t = if t.method_i < t.method_j { t.clone() } else { t.swapped() };
        let (i, j) = (index[t.method_i.as_str()], index[t.method_j.as_str()]);
        if !seen.insert((i, j)) {
            return Err(DavidsonError::DuplicatePair(t.method_i, t.method_j));
        }
        if t.total() == 0 {
            continue;
        }
        pairs.push(PairCounts {
            i,
            j,
            wins_i: t.wins_i as f64 + bump,
            wins_j: t.wins_j as f64 + bump,
            ties: t.ties as f64 + bump,
        });
    }
    Ok((methods, pairs))
}

fn reachable(m: usize, adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    seen
}

fn components(m: usize, pairs: &[PairCounts]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for p in pairs {
        adj[p.i].push(p.j);
        adj[p.j].push(p.i);
    }
    let mut assigned = vec![false; m];
    let mut out = Vec::new();
    for i in 0..m {
        if !assigned[i] {
            let comp: Vec<usize> = reachable(m, &adj, i).iter().enumerate().filter_map(|(j, &r)| r.then_some(j)).collect();
            for &j in &comp {
                assigned[j] = true;
            }
            out.push(comp);
        }
    }
    out
}

/// Strongly connected components of the graph with an edge from `i` to `j`
/// whenever `i` beat or tied `j`. A finite maximizer exists only when there
/// is a single component.
fn strong_components(m: usize, pairs: &[PairCounts]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for p in pairs {
        if p.wins_i > 0.0 || p.ties > 0.0 {
            adj[p.i].push(p.j);
        }
        if p.wins_j > 0.0 || p.ties > 0.0 {
            adj[p.j].push(p.i);
        }
    }
    let reach: Vec<Vec<bool>> = (0..m).map(|i| reachable(m, &adj, i)).collect();
    let mut assigned = vec![false; m];
    let mut out = Vec::new();
    for i in 0..m {
        if assigned[i] {
            continue;
        }
        let comp: Vec<usize> = (0..m).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        out.push(comp);
    }
    out
}

/// Maximum-likelihood fit of the Davidson model to pairwise tallies.
///
/// Returns the table even when the iteration cap is hit; check
/// [`WorthTable::converged`].
pub fn fit(tallies: &[ComparisonTally], cfg: &FitConfig) -> Result<WorthTable, DavidsonError> {
    if !(cfg.tolerance > 0.0) {
        return Err(DavidsonError::InvalidConfig("tolerance must be positive"));
    }
    let (methods, pairs) = canonical_pairs(tallies, cfg.zero_counts)?;
    if pairs.is_empty() {
        return Err(DavidsonError::NoComparisons);
    }
    let m = methods.len();
    let comps = components(m, &pairs);
    if comps.len() > 1 {
        let named = comps
            .into_iter()
            .map(|c| c.into_iter().map(|k| methods[k].clone()).collect())
            .collect();
        return Err(DavidsonError::DisconnectedGraph(named));
    }
    let strong = strong_components(m, &pairs);
    if strong.len() > 1 {
        let named = strong
            .into_iter()
            .map(|c| c.into_iter().map(|k| methods[k].clone()).collect())
            .collect();
        return Err(DavidsonError::SeparationDetected(named));
    }

    let total_ties: f64 = pairs.iter().map(|p| p.ties).sum();
    let total_wins: f64 = pairs.iter().map(|p| p.wins_i + p.wins_j).sum();
    let total: f64 = total_ties + total_wins;
    let problem = Problem { methods, pairs, estimate_nu: total_ties > 0.0 };
    let k = problem.dim();

    let mut beta = DVector::zeros(k);
    if problem.estimate_nu && total_wins > 0.0 {
        // at equal worths the tie-to-win odds are ν / 2
        beta[k - 1] = (2.0 * total_ties / total_wins).ln();
    }
    let grad_tol = 1e-8 * (total / 1e4).max(1.0);
    let (mut loglik, mut score, mut info) = problem.evaluate(&beta);
    let mut iterations = 0;
    let mut converged = k == 0;
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let step = Problem::newton_direction(&score, &info);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &beta + &step * t;
            let eval = problem.evaluate(&trial);
            if eval.0.is_finite() && eval.0 >= loglik - 1e-12 * loglik.abs() {
                accepted = Some((trial, eval));
                break;
            }
            t *= 0.5;
        }
        let Some((next, (ll, sc, inf))) = accepted else { break };
        let change = (ll - loglik).abs();
        beta = next;
        loglik = ll;
        score = sc;
        info = inf;
        let max_score = score.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        converged = change <= cfg.tolerance * (1.0 + loglik.abs()) && max_score <= grad_tol;
    }

    let lambdas: Vec<f64> = (0..m).map(|i| Problem::lambda(&beta, i)).collect();
    let top = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = lambdas.iter().map(|l| (l - top).exp()).collect();
    let sum: f64 = unnorm.iter().sum();
    let mut ranking: Vec<WorthEntry> = problem
        .methods
        .iter()
        .zip(&unnorm)
        .map(|(name, u)| WorthEntry { method: name.clone(), worth: u / sum })
        .collect();
    ranking.sort_by(|a, b| b.worth.total_cmp(&a.worth).then_with(|| a.method.cmp(&b.method)));

    let log_nu = problem.estimate_nu.then(|| beta[k - 1]);
    let nu = match log_nu {
        Some(l) if l >= LOG_NU_FLOOR => l.exp(),
        _ => 0.0,
    };
    Ok(WorthTable {
        ranking,
        nu,
        log_nu,
        loglik,
        iterations,
        converged,
        max_score: score.iter().fold(0.0f64, |a, s| a.max(s.abs())),
        pairs: problem.pairs.len(),
        comparisons: total,
        zero_counts: cfg.zero_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn t(i: &str, j: &str, wi: u64, wj: u64, ties: u64) -> ComparisonTally {
        ComparisonTally::new(i, j, wi, wj, ties)
    }

    /// Davidson log-likelihood of two methods, parameterized by π_a and ν.
    fn two_method_loglik(pa: f64, nu: f64, wa: f64, wb: f64, ties: f64) -> f64 {
        let p = preference(pa, 1.0 - pa, nu);
        let term = |n: f64, q: f64| if n > 0.0 { n * q.ln() } else { 0.0 };
        term(wa, p.i_wins) + term(wb, p.j_wins) + term(ties, p.tie)
    }

    /// Grid search at step `h` over a window, returning the argmax.
    fn grid_argmax(f: impl Fn(f64, f64) -> f64, xs: (f64, f64), ys: (f64, f64), h: f64) -> (f64, f64) {
        let nx = ((xs.1 - xs.0) / h).round() as usize;
        let ny = ((ys.1 - ys.0) / h).round() as usize;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for a in 0..=nx {
            let x = xs.0 + a as f64 * h;
            for b in 0..=ny {
                let y = ys.0 + b as f64 * h;
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn symmetric_two_method_fit() {
        let w = fit(&[t("a", "b", 5, 5, 0)], &FitConfig::default()).unwrap();
        assert!(w.converged);
        assert_abs_diff_eq!(w.worth("a").unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.worth("b").unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(w.nu, 0.0);
        assert_eq!(w.log_nu, None);
        // equal worths: ranking falls back to method id
        assert_eq!(w.ranking[0].method, "a");
    }

    #[test]
    fn two_method_fit_matches_likelihood_grid() {
        let w = fit(&[t("a", "b", 6, 2, 4)], &FitConfig::default()).unwrap();
        let f = |pa: f64, nu: f64| two_method_loglik(pa, nu, 6.0, 2.0, 4.0);
        let (cx, cy) = grid_argmax(f, (0.01, 0.99), (0.0, 4.0), 1e-2);
        let (gx, gy) = grid_argmax(f, (cx - 0.02, cx + 0.02), (cy - 0.02, cy + 0.02), 1e-4);
        assert!((w.worth("a").unwrap() - gx).abs() <= 1e-4, "{} vs {gx}", w.worth("a").unwrap());
        assert!((w.nu - gy).abs() <= 1e-4, "{} vs {gy}", w.nu);
        // two methods saturate the multinomial: π_a/π_b = 6/2 and ν√(π_a π_b) / π_a = 4/6
        assert_abs_diff_eq!(w.worth("a").unwrap(), 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(w.nu, (4.0 / 6.0) * 3f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn preference_examples() {
        let p = preference(0.3, 0.3, 0.0);
        assert_eq!((p.i_wins, p.j_wins, p.tie), (0.5, 0.5, 0.0));
        let p = preference(0.5, 0.5, 1.0);
        for v in [p.i_wins, p.j_wins, p.tie] {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = preference(0.2, 0.8, 1e6);
        assert!((1.0 - p.tie) < 1e-5);
    }

    #[test]
    fn preference_lookup_errors() {
        let w = fit(&[t("a", "b", 6, 2, 4)], &FitConfig::default()).unwrap();
        assert_eq!(w.preference_probability("a", "a"), Err(DavidsonError::SameMethod));
        assert_eq!(w.preference_probability("a", "z"), Err(DavidsonError::UnknownMethod("z".into())));
        let p = w.preference_probability("b", "a").unwrap();
        assert_abs_diff_eq!(p.i_wins + p.j_wins + p.tie, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.j_wins, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = fit(&[t("a", "b", 3, 2, 1), t("c", "d", 1, 1, 1)], &FitConfig::default()).unwrap_err();
        assert_eq!(
            err,
            DavidsonError::DisconnectedGraph(vec![vec!["a".into(), "b".into()], vec!["c".into(), "d".into()]])
        );
        // a zero-total tally does not connect anything
        let err = fit(&[t("a", "b", 3, 2, 1), t("b", "c", 0, 0, 0)], &FitConfig::default()).unwrap_err();
        assert!(matches!(err, DavidsonError::DisconnectedGraph(_)));
    }

    #[test]
    fn separation_and_haldane() {
        let data = [t("a", "b", 4, 0, 0), t("b", "c", 3, 1, 0), t("a", "c", 2, 0, 0)];
        assert_eq!(
            fit(&data, &FitConfig::default()).unwrap_err(),
            DavidsonError::SeparationDetected(vec![vec!["a".into()], vec!["b".into(), "c".into()]])
        );
        let cfg = FitConfig { zero_counts: ZeroCountPolicy::Haldane, ..FitConfig::default() };
        let w = fit(&data, &cfg).unwrap();
        assert!(w.converged);
        assert_eq!(w.ranking[0].method, "a");
        assert!(w.nu > 0.0);
        // a ties with b, so a finite estimate exists without smoothing
        let tied = [t("a", "b", 4, 0, 1), t("b", "c", 3, 1, 0), t("a", "c", 2, 0, 0)];
        assert!(fit(&tied, &FitConfig::default()).unwrap().converged);
    }

    #[test]
    fn malformed_tallies() {
        assert_eq!(fit(&[], &FitConfig::default()).unwrap_err(), DavidsonError::NoComparisons);
        assert!(matches!(fit(&[t("a", "a", 1, 1, 1)], &FitConfig::default()), Err(DavidsonError::SelfComparison(_))));
        assert!(matches!(
            fit(&[t("a", "b", 1, 1, 1), t("b", "a", 1, 1, 1)], &FitConfig::default()),
            Err(DavidsonError::DuplicatePair(..))
        ));
        let bad = FitConfig { tolerance: 0.0, ..FitConfig::default() };
        assert!(matches!(fit(&[t("a", "b", 1, 1, 1)], &bad), Err(DavidsonError::InvalidConfig(_))));
    }

    #[test]
    fn all_ties_push_mass_to_ties() {
        let data = [t("a", "b", 0, 0, 50), t("b", "c", 0, 0, 40), t("a", "c", 0, 0, 30)];
        let w = fit(&data, &FitConfig::default()).unwrap();
        for (i, j) in [("a", "b"), ("b", "c"), ("a", "c")] {
            assert!(w.preference_probability(i, j).unwrap().tie > 0.99);
        }
        for e in &w.ranking {
            assert_abs_diff_eq!(e.worth, 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let data = [t("a", "b", 30, 5, 10), t("b", "c", 20, 10, 5), t("a", "c", 25, 3, 8)];
        let w = fit(&data, &FitConfig { max_iterations: 1, ..FitConfig::default() }).unwrap();
        assert!(!w.converged);
        assert_eq!(w.iterations, 1);
    }

    #[test]
    fn intercepts_reproduce_pair_totals() {
        let data = [t("a", "b", 30, 5, 10), t("b", "c", 20, 10, 5), t("a", "c", 25, 3, 8)];
        let w = fit(&data, &FitConfig::default()).unwrap();
        for tally in &data {
            let mu = w.pair_intercept(tally).unwrap();
            let (pi, pj) = (w.worth(&tally.method_i).unwrap(), w.worth(&tally.method_j).unwrap());
            let expected_total = mu.exp() * ((pi / pj).sqrt() + (pj / pi).sqrt() + w.nu);
            assert_abs_diff_eq!(expected_total, tally.total() as f64, epsilon = 1e-9);
            // the tie-free form differs by exactly the ν term
            assert!(w.tie_free_intercept(tally).unwrap() > mu);
        }
        let no_ties = [t("a", "b", 30, 5, 0), t("b", "c", 20, 10, 0), t("a", "c", 25, 3, 0)];
        let w = fit(&no_ties, &FitConfig::default()).unwrap();
        for tally in &no_ties {
            assert_abs_diff_eq!(w.pair_intercept(tally).unwrap(), w.tie_free_intercept(tally).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn text_table_lists_methods_by_worth() {
        let w = fit(&[t("a", "b", 2, 6, 4)], &FitConfig::default()).unwrap();
        let text = w.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Decoding method"));
        assert!(lines[1].starts_with("b "));
        assert!(lines[2].starts_with("a "));
    }

    proptest! {
        #[test]
        fn more_wins_never_lowers_worth(wa in 1u64..40, wb in 1u64..40, ties in 0u64..20, extra in 1u64..10) {
            let base = fit(&[t("a", "b", wa, wb, ties)], &FitConfig::default()).unwrap();
            let more = fit(&[t("a", "b", wa + extra, wb, ties)], &FitConfig::default()).unwrap();
            prop_assert!(more.worth("a").unwrap() >= base.worth("a").unwrap() - 1e-12);
        }

        #[test]
        fn orientation_of_tallies_is_irrelevant(
            counts in prop::collection::vec((1u64..30, 1u64..30, 0u64..15), 3),
            flips in prop::collection::vec(any::<bool>(), 3),
        ) {
            let names = [("a", "b"), ("b", "c"), ("a", "c")];
            let tallies: Vec<ComparisonTally> = names.iter().zip(&counts).map(|(&(i, j), &(x, y, z))| t(i, j, x, y, z)).collect();
            let flipped: Vec<ComparisonTally> = tallies
                .iter()
                .zip(&flips)
                .map(|(x, &f)| if f { x.swapped() } else { x.clone() })
                .collect();
            let a = fit(&tallies, &FitConfig::default()).unwrap();
            let b = fit(&flipped, &FitConfig::default()).unwrap();
            for (x, y) in a.ranking.iter().zip(&b.ranking) {
                prop_assert_eq!(&x.method, &y.method);
                prop_assert!((x.worth - y.worth).abs() < 1e-10);
            }
        }

        #[test]
        fn probabilities_sum_to_one(pi in 1e-6f64..1.0, pj in 1e-6f64..1.0, nu in 0.0f64..100.0) {
            let p = preference(pi, pj, nu);
            prop_assert!((p.i_wins + p.j_wins + p.tie - 1.0).abs() <= 1e-12);
        }
    }
}
