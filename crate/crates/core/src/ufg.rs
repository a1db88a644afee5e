//! Union-free generic (ufg) depth of partial orders.
//!
//! A set `P` of at least two distinct posets is *ufg* when
//!
//! 1. its closure is strictly larger than `P`, and
//! 2. its closure is not the union of the closures of proper subsets of `P`.
//!
//! The closure is increasing, so condition 2 only needs the subsets that
//! leave out one member: `P` is ufg iff some `q` in the closure of `P` lies
//! outside the closure of every `P \ {p}`. Such a `q` is never a member of
//! `P`, so it also witnesses condition 1.
//!
//! The empirical depth of a poset is the weighted share of observed ufg sets
//! whose closure contains it. [`DepthMode::Weighted`] weights each set by the
//! product of its members' empirical frequencies; [`DepthMode::UniformCount`]
//! gives every set weight one.

use std::ops::ControlFlow;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::{ClosureBounds, Poset, PosetError, PosetSet};

/// Default largest candidate set size.
pub const DEFAULT_MAX_SIZE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UfgError {
    #[error("a candidate set needs at least two posets, got {0}")]
    TooFewMembers(usize),
    #[error("candidate set contains the same poset twice")]
    DuplicateMember,
    #[error("max_size must be at least 2, got {0}")]
    InvalidMaxSize(usize),
    #[error("no ufg sets among the observed posets; depth is undefined")]
    NoUfgSets,
    #[error(transparent)]
    Poset(#[from] PosetError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    #[default]
    Weighted,
    UniformCount,
}

/// Decides both ufg conditions for a set of distinct posets.
pub fn is_ufg(members: &[&Poset]) -> Result<bool, UfgError> {
    if members.len() < 2 {
        return Err(UfgError::TooFewMembers(members.len()));
    }
    let bounds = ClosureBounds::of(members)?;
    for (i, p) in members.iter().enumerate() {
        if members[..i].contains(p) {
            return Err(UfgError::DuplicateMember);
        }
    }
    let leave_one_out: Vec<ClosureBounds> = (0..members.len())
        .map(|skip| {
            let rest: Vec<&Poset> = members
                .iter()
                .enumerate()
                .filter_map(|(i, p)| (i != skip).then_some(*p))
                .collect();
            ClosureBounds::of(&rest).expect("homogeneous by construction")
        })
        .collect();
    // a subset with the same bounds has the same closure
    if leave_one_out.contains(&bounds) {
        return Ok(false);
    }
    let witness = bounds.for_each(|q| {
        if leave_one_out.iter().all(|b| !b.contains(q)) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(witness.is_break())
}

/// A ufg set of observed posets, by index into the [`PosetSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UfgSet {
    pub members: Vec<usize>,
    /// Product of the members' empirical frequencies.
    pub weight: f64,
}

/// All ufg sets up to a size cap, in lexicographic order of member indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UfgEnumeration {
    pub sets: Vec<UfgSet>,
    pub max_size: usize,
    /// True when larger candidate sets exist than `max_size` allows.
    pub truncated: bool,
}

impl UfgEnumeration {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Finds every ufg subset of the distinct observed posets with between two
/// and `max_size` members. Candidate sets are checked in parallel, grouped by
/// their first member, and merged back in order.
pub fn enumerate_ufg(observed: &PosetSet, max_size: usize) -> Result<UfgEnumeration, UfgError> {
    if max_size < 2 {
        return Err(UfgError::InvalidMaxSize(max_size));
    }
    let n = observed.len();
    let posets = observed.posets();
    let freq: Vec<f64> = (0..n).map(|i| observed.frequency(i)).collect();
    let mut sets = Vec::new();
    for size in 2..=max_size.min(n) {
        let per_first: Vec<Vec<UfgSet>> = (0..=n - size)
            .into_par_iter()
            .map(|first| {
                let mut found = Vec::new();
                for rest in (first + 1..n).combinations(size - 1) {
                    let mut idx = Vec::with_capacity(size);
                    idx.push(first);
                    idx.extend(rest);
                    let members: Vec<&Poset> = idx.iter().map(|&i| &posets[i]).collect();
                    if is_ufg(&members).expect("observed posets are distinct and homogeneous") {
                        let weight = idx.iter().map(|&i| freq[i]).product();
                        found.push(UfgSet { members: idx, weight });
                    }
                }
                found
            })
            .collect();
        sets.extend(per_first.into_iter().flatten());
    }
    Ok(UfgEnumeration { sets, max_size, truncated: max_size < n })
}

/// Depth contribution of one poset against an enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateDepth {
    pub poset: Poset,
    pub depth: f64,
    /// Observation count; zero for unobserved candidates.
    pub multiplicity: usize,
    /// Number of ufg sets whose closure contains the candidate.
    pub supporting_sets: usize,
    /// Number of ufg sets that have the candidate as a member.
    pub member_of_sets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub mode: DepthMode,
    pub candidates: Vec<CandidateDepth>,
    pub ufg_set_count: usize,
    /// Inverse of the total weight of all ufg sets.
    pub normalizer: f64,
    pub max_size: usize,
    pub truncated: bool,
    pub distinct_observed: usize,
    pub total_observations: usize,
    /// Index into `candidates` of the deepest poset.
    pub most_central: usize,
    /// Index into `candidates` of the shallowest poset.
    pub most_outlying: usize,
}

impl DepthResult {
    pub fn central(&self) -> &CandidateDepth {
        &self.candidates[self.most_central]
    }

    pub fn outlying(&self) -> &CandidateDepth {
        &self.candidates[self.most_outlying]
    }

    pub fn depth_of(&self, p: &Poset) -> Option<f64> {
        self.candidates.iter().find(|c| c.poset == *p).map(|c| c.depth)
    }
}

/// Precomputed ufg sets of an observation set, reusable across targets.
pub struct UfgDepth<'a> {
    observed: &'a PosetSet,
    enumeration: UfgEnumeration,
    bounds: Vec<ClosureBounds>,
}

impl<'a> UfgDepth<'a> {
    pub fn new(observed: &'a PosetSet, max_size: usize) -> Result<Self, UfgError> {
        let enumeration = enumerate_ufg(observed, max_size)?;
        Ok(Self::from_enumeration(observed, enumeration))
    }

    /// Uses a given family of sets instead of enumerating; set weights are
    /// recomputed from the observation frequencies.
    pub fn from_enumeration(observed: &'a PosetSet, mut enumeration: UfgEnumeration) -> Self {
        let posets = observed.posets();
        for s in &mut enumeration.sets {
            s.weight = s.members.iter().map(|&i| observed.frequency(i)).product();
        }
        let bounds = enumeration
            .sets
            .iter()
            .map(|s| {
                let members: Vec<&Poset> = s.members.iter().map(|&i| &posets[i]).collect();
                ClosureBounds::of(&members).expect("observed posets are homogeneous")
            })
            .collect();
        UfgDepth { observed, enumeration, bounds }
    }

    pub fn enumeration(&self) -> &UfgEnumeration {
        &self.enumeration
    }

    fn weight(&self, k: usize, mode: DepthMode) -> f64 {
        match mode {
            DepthMode::Weighted => self.enumeration.sets[k].weight,
            DepthMode::UniformCount => 1.0,
        }
    }

    fn total_weight(&self, mode: DepthMode) -> f64 {
        (0..self.enumeration.len()).map(|k| self.weight(k, mode)).sum()
    }

    pub fn depth(&self, target: &Poset, mode: DepthMode) -> Result<f64, UfgError> {
        Ok(self.candidate(target, mode)?.depth)
    }

    fn candidate(&self, target: &Poset, mode: DepthMode) -> Result<CandidateDepth, UfgError> {
        if target.elements() != self.observed.elements() {
            return Err(PosetError::ElementMismatch.into());
        }
        if self.enumeration.is_empty() {
            return Err(UfgError::NoUfgSets);
        }
        let total = self.total_weight(mode);
        let own = self.observed.index_of(target);
        let mut supported = 0.0;
        let mut supporting_sets = 0;
        let mut member_of_sets = 0;
        for (k, b) in self.bounds.iter().enumerate() {
            if b.contains(target) {
                supported += self.weight(k, mode);
                supporting_sets += 1;
            }
            if own.is_some_and(|i| self.enumeration.sets[k].members.contains(&i)) {
                member_of_sets += 1;
            }
        }
        let depth = if total > 0.0 { supported / total } else { 0.0 };
        Ok(CandidateDepth {
            poset: target.clone(),
            depth,
            multiplicity: own.map_or(0, |i| self.observed.multiplicities()[i]),
            supporting_sets,
            member_of_sets,
        })
    }

    /// Depths for `candidates` (the distinct observed posets when `None`),
    /// with the extremes picked by depth and ties broken toward the smaller
    /// canonical key.
    pub fn rank(&self, candidates: Option<&[Poset]>, mode: DepthMode) -> Result<DepthResult, UfgError> {
        let candidates = candidates.unwrap_or(self.observed.posets());
        let scored = candidates
            .iter()
            .map(|c| self.candidate(c, mode))
            .collect::<Result<Vec<_>, _>>()?;
        let pick = |better: fn(f64, f64) -> bool| {
            let mut best = 0;
            for (i, c) in scored.iter().enumerate().skip(1) {
                let b = &scored[best];
                if better(c.depth, b.depth)
                    || (c.depth == b.depth && c.poset.canonical_cmp(&b.poset).is_lt())
                {
                    best = i;
                }
            }
            best
        };
        let most_central = pick(|a, b| a > b);
        let most_outlying = pick(|a, b| a < b);
        let total = self.total_weight(mode);
        Ok(DepthResult {
            mode,
            ufg_set_count: self.enumeration.len(),
            normalizer: if total > 0.0 { total.recip() } else { 0.0 },
            max_size: self.enumeration.max_size,
            truncated: self.enumeration.truncated,
            distinct_observed: self.observed.len(),
            total_observations: self.observed.total_observations(),
            candidates: scored,
            most_central,
            most_outlying,
        })
    }
}

/// Depth of one poset with respect to the observations.
pub fn depth(observed: &PosetSet, target: &Poset, mode: DepthMode, max_size: usize) -> Result<f64, UfgError> {
    UfgDepth::new(observed, max_size)?.depth(target, mode)
}

/// Depth of every candidate, defaulting to the distinct observed posets.
pub fn rank_by_depth(
    observed: &PosetSet,
    candidates: Option<&[Poset]>,
    mode: DepthMode,
    max_size: usize,
) -> Result<DepthResult, UfgError> {
    if candidates.is_some_and(|c| c.is_empty()) {
        return Err(UfgError::TooFewMembers(0));
    }
    UfgDepth::new(observed, max_size)?.rank(candidates, mode)
}
