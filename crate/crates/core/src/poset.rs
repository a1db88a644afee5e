//! Partial orders over a shared roster of methods and the closure operator
//! that maps a set of posets to every poset sandwiched between their
//! intersection and their union.
//!
//! Relations are stored as one `u64` bit row per element, so rosters are
//! limited to [`MAX_ELEMENTS`] members. Bit `b` of row `a` set means the pair
//! `(a, b)` is in the relation, read as "a is ranked at least as high as b".

use std::cmp::Ordering;
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ELEMENTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosetError {
    #[error("posets are defined over different element rosters")]
    ElementMismatch,
    #[error("roster has {0} elements; at most {MAX_ELEMENTS} are supported")]
    TooManyElements(usize),
    #[error("element {0:?} appears more than once in the roster")]
    DuplicateElement(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("relation is not a partial order: {0}")]
    NotAPartialOrder(&'static str),
    #[error("a nonempty set of posets is required")]
    EmptySet,
}

/// Ordered, duplicate-free roster of element names shared by posets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Elements(Arc<[String]>);

impl Elements {
    pub fn new<I, S>(names: I) -> Result<Self, PosetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_ELEMENTS {
            return Err(PosetError::TooManyElements(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PosetError::DuplicateElement(n.clone()));
            }
        }
        Ok(Elements(names.into()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.0[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }
}

impl fmt::Debug for Elements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// A binary relation over a roster; not necessarily a partial order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    elements: Elements,
    rows: Vec<u64>,
}

impl Relation {
    pub fn empty(elements: Elements) -> Self {
        let rows = vec![0; elements.len()];
        Relation { elements, rows }
    }

    pub fn identity(elements: Elements) -> Self {
        let rows = (0..elements.len()).map(|i| 1u64 << i).collect();
        Relation { elements, rows }
    }

    pub fn elements(&self) -> &Elements {
        &self.elements
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a] >> b & 1 == 1
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a] |= 1 << b;
    }

    pub fn is_reflexive(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| r >> i & 1 == 1)
    }

    pub fn is_antisymmetric(&self) -> bool {
        let m = self.rows.len();
        (0..m).all(|a| (a + 1..m).all(|b| !(self.contains(a, b) && self.contains(b, a))))
    }

    pub fn is_transitive(&self) -> bool {
        // for every (a, b): row(b) must be contained in row(a)
        self.rows.iter().all(|&ra| {
            let mut bits = ra;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if self.rows[b] & !ra != 0 {
                    return false;
                }
            }
            true
        })
    }

    pub fn is_partial_order(&self) -> bool {
        self.is_reflexive() && self.is_transitive() && self.is_antisymmetric()
    }

    pub fn is_subset_of(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect();
        Relation { elements: self.elements.clone(), rows }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect();
        Relation { elements: self.elements.clone(), rows }
    }

    /// Warshall closure on bit rows.
    pub fn transitive_closure(&self) -> Relation {
        let mut rows = self.rows.clone();
        for k in 0..rows.len() {
            let rk = rows[k];
            for r in rows.iter_mut() {
                if *r >> k & 1 == 1 {
                    *r |= rk;
                }
            }
        }
        Relation { elements: self.elements.clone(), rows }
    }

    /// Pairs `(a, b)` with `a != b`, row-major.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, &r) in self.rows.iter().enumerate() {
            let mut bits = r & !(1u64 << a);
            while bits != 0 {
                out.push((a, bits.trailing_zeros() as usize));
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn into_poset(self) -> Result<Poset, PosetError> {
        if !self.is_reflexive() {
            return Err(PosetError::NotAPartialOrder("not reflexive"));
        }
        if !self.is_antisymmetric() {
            return Err(PosetError::NotAPartialOrder("not antisymmetric"));
        }
        if !self.is_transitive() {
            return Err(PosetError::NotAPartialOrder("not transitive"));
        }
        Ok(Poset(self))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<(&str, &str)> = self
            .strict_pairs()
            .into_iter()
            .map(|(a, b)| (self.elements.name(a), self.elements.name(b)))
            .collect();
        f.debug_struct("Relation")
            .field("elements", &self.elements)
            .field("strict", &pairs)
            .finish()
    }
}

/// A reflexive, transitive, antisymmetric relation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poset(Relation);

impl Poset {
    /// The order with no strict pairs: every element incomparable to every other.
    pub fn antichain(elements: Elements) -> Self {
        Poset(Relation::identity(elements))
    }

    /// Builds the reflexive closure of the given strict pairs and validates it.
    /// The pairs must already be transitively closed.
    pub fn from_strict_pairs(
        elements: Elements,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PosetError> {
        let mut rel = Relation::identity(elements);
        for (a, b) in pairs {
            if a >= rel.rows.len() || b >= rel.rows.len() {
                return Err(PosetError::UnknownElement(format!("index {}", a.max(b))));
            }
            rel.insert(a, b);
        }
        rel.into_poset()
    }

    pub fn from_named_pairs(elements: Elements, pairs: &[(&str, &str)]) -> Result<Self, PosetError> {
        let idx = |n: &str| {
            elements
                .index_of(n)
                .ok_or_else(|| PosetError::UnknownElement(n.to_string()))
        };
        let pairs = pairs
            .iter()
            .map(|(a, b)| Ok((idx(a)?, idx(b)?)))
            .collect::<Result<Vec<_>, PosetError>>()?;
        Poset::from_strict_pairs(elements.clone(), pairs)
    }

    pub fn relation(&self) -> &Relation {
        &self.0
    }

    pub fn elements(&self) -> &Elements {
        &self.0.elements
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.0.contains(a, b)
    }

    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        self.0.strict_pairs()
    }

    pub fn is_subset_of(&self, other: &Poset) -> bool {
        self.0.is_subset_of(&other.0)
    }

    /// Row-major bit serialization; defines identity and the canonical order
    /// of posets.
    pub fn canonical_key(&self) -> &[u64] {
        &self.0.rows
    }

    pub fn canonical_hex(&self) -> String {
        self.0.rows.iter().map(|r| format!("{r:016x}")).collect()
    }

    pub fn canonical_cmp(&self, other: &Poset) -> Ordering {
        self.canonical_key().cmp(other.canonical_key())
    }

    /// Same order on another roster of equal size; positions are preserved.
    pub fn relabel(&self, elements: Elements) -> Result<Poset, PosetError> {
        if elements.len() != self.elements().len() {
            return Err(PosetError::ElementMismatch);
        }
        Ok(Poset(Relation { elements, rows: self.0.rows.clone() }))
    }
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<(&str, &str)> = self
            .strict_pairs()
            .into_iter()
            .map(|(a, b)| (self.elements().name(a), self.elements().name(b)))
            .collect();
        write!(f, "Poset{pairs:?}")
    }
}

/// JSON shape: element roster plus strict pairs by name.
#[derive(Serialize, Deserialize)]
struct PosetRepr {
    elements: Vec<String>,
    edges: Vec<[String; 2]>,
}

impl Serialize for Poset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let els = self.elements();
        PosetRepr {
            elements: els.names().to_vec(),
            edges: self
                .strict_pairs()
                .into_iter()
                .map(|(a, b)| [els.name(a).to_string(), els.name(b).to_string()])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PosetRepr::deserialize(d)?;
        let elements = Elements::new(repr.elements).map_err(serde::de::Error::custom)?;
        let pairs: Vec<(&str, &str)> = repr.edges.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
        Poset::from_named_pairs(elements, &pairs).map_err(serde::de::Error::custom)
    }
}

fn check_same_elements<'a>(posets: &[&'a Poset]) -> Result<&'a Elements, PosetError> {
    let first = posets.first().ok_or(PosetError::EmptySet)?;
    let els = first.elements();
    if posets.iter().any(|p| p.elements() != els) {
        return Err(PosetError::ElementMismatch);
    }
    Ok(els)
}

/// Lower and upper bound of the closure of a set of posets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureBounds {
    /// Intersection of the members; always a poset.
    pub lower: Poset,
    /// Union of the members; may fail transitivity or antisymmetry.
    pub upper: Relation,
}

impl ClosureBounds {
    pub fn of(posets: &[&Poset]) -> Result<Self, PosetError> {
        check_same_elements(posets)?;
        let mut lower = posets[0].0.clone();
        let mut upper = posets[0].0.clone();
        for p in &posets[1..] {
            lower = lower.intersection(&p.0);
            upper = upper.union(&p.0);
        }
        Ok(ClosureBounds { lower: Poset(lower), upper })
    }

    pub fn contains(&self, q: &Poset) -> bool {
        self.lower.0.is_subset_of(&q.0) && q.0.is_subset_of(&self.upper)
    }

    /// Visits every poset in the closure, smallest decisions first. Stops
    /// early when `visit` breaks.
    pub fn for_each<B>(&self, visit: impl FnMut(&Poset) -> ControlFlow<B>) -> ControlFlow<B> {
        for_each_between(&self.lower, &self.upper, visit)
    }
}

/// Enumerates the posets `q` with `lower ⊆ q ⊆ upper`.
///
/// Each strict pair of `upper` not forced by `lower` is decided in row-major
/// order. Including a pair adds its transitive consequences immediately;
/// a branch dies when those consequences leave `upper`, reinstate a pair
/// excluded earlier, or break antisymmetry. Every emitted relation is a
/// poset and each poset is emitted once.
pub fn for_each_between<B>(
    lower: &Poset,
    upper: &Relation,
    mut visit: impl FnMut(&Poset) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if lower.elements() != upper.elements() || !lower.0.is_subset_of(upper) {
        return ControlFlow::Continue(());
    }
    let free: Vec<(usize, usize)> = upper
        .strict_pairs()
        .into_iter()
        .filter(|&(a, b)| !lower.contains(a, b))
        .collect();
    let excluded = vec![0u64; upper.rows.len()];
    descend(&free, 0, lower.clone(), excluded, upper, &mut visit)
}

fn descend<B>(
    free: &[(usize, usize)],
    k: usize,
    current: Poset,
    mut excluded: Vec<u64>,
    upper: &Relation,
    visit: &mut impl FnMut(&Poset) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let Some(&(a, b)) = free.get(k) else {
        return visit(&current);
    };
    if current.contains(a, b) {
        return descend(free, k + 1, current, excluded, upper, visit);
    }
    if !current.contains(b, a) {
        let mut grown = current.0.clone();
        grown.insert(a, b);
        let grown = grown.transitive_closure();
        let admissible = grown.is_subset_of(upper)
            && grown.rows.iter().zip(&excluded).all(|(r, e)| r & e == 0)
            && grown.is_antisymmetric();
        if admissible {
            // the exclude branch below needs its own copy of `excluded`
            let mut with_b = excluded.clone();
            with_b[a] |= 1 << b;
            descend(free, k + 1, current, with_b, upper, visit)?;
            return descend(free, k + 1, Poset(grown), excluded, upper, visit);
        }
    }
    excluded[a] |= 1 << b;
    descend(free, k + 1, current, excluded, upper, visit)
}

/// Setwise intersection of the members.
pub fn intersect(posets: &[&Poset]) -> Result<Poset, PosetError> {
    ClosureBounds::of(posets).map(|b| b.lower)
}

/// Setwise union of the members; check [`Relation::is_partial_order`] for
/// validity.
pub fn union_relation(posets: &[&Poset]) -> Result<Relation, PosetError> {
    ClosureBounds::of(posets).map(|b| b.upper)
}

/// Every poset between the intersection and the union of `posets`, in
/// canonical order.
pub fn closure(posets: &[&Poset]) -> Result<Vec<Poset>, PosetError> {
    let bounds = ClosureBounds::of(posets)?;
    let mut out = Vec::new();
    let _ = bounds.for_each(|q| {
        out.push(q.clone());
        ControlFlow::<()>::Continue(())
    });
    out.sort_by(Poset::canonical_cmp);
    Ok(out)
}

/// Membership in the closure without enumerating it.
pub fn contains_in_closure(posets: &[&Poset], q: &Poset) -> Result<bool, PosetError> {
    let bounds = ClosureBounds::of(posets)?;
    if q.elements() != bounds.lower.elements() {
        return Err(PosetError::ElementMismatch);
    }
    Ok(bounds.contains(q))
}

/// Distinct posets over one roster, with observation counts, kept in
/// canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct PosetSet {
    elements: Elements,
    posets: Vec<Poset>,
    multiplicities: Vec<usize>,
}

impl PosetSet {
    pub fn from_observations<I: IntoIterator<Item = Poset>>(observations: I) -> Result<Self, PosetError> {
        let mut all: Vec<Poset> = observations.into_iter().collect();
        let elements = all.first().ok_or(PosetError::EmptySet)?.elements().clone();
        if all.iter().any(|p| *p.elements() != elements) {
            return Err(PosetError::ElementMismatch);
        }
        all.sort_by(Poset::canonical_cmp);
        let mut posets: Vec<Poset> = Vec::new();
        let mut multiplicities = Vec::new();
        for p in all {
            if posets.last() == Some(&p) {
                *multiplicities.last_mut().unwrap() += 1;
            } else {
                posets.push(p);
                multiplicities.push(1);
            }
        }
        Ok(PosetSet { elements, posets, multiplicities })
    }

    pub fn elements(&self) -> &Elements {
        &self.elements
    }

    /// Number of distinct posets.
    pub fn len(&self) -> usize {
        self.posets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posets.is_empty()
    }

    pub fn posets(&self) -> &[Poset] {
        &self.posets
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn total_observations(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn index_of(&self, p: &Poset) -> Option<usize> {
        self.posets.binary_search_by(|q| q.canonical_cmp(p)).ok()
    }

    pub fn multiplicity(&self, p: &Poset) -> usize {
        self.index_of(p).map_or(0, |i| self.multiplicities[i])
    }

    /// Empirical probability of the `i`-th distinct poset.
    pub fn frequency(&self, i: usize) -> f64 {
        self.multiplicities[i] as f64 / self.total_observations() as f64
    }

    pub fn refs(&self) -> Vec<&Poset> {
        self.posets.iter().collect()
    }

    pub fn intersect(&self) -> Poset {
        intersect(&self.refs()).expect("PosetSet is nonempty and homogeneous")
    }

    pub fn union_relation(&self) -> Relation {
        union_relation(&self.refs()).expect("PosetSet is nonempty and homogeneous")
    }

    pub fn closure(&self) -> Vec<Poset> {
        closure(&self.refs()).expect("PosetSet is nonempty and homogeneous")
    }

    pub fn contains_in_closure(&self, q: &Poset) -> Result<bool, PosetError> {
        contains_in_closure(&self.refs(), q)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn roster(n: usize) -> Elements {
        Elements::new((1..=n).map(|i| format!("m{i}"))).unwrap()
    }

    /// The four posets of the worked ufg example, on roster m1..m4.
    pub(crate) fn worked_example() -> [Poset; 4] {
        let els = roster(4);
        let p = |pairs: &[(&str, &str)]| Poset::from_named_pairs(els.clone(), pairs).unwrap();
        [
            p(&[("m1", "m2")]),
            p(&[("m1", "m3")]),
            p(&[("m1", "m2"), ("m2", "m3"), ("m1", "m3")]),
            p(&[("m1", "m4")]),
        ]
    }

    /// All posets on `m` elements, by filtering every strict relation.
    pub(crate) fn all_posets(m: usize) -> Vec<Poset> {
        let els = roster(m);
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let mut out = Vec::new();
        for mask in 0u64..(1 << pairs.len()) {
            let mut rel = Relation::identity(els.clone());
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    rel.insert(a, b);
                }
            }
            if let Ok(p) = rel.into_poset() {
                out.push(p);
            }
        }
        out.sort_by(Poset::canonical_cmp);
        out
    }

    #[test]
    fn poset_counts_match_known_sequence() {
        // labeled posets: 1, 3, 19, 219
        let counts: Vec<usize> = (1..=4).map(|m| all_posets(m).len()).collect();
        assert_eq!(counts, vec![1, 3, 19, 219]);
    }

    #[test]
    fn validation_rejects_non_orders() {
        let els = roster(3);
        assert!(Poset::from_named_pairs(els.clone(), &[("m1", "m2"), ("m2", "m3")]).is_err());
        assert!(Poset::from_named_pairs(els.clone(), &[("m1", "m2"), ("m2", "m1")]).is_err());
        assert!(Poset::from_named_pairs(els.clone(), &[("m1", "m9")]).is_err());
        let mut rel = Relation::empty(els);
        rel.insert(0, 1);
        assert_eq!(rel.into_poset(), Err(PosetError::NotAPartialOrder("not reflexive")));
        assert!(Elements::new(["a", "a"]).is_err());
        assert!(Elements::new((0..65).map(|i| i.to_string())).is_err());
    }

    #[test]
    fn intersect_examples() {
        let [p1, p2, p3, _] = worked_example();
        assert_eq!(intersect(&[&p1]).unwrap(), p1);
        assert_eq!(intersect(&[&p1, &p2]).unwrap(), Poset::antichain(roster(4)));

        let els = roster(3);
        let chain = Poset::from_named_pairs(els.clone(), &[("m1", "m2"), ("m2", "m3"), ("m1", "m3")]).unwrap();
        let rev = Poset::from_named_pairs(els.clone(), &[("m2", "m1"), ("m3", "m2"), ("m3", "m1")]).unwrap();
        assert_eq!(intersect(&[&chain, &rev]).unwrap(), Poset::antichain(els));
        assert_eq!(intersect(&[&p1, &p3]).unwrap(), p1);
    }

    #[test]
    fn union_examples() {
        let [p1, p2, _, _] = worked_example();
        let u = union_relation(&[&p1]).unwrap();
        assert_eq!(&u, p1.relation());
        assert!(u.is_partial_order());

        let u = union_relation(&[&p1, &p2]).unwrap();
        let expected = Poset::from_named_pairs(roster(4), &[("m1", "m2"), ("m1", "m3")]).unwrap();
        assert_eq!(&u, expected.relation());
        assert!(u.is_partial_order());

        let els = roster(2);
        let ab = Poset::from_named_pairs(els.clone(), &[("m1", "m2")]).unwrap();
        let ba = Poset::from_named_pairs(els, &[("m2", "m1")]).unwrap();
        let u = union_relation(&[&ab, &ba]).unwrap();
        assert!(!u.is_antisymmetric());
        assert!(!u.is_partial_order());
    }

    #[test]
    fn closure_examples() {
        let [p1, p2, p3, p4] = worked_example();
        assert_eq!(closure(&[&p1]).unwrap(), vec![p1.clone()]);

        let c = closure(&[&p1, &p2]).unwrap();
        assert!(!c.contains(&p3));
        let both = Poset::from_named_pairs(roster(4), &[("m1", "m2"), ("m1", "m3")]).unwrap();
        let mut expected = vec![Poset::antichain(roster(4)), p1.clone(), p2.clone(), both];
        expected.sort_by(Poset::canonical_cmp);
        assert_eq!(c, expected);

        assert!(contains_in_closure(&[&p1], &p1).unwrap());
        assert!(!contains_in_closure(&[&p1, &p2], &p3).unwrap());
        assert!(!contains_in_closure(&[&p1, &p2, &p3], &p4).unwrap());
    }

    #[test]
    fn closure_rejects_mixed_rosters() {
        let a = Poset::antichain(roster(3));
        let b = Poset::antichain(roster(4));
        assert_eq!(closure(&[&a, &b]), Err(PosetError::ElementMismatch));
        assert_eq!(contains_in_closure(&[&a], &b), Err(PosetError::ElementMismatch));
        assert_eq!(closure(&[]), Err(PosetError::EmptySet));
    }

    #[test]
    fn enumeration_matches_filter_over_all_posets() {
        let all = all_posets(4);
        // a handful of bound pairs taken from the full poset list
        for (i, j) in [(0, 218), (3, 100), (17, 17), (50, 150), (5, 200), (0, 0)] {
            let members = [&all[i], &all[j]];
            let bounds = ClosureBounds::of(&members).unwrap();
            let oracle: Vec<Poset> = all.iter().filter(|q| bounds.contains(q)).cloned().collect();
            assert_eq!(closure(&members).unwrap(), oracle, "bounds from {i}, {j}");
        }
    }

    #[test]
    fn poset_set_deduplicates_in_canonical_order() {
        let [p1, p2, p3, _] = worked_example();
        let set = PosetSet::from_observations([p3.clone(), p1.clone(), p3.clone(), p2.clone(), p3.clone()]).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.total_observations(), 5);
        assert_eq!(set.multiplicity(&p3), 3);
        assert!(set.posets().windows(2).all(|w| w[0].canonical_cmp(&w[1]) == Ordering::Less));
        assert!((set.frequency(set.index_of(&p3).unwrap()) - 0.6).abs() < 1e-15);
        assert_eq!(PosetSet::from_observations([]), Err(PosetError::EmptySet));
    }

    #[test]
    fn json_round_trip() {
        let [_, _, p3, _] = worked_example();
        let json = serde_json::to_string(&p3).unwrap();
        assert_eq!(
            json,
            r#"{"elements":["m1","m2","m3","m4"],"edges":[["m1","m2"],["m1","m3"],["m2","m3"]]}"#
        );
        let back: Poset = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p3);
        assert!(serde_json::from_str::<Poset>(r#"{"elements":["a","b"],"edges":[["a","b"],["b","a"]]}"#).is_err());
    }
}
