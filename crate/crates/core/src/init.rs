//! Initial populations: biased random walks from positive examples, and the
//! classical Grow / Full / RampedHalfHalf generators used for ablations and
//! for mutation subtrees.

use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::ConceptTree;
use crate::kb::{ConceptId, InstanceId, KbError, KnowledgeBase, RoleId, RoleKind, Triple, Value};
use crate::par;
use crate::retrieval::LearningProblem;
use crate::rng::stream_rng;
use crate::splits::{SplitError, SplitTable};

#[derive(Debug, Error, PartialEq)]
pub enum InitError {
    #[error("learning problem has no positive examples")]
    EmptyPositives,
    #[error("primitive set has no leaf candidates")]
    NoLeaves,
    #[error("invalid height range {min}..={max}")]
    HeightRange { min: usize, max: usize },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Split(#[from] SplitError),
}

/// Number of positive examples carrying each (super)type; Thing excluded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeCounts(pub BTreeMap<ConceptId, usize>);

impl TypeCounts {
    pub fn get(&self, c: ConceptId) -> usize {
        self.0.get(&c).copied().unwrap_or(0)
    }
}

pub fn type_counts(kb: &KnowledgeBase, positives: &[InstanceId]) -> Result<TypeCounts, InitError> {
    let mut counts = BTreeMap::new();
    for &e in positives {
        for &c in kb.types_of(e)? {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    Ok(TypeCounts(counts))
}

/// A type of `e` drawn with probability proportional to its count, or
/// `None` when `e` has no types. Zero counts fall back to uniform.
pub fn sample_type<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    e: InstanceId,
    ct: &TypeCounts,
    rng: &mut R,
) -> Result<Option<ConceptId>, InitError> {
    let types = kb.types_of(e)?;
    if types.is_empty() {
        return Ok(None);
    }
    let weights: Vec<usize> = types.iter().map(|&c| ct.get(c)).collect();
    let pick = match WeightedIndex::new(&weights) {
        Ok(dist) => dist.sample(rng),
        Err(_) => rng.gen_range(0..types.len()),
    };
    Ok(Some(types[pick]))
}

/// Turns one asserted `(role, object)` pair into a concept: an existential
/// over a random type of an instance object, a boolean value restriction, or
/// a numeric bound at the threshold nearest to the value.
pub fn role_obj_to_concept<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    triple: Triple,
    table: &SplitTable,
    rng: &mut R,
) -> Result<ConceptTree, InitError> {
    let role = triple.role;
    Ok(match triple.object {
        Value::Instance(o) => {
            let filler = kb
                .types_of(o)?
                .choose(rng)
                .map_or(ConceptTree::Thing, |&c| ConceptTree::Atomic(c));
            ConceptTree::exists(role, filler)
        }
        Value::Bool(b) => ConceptTree::BoolEq(role, b),
        Value::Number(v) => {
            let t = table
                .closest(role, v)
                .ok_or_else(|| SplitError::NoThresholds(kb.role_name(role).to_string()))?;
            if v >= t {
                ConceptTree::DataGe(role, t)
            } else {
                ConceptTree::DataLe(role, t)
            }
        }
    })
}

/// Biased random-walk concept generator.
#[derive(Clone, Debug)]
pub struct Walker<'a> {
    kb: &'a KnowledgeBase,
    ct: TypeCounts,
    max_t: usize,
    table: &'a SplitTable,
    use_data: bool,
}

impl<'a> Walker<'a> {
    pub fn new(kb: &'a KnowledgeBase, ct: TypeCounts, max_t: usize, table: &'a SplitTable) -> Self {
        Walker {
            kb,
            ct,
            max_t,
            table,
            use_data: true,
        }
    }

    /// Drops every data and boolean triple from the walks.
    pub fn without_data(mut self) -> Self {
        self.use_data = false;
        self
    }

    fn usable(&self, t: &Triple) -> bool {
        match self.kb.role_kind(t.role) {
            Ok(RoleKind::Object) => true,
            Ok(RoleKind::Numeric) => self.use_data && !self.table.thresholds(t.role).is_empty(),
            Ok(RoleKind::Boolean) => self.use_data,
            Err(_) => false,
        }
    }

    fn usable_triples(&self, x: InstanceId) -> Result<Vec<Triple>, InitError> {
        Ok(self
            .kb
            .outgoing_triples(x)?
            .iter()
            .filter(|t| self.usable(t))
            .copied()
            .collect())
    }

    /// Up to `max_t` triples of `e`: distinct roles first, then any
    /// remaining triples, never the same triple twice.
    pub fn select_triples<R: Rng + ?Sized>(&self, e: InstanceId, rng: &mut R) -> Result<Vec<Triple>, InitError> {
        let triples = self.usable_triples(e)?;
        let mut roles: Vec<RoleId> = triples.iter().map(|t| t.role).collect();
        roles.dedup();

        let mut picked: Vec<usize> = Vec::new();
        for i in index::sample(rng, roles.len(), self.max_t.min(roles.len())) {
            let r = roles[i];
            let objects: Vec<usize> = (0..triples.len()).filter(|&j| triples[j].role == r).collect();
            picked.push(*objects.choose(rng).expect("role has a triple"));
        }
        if picked.len() < self.max_t {
            let rest: Vec<usize> = (0..triples.len()).filter(|j| !picked.contains(j)).collect();
            let num = (self.max_t - picked.len()).min(rest.len());
            for i in index::sample(rng, rest.len(), num) {
                picked.push(rest[i]);
            }
        }
        Ok(picked.into_iter().map(|j| triples[j]).collect())
    }

    pub fn concept_from_example<R: Rng + ?Sized>(&self, e: InstanceId, rng: &mut R) -> Result<ConceptTree, InitError> {
        let mut conc = sample_type(self.kb, e, &self.ct, rng)?.map_or(ConceptTree::Thing, ConceptTree::Atomic);
        for triple in self.select_triples(e, rng)? {
            let conjunction = rng.gen_bool(0.5);
            let sub = match triple.object {
                Value::Instance(o) => {
                    let onward: Vec<Triple> = self
                        .usable_triples(o)?
                        .into_iter()
                        .filter(|t| t.object != Value::Instance(e))
                        .collect();
                    if onward.is_empty() || rng.gen_bool(0.5) {
                        role_obj_to_concept(self.kb, triple, self.table, rng)?
                    } else {
                        let mut roles: Vec<RoleId> = onward.iter().map(|t| t.role).collect();
                        roles.dedup();
                        let s = *roles.choose(rng).expect("nonempty");
                        let next: Vec<&Triple> = onward.iter().filter(|t| t.role == s).collect();
                        let hop = **next.choose(rng).expect("nonempty");
                        ConceptTree::exists(triple.role, role_obj_to_concept(self.kb, hop, self.table, rng)?)
                    }
                }
                _ => role_obj_to_concept(self.kb, triple, self.table, rng)?,
            };
            conc = if conjunction {
                ConceptTree::and(conc, sub)
            } else {
                ConceptTree::or(conc, sub)
            };
        }
        Ok(conc)
    }

    /// `size` concepts, each from a uniformly drawn positive. Individual `i`
    /// uses sub-stream `i` of a seed drawn from `rng`, so the result does not
    /// depend on how many workers run it.
    pub fn population<R: Rng + ?Sized>(
        &self,
        positives: &[InstanceId],
        size: usize,
        rng: &mut R,
    ) -> Result<Vec<ConceptTree>, InitError> {
        if positives.is_empty() {
            return Err(InitError::EmptyPositives);
        }
        let base: u64 = rng.gen();
        par::map_range(size, |i| {
            let mut r = stream_rng(base, i as u64);
            let e = *positives.choose(&mut r).expect("nonempty");
            self.concept_from_example(e, &mut r)
        })
        .into_iter()
        .collect()
    }
}

pub fn concept_from_example<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    e: InstanceId,
    ct: &TypeCounts,
    max_t: usize,
    table: &SplitTable,
    rng: &mut R,
) -> Result<ConceptTree, InitError> {
    Walker::new(kb, ct.clone(), max_t, table).concept_from_example(e, rng)
}

pub fn population_from_examples<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    size: usize,
    max_t: usize,
    table: &SplitTable,
    rng: &mut R,
) -> Result<Vec<ConceptTree>, InitError> {
    let ct = type_counts(kb, &problem.positives)?;
    Walker::new(kb, ct, max_t, table).population(&problem.positives, size, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeMethod {
    Grow,
    Full,
    RampedHalfHalf,
}

/// Symbols available to the random tree generators.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveSet {
    pub include_thing: bool,
    pub concepts: Vec<ConceptId>,
    pub object_roles: Vec<RoleId>,
    /// Numeric roles paired with their (nonempty) threshold lists.
    pub numeric_roles: Vec<(RoleId, Vec<f64>)>,
    pub boolean_roles: Vec<RoleId>,
    /// Upper bound N for cardinality restrictions, `n ∈ 1..=N`.
    pub max_cardinality: u32,
}

#[derive(Clone, Copy)]
enum Leaf {
    Thing,
    Atomic(usize),
    Le(usize),
    Ge(usize),
    Bool(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Internal {
    Not,
    And,
    Or,
    Exists(RoleId),
    Forall(RoleId),
    Min(RoleId),
    Max(RoleId),
}

impl Internal {
    pub(crate) fn arity(self) -> usize {
        match self {
            Internal::And | Internal::Or => 2,
            _ => 1,
        }
    }
}

impl PrimitiveSet {
    pub fn from_kb(kb: &KnowledgeBase, table: &SplitTable, max_cardinality: u32, use_data: bool) -> Self {
        let numeric_roles = if use_data {
            kb.roles_of_kind(RoleKind::Numeric)
                .into_iter()
                .map(|r| (r, table.thresholds(r).to_vec()))
                .filter(|(_, t)| !t.is_empty())
                .collect()
        } else {
            Vec::new()
        };
        PrimitiveSet {
            include_thing: true,
            concepts: kb.concept_ids().collect(),
            object_roles: kb.roles_of_kind(RoleKind::Object),
            numeric_roles,
            boolean_roles: if use_data {
                kb.roles_of_kind(RoleKind::Boolean)
            } else {
                Vec::new()
            },
            max_cardinality: max_cardinality.max(1),
        }
    }

    fn leaf_count(&self) -> usize {
        self.include_thing as usize
            + self.concepts.len()
            + 2 * self.numeric_roles.len()
            + self.boolean_roles.len()
    }

    fn internal_count(&self) -> usize {
        3 + 4 * self.object_roles.len()
    }

    /// Share of leaf symbols among all symbols.
    fn terminal_ratio(&self) -> f64 {
        let leaves = self.leaf_count() as f64;
        leaves / (leaves + self.internal_count() as f64)
    }

    pub fn random_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ConceptTree, InitError> {
        let n = self.leaf_count();
        if n == 0 {
            return Err(InitError::NoLeaves);
        }
        let mut i = rng.gen_range(0..n);
        let mut leaf = None;
        for (count, make) in [
            (self.include_thing as usize, (|_| Leaf::Thing) as fn(usize) -> Leaf),
            (self.concepts.len(), Leaf::Atomic),
            (self.numeric_roles.len(), Leaf::Le),
            (self.numeric_roles.len(), Leaf::Ge),
            (self.boolean_roles.len(), Leaf::Bool),
        ] {
            if i < count {
                leaf = Some(make(i));
                break;
            }
            i -= count;
        }
        Ok(match leaf.expect("index in range") {
            Leaf::Thing => ConceptTree::Thing,
            Leaf::Atomic(j) => ConceptTree::Atomic(self.concepts[j]),
            Leaf::Le(j) => {
                let (r, ts) = &self.numeric_roles[j];
                ConceptTree::DataLe(*r, *ts.choose(rng).expect("nonempty thresholds"))
            }
            Leaf::Ge(j) => {
                let (r, ts) = &self.numeric_roles[j];
                ConceptTree::DataGe(*r, *ts.choose(rng).expect("nonempty thresholds"))
            }
            Leaf::Bool(j) => ConceptTree::BoolEq(self.boolean_roles[j], rng.gen_bool(0.5)),
        })
    }

    pub(crate) fn random_internal<R: Rng + ?Sized>(&self, rng: &mut R) -> Internal {
        let i = rng.gen_range(0..self.internal_count());
        match i {
            0 => Internal::Not,
            1 => Internal::And,
            2 => Internal::Or,
            _ => {
                let j = i - 3;
                let r = self.object_roles[j / 4];
                match j % 4 {
                    0 => Internal::Exists(r),
                    1 => Internal::Forall(r),
                    2 => Internal::Min(r),
                    _ => Internal::Max(r),
                }
            }
        }
    }

    /// Random internal symbol of the given arity (1 or 2).
    pub(crate) fn random_internal_of_arity<R: Rng + ?Sized>(&self, arity: usize, rng: &mut R) -> Internal {
        if arity == 2 {
            return if rng.gen_bool(0.5) { Internal::And } else { Internal::Or };
        }
        let n = 1 + 4 * self.object_roles.len();
        let i = rng.gen_range(0..n);
        if i == 0 {
            Internal::Not
        } else {
            let j = i - 1;
            let r = self.object_roles[j / 4];
            match j % 4 {
                0 => Internal::Exists(r),
                1 => Internal::Forall(r),
                2 => Internal::Min(r),
                _ => Internal::Max(r),
            }
        }
    }

    pub(crate) fn build<R: Rng + ?Sized>(&self, op: Internal, mut children: Vec<ConceptTree>, rng: &mut R) -> ConceptTree {
        let n = rng.gen_range(1..=self.max_cardinality);
        let first = children.remove(0);
        match op {
            Internal::Not => ConceptTree::not(first),
            Internal::And => ConceptTree::and(first, children.remove(0)),
            Internal::Or => ConceptTree::or(first, children.remove(0)),
            Internal::Exists(r) => ConceptTree::exists(r, first),
            Internal::Forall(r) => ConceptTree::forall(r, first),
            Internal::Min(r) => ConceptTree::min_card(n, r, first),
            Internal::Max(r) => ConceptTree::max_card(n, r, first),
        }
    }

    fn generate<R: Rng + ?Sized>(
        &self,
        depth: usize,
        height: usize,
        min_h: usize,
        full: bool,
        rng: &mut R,
    ) -> Result<ConceptTree, InitError> {
        let stop = depth >= height || (!full && depth >= min_h && rng.gen::<f64>() < self.terminal_ratio());
        if stop {
            return self.random_leaf(rng);
        }
        let op = self.random_internal(rng);
        let children = (0..op.arity())
            .map(|_| self.generate(depth + 1, height, min_h, full, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.build(op, children, rng))
    }
}

/// Random tree with target height drawn uniformly from `min_h..=max_h`.
/// Full puts every leaf at the target height; Grow may stop early once
/// `min_h` is reached; RampedHalfHalf picks one of the two per call.
pub fn random_tree<R: Rng + ?Sized>(
    method: TreeMethod,
    min_h: usize,
    max_h: usize,
    prims: &PrimitiveSet,
    rng: &mut R,
) -> Result<ConceptTree, InitError> {
    if min_h > max_h {
        return Err(InitError::HeightRange { min: min_h, max: max_h });
    }
    if prims.leaf_count() == 0 {
        return Err(InitError::NoLeaves);
    }
    let full = match method {
        TreeMethod::Full => true,
        TreeMethod::Grow => false,
        TreeMethod::RampedHalfHalf => rng.gen_bool(0.5),
    };
    let height = rng.gen_range(min_h..=max_h);
    prims.generate(0, height, min_h, full, rng)
}

/// `size` random trees on per-individual sub-streams (see [`Walker::population`]).
pub fn random_population<R: Rng + ?Sized>(
    method: TreeMethod,
    min_h: usize,
    max_h: usize,
    prims: &PrimitiveSet,
    size: usize,
    rng: &mut R,
) -> Result<Vec<ConceptTree>, InitError> {
    let base: u64 = rng.gen();
    par::map_range(size, |i| {
        let mut r = stream_rng(base, i as u64);
        random_tree(method, min_h, max_h, prims, &mut r)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::tests::family_mini;
    use crate::splits::calculate_splits;
    use std::collections::HashSet;

    fn leftmost_leaf(c: &ConceptTree) -> &ConceptTree {
        match c.children().first() {
            Some(child) if matches!(c, ConceptTree::And(..) | ConceptTree::Or(..)) => leftmost_leaf(child),
            _ => c,
        }
    }

    fn leaf_depths(c: &ConceptTree, depth: usize, out: &mut Vec<usize>) {
        if c.is_leaf() {
            out.push(depth);
        }
        for child in c.children() {
            leaf_depths(child, depth + 1, out);
        }
    }

    fn ids(kb: &KnowledgeBase, names: &[&str]) -> Vec<InstanceId> {
        names.iter().map(|n| kb.instance_id(n).unwrap()).collect()
    }

    fn age_table(kb: &KnowledgeBase) -> SplitTable {
        SplitTable::from_thresholds(10, [(kb.role_id("age").unwrap(), vec![39.0])])
    }

    #[test]
    fn type_counts_examples() {
        let kb = family_mini();
        let c = |n: &str| kb.concept_id(n).unwrap();
        let ct = type_counts(&kb, &ids(&kb, &["ann"])).unwrap();
        assert_eq!(ct.0, BTreeMap::from([(c("Female"), 1), (c("Parent"), 1), (c("Person"), 1)]));
        let ct = type_counts(&kb, &ids(&kb, &["ann", "bob"])).unwrap();
        assert_eq!(
            ct.0,
            BTreeMap::from([(c("Female"), 1), (c("Parent"), 1), (c("Male"), 1), (c("Person"), 2)])
        );
        assert!(type_counts(&kb, &[]).unwrap().0.is_empty());
    }

    #[test]
    fn type_sampling_follows_counts() {
        let kb = family_mini();
        let ct = type_counts(&kb, &ids(&kb, &["ann", "bob"])).unwrap();
        let ann = kb.instance_id("ann").unwrap();
        let types = kb.types_of(ann).unwrap();
        let total: usize = types.iter().map(|&c| ct.get(c)).sum();
        let draws = 100_000;
        let mut rng = stream_rng(7, 0);
        let mut hits: BTreeMap<ConceptId, usize> = BTreeMap::new();
        for _ in 0..draws {
            *hits.entry(sample_type(&kb, ann, &ct, &mut rng).unwrap().unwrap()).or_default() += 1;
        }
        for &c in types {
            let p = ct.get(c) as f64 / total as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            let got = hits[&c] as f64;
            assert!((got - draws as f64 * p).abs() <= 3.0 * sigma, "{c:?}: {got}");
        }
    }

    #[test]
    fn role_obj_to_concept_examples() {
        let kb = family_mini();
        let r = |n: &str| kb.role_id(n).unwrap();
        let c = |n: &str| ConceptTree::Atomic(kb.concept_id(n).unwrap());
        let table = age_table(&kb);
        let bob = kb.instance_id("bob").unwrap();
        let mut seen = HashSet::new();
        let mut rng = stream_rng(1, 0);
        for _ in 0..200 {
            let t = Triple { role: r("married"), object: Value::Instance(bob) };
            seen.insert(role_obj_to_concept(&kb, t, &table, &mut rng).unwrap().serialize(&kb));
        }
        let want: HashSet<String> = [
            ConceptTree::exists(r("married"), c("Male")),
            ConceptTree::exists(r("married"), c("Person")),
        ]
        .iter()
        .map(|t| t.serialize(&kb))
        .collect();
        assert_eq!(seen, want);

        let t = Triple { role: r("employed"), object: Value::Bool(true) };
        assert_eq!(
            role_obj_to_concept(&kb, t, &table, &mut rng).unwrap(),
            ConceptTree::BoolEq(r("employed"), true)
        );
        let t = Triple { role: r("age"), object: Value::Number(42.0) };
        assert_eq!(
            role_obj_to_concept(&kb, t, &table, &mut rng).unwrap(),
            ConceptTree::DataGe(r("age"), 39.0)
        );
        assert!(matches!(
            role_obj_to_concept(&kb, t, &SplitTable::new(10), &mut rng),
            Err(InitError::Split(SplitError::NoThresholds(_)))
        ));
    }

    #[test]
    fn walk_from_ann_starts_with_own_type() {
        let kb = family_mini();
        let table = age_table(&kb);
        let ann = kb.instance_id("ann").unwrap();
        let ct = type_counts(&kb, &[ann]).unwrap();
        let types = kb.types_of(ann).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..500 {
            let c = concept_from_example(&kb, ann, &ct, 2, &table, &mut rng).unwrap();
            match leftmost_leaf(&c) {
                ConceptTree::Atomic(t) => assert!(types.contains(t)),
                other => panic!("unexpected leftmost leaf {other:?}"),
            }
            // maxT = 2 joins at most two subconcepts
            assert!(c.length() <= 1 + 2 * 3 + 2);
        }
    }

    #[test]
    fn walk_from_dan_is_enumerable() {
        let kb = family_mini();
        let table = calculate_splits(
            &kb,
            &LearningProblem::new(ids(&kb, &["ann", "bob"]), ids(&kb, &["cat", "dan"])),
            10,
        )
        .unwrap();
        let dan = kb.instance_id("dan").unwrap();
        let ct = type_counts(&kb, &[dan]).unwrap();
        let mut seen = HashSet::new();
        let mut rng = stream_rng(5, 0);
        for _ in 0..400 {
            seen.insert(concept_from_example(&kb, dan, &ct, 2, &table, &mut rng).unwrap().serialize(&kb));
        }
        let want: HashSet<String> = ["Male", "Person"]
            .iter()
            .flat_map(|t| [format!("and({t}, age <= 39)"), format!("or({t}, age <= 39)")])
            .collect();
        assert_eq!(seen, want);
    }

    #[test]
    fn walk_without_data_skips_data_triples() {
        let kb = family_mini();
        let table = age_table(&kb);
        let ann = kb.instance_id("ann").unwrap();
        let walker = Walker::new(&kb, type_counts(&kb, &[ann]).unwrap(), 4, &table).without_data();
        let mut rng = stream_rng(9, 0);
        for _ in 0..200 {
            assert!(!walker.concept_from_example(ann, &mut rng).unwrap().has_data_restriction());
        }
    }

    #[test]
    fn empty_threshold_roles_are_skipped() {
        let kb = family_mini();
        let dan = kb.instance_id("dan").unwrap();
        let empty = SplitTable::new(10);
        let ct = type_counts(&kb, &[dan]).unwrap();
        let mut rng = stream_rng(2, 0);
        let c = concept_from_example(&kb, dan, &ct, 2, &empty, &mut rng).unwrap();
        assert!(matches!(c, ConceptTree::Atomic(_)));
    }

    #[test]
    fn untyped_example_without_triples_is_thing() {
        let kb = KnowledgeBase::parse("type x Thing\n").unwrap();
        let table = SplitTable::new(10);
        let mut rng = stream_rng(0, 0);
        let c = concept_from_example(&kb, InstanceId(0), &TypeCounts::default(), 2, &table, &mut rng).unwrap();
        assert_eq!(c, ConceptTree::Thing);
    }

    #[test]
    fn triple_selection_prefers_distinct_roles() {
        let text = "objprop r\nobjprop s\nrel e r a\nrel e r b\nrel e r c\nrel e s d\n";
        let kb = KnowledgeBase::parse(text).unwrap();
        let table = SplitTable::new(10);
        let e = kb.instance_id("e").unwrap();
        let s = kb.role_id("s").unwrap();
        let mut rng = stream_rng(4, 0);
        for max_t in 1..=5 {
            let walker = Walker::new(&kb, TypeCounts::default(), max_t, &table);
            for _ in 0..50 {
                let picked = walker.select_triples(e, &mut rng).unwrap();
                assert_eq!(picked.len(), max_t.min(4));
                if max_t >= 2 {
                    assert!(picked.iter().any(|t| t.role == s));
                }
                for (i, a) in picked.iter().enumerate() {
                    assert!(!picked[i + 1..].contains(a));
                }
            }
        }
    }

    /// The kinship neighbourhood used to illustrate the walk: a grandfather
    /// married to a mother whose sister is a parent, with a child.
    #[test]
    fn illustrated_walk_is_reachable() {
        let text = "class Male\nclass Female\nclass Grandfather\nclass Father\nclass Mother\n\
                    class Parent\nclass Child\n\
                    objprop married\nobjprop hasSibling\nobjprop hasParent\nobjprop hasChild\n\
                    type p1 Male\ntype p1 Grandfather\ntype p1 Father\n\
                    type p2 Mother\ntype p2 Female\ntype p3 Female\ntype p3 Parent\n\
                    type p5 Child\ntype p5 Male\ntype p4 Thing\n\
                    rel p1 married p2\nrel p2 married p1\nrel p2 hasSibling p3\n\
                    rel p1 hasParent p4\nrel p1 hasChild p5\nrel p5 hasParent p1\n";
        let kb = KnowledgeBase::parse(text).unwrap();
        let p1 = kb.instance_id("p1").unwrap();
        let problem = LearningProblem::new(vec![p1], vec![]);
        let table = SplitTable::new(10);
        let target = "and(and(Male, exists married.(exists hasSibling.(Parent))), exists hasChild.(Child))";
        let mut rng = stream_rng(11, 0);
        let pop = population_from_examples(&kb, &problem, 20_000, 2, &table, &mut rng).unwrap();
        assert!(pop.iter().any(|c| c.serialize(&kb) == target));
    }

    #[test]
    fn population_size_and_determinism() {
        let kb = family_mini();
        let table = age_table(&kb);
        let problem = LearningProblem::new(ids(&kb, &["ann", "bob"]), ids(&kb, &["cat", "dan"]));
        let a = population_from_examples(&kb, &problem, 800, 2, &table, &mut stream_rng(1, 0)).unwrap();
        let b = population_from_examples(&kb, &problem, 800, 2, &table, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(a.len(), 800);
        assert_eq!(a, b);
        let one = population_from_examples(&kb, &problem, 1, 2, &table, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(one.len(), 1);
        for c in &a {
            let ConceptTree::Atomic(t) = leftmost_leaf(c) else { panic!("{c:?}") };
            assert!(problem.positives.iter().any(|&p| kb.types_of(p).unwrap().contains(t)));
            c.validate(&kb).unwrap();
        }
        let empty = LearningProblem::new(vec![], ids(&kb, &["cat"]));
        assert_eq!(
            population_from_examples(&kb, &empty, 5, 2, &table, &mut stream_rng(1, 0)),
            Err(InitError::EmptyPositives)
        );
    }

    fn prims() -> (KnowledgeBase, PrimitiveSet) {
        let kb = family_mini();
        let p = PrimitiveSet::from_kb(&kb, &age_table(&kb), 5, true);
        (kb, p)
    }

    #[test]
    fn full_trees_have_uniform_leaf_depth() {
        let (kb, p) = prims();
        let mut rng = stream_rng(6, 0);
        for _ in 0..200 {
            let leaf = random_tree(TreeMethod::Full, 0, 0, &p, &mut rng).unwrap();
            assert!(leaf.is_leaf());
            let t = random_tree(TreeMethod::Full, 2, 2, &p, &mut rng).unwrap();
            let mut depths = Vec::new();
            leaf_depths(&t, 0, &mut depths);
            assert!(depths.iter().all(|&d| d == 2), "{}", t.serialize(&kb));
            t.validate(&kb).unwrap();
        }
    }

    #[test]
    fn ramped_half_half_mixes_shapes() {
        let (kb, p) = prims();
        let mut rng = stream_rng(8, 0);
        let (mut full_shaped, mut ragged) = (0, 0);
        for _ in 0..10_000 {
            let t = random_tree(TreeMethod::RampedHalfHalf, 1, 3, &p, &mut rng).unwrap();
            assert!((1..=3).contains(&t.depth()));
            let mut depths = Vec::new();
            leaf_depths(&t, 0, &mut depths);
            if depths.iter().all(|&d| d == depths[0]) {
                full_shaped += 1;
            } else {
                ragged += 1;
            }
            t.validate(&kb).unwrap();
        }
        // unary chains from Grow are also uniform, so only Full guarantees none are ragged
        assert!(full_shaped > 5000 && ragged > 100, "{full_shaped} / {ragged}");
    }

    #[test]
    fn random_tree_errors() {
        let (_, mut p) = prims();
        let mut rng = stream_rng(0, 0);
        assert!(matches!(
            random_tree(TreeMethod::Grow, 3, 1, &p, &mut rng),
            Err(InitError::HeightRange { .. })
        ));
        p.include_thing = false;
        p.concepts.clear();
        p.numeric_roles.clear();
        p.boolean_roles.clear();
        assert_eq!(random_tree(TreeMethod::Grow, 1, 2, &p, &mut rng), Err(InitError::NoLeaves));
    }

    #[test]
    fn primitive_set_without_data() {
        let kb = family_mini();
        let p = PrimitiveSet::from_kb(&kb, &age_table(&kb), 5, false);
        let mut rng = stream_rng(12, 0);
        for _ in 0..500 {
            let t = random_tree(TreeMethod::RampedHalfHalf, 1, 4, &p, &mut rng).unwrap();
            assert!(!t.has_data_restriction());
        }
    }
}
