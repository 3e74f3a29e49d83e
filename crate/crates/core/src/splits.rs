//! Information-gain thresholds for numeric data roles.
//!
//! Thresholds are computed once per learning problem, level by level over a
//! growing list of example subsets, and later used both by the random-walk
//! initializer (nearest threshold) and by mutation (random threshold).

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::kb::{InstanceId, KbError, KnowledgeBase, RoleId, RoleKind};
use crate::retrieval::LearningProblem;

/// Gains closer than this are treated as equal.
pub const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("entropy of an empty example set")]
    EmptySet,
    #[error("role `{0}` is not a numeric data role")]
    NotNumeric(String),
    #[error("no thresholds available for role `{0}`")]
    NoThresholds(String),
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledExample {
    pub instance: InstanceId,
    pub positive: bool,
}

/// One entry per (instance, label); an instance in both example sets
/// contributes one entry for each label.
pub fn labeled_examples(problem: &LearningProblem) -> Vec<LabeledExample> {
    let pos = problem.positives.iter().map(|&instance| LabeledExample {
        instance,
        positive: true,
    });
    let neg = problem.negatives.iter().map(|&instance| LabeledExample {
        instance,
        positive: false,
    });
    pos.chain(neg).collect()
}

/// Binary entropy in bits.
pub fn entropy(n_pos: usize, n_neg: usize) -> Result<f64, SplitError> {
    let total = n_pos + n_neg;
    if total == 0 {
        return Err(SplitError::EmptySet);
    }
    let term = |n: usize| {
        if n == 0 {
            0.0
        } else {
            let p = n as f64 / total as f64;
            -p * p.log2()
        }
    };
    Ok(term(n_pos) + term(n_neg))
}

fn class_counts(examples: &[LabeledExample]) -> (usize, usize) {
    let pos = examples.iter().filter(|e| e.positive).count();
    (pos, examples.len() - pos)
}

/// Gain of a partition given `(pos, neg)` counts on each side. The parent
/// distribution is the union of both sides, so the gain is never negative.
fn partition_gain(left: (usize, usize), right: (usize, usize)) -> f64 {
    let nl = left.0 + left.1;
    let nr = right.0 + right.1;
    if nl == 0 || nr == 0 {
        return 0.0;
    }
    let total = (nl + nr) as f64;
    let parent = entropy(left.0 + right.0, left.1 + right.1).expect("nonempty");
    let h_l = entropy(left.0, left.1).expect("nonempty");
    let h_r = entropy(right.0, right.1).expect("nonempty");
    (parent - (nl as f64 / total * h_l + nr as f64 / total * h_r)).max(0.0)
}

fn numeric_values(kb: &KnowledgeBase, d: RoleId) -> Result<&[Vec<f64>], SplitError> {
    match kb.role_kind(d)? {
        RoleKind::Numeric => Ok(kb.numeric_table(d)?),
        _ => Err(SplitError::NotNumeric(kb.role_name(d).to_string())),
    }
}

/// `(E_L, E_R)` for threshold `t`: an example is on the left if some value is
/// `<= t` and on the right if some value is `> t`.
pub fn partition(
    kb: &KnowledgeBase,
    examples: &[LabeledExample],
    d: RoleId,
    t: f64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>), SplitError> {
    let values = numeric_values(kb, d)?;
    let left = examples
        .iter()
        .filter(|e| values[e.instance.index()].first().is_some_and(|&u| u <= t))
        .copied()
        .collect();
    let right = examples
        .iter()
        .filter(|e| values[e.instance.index()].last().is_some_and(|&u| u > t))
        .copied()
        .collect();
    Ok((left, right))
}

pub fn information_gain(
    kb: &KnowledgeBase,
    examples: &[LabeledExample],
    d: RoleId,
    threshold: f64,
) -> Result<f64, SplitError> {
    let (left, right) = partition(kb, examples, d, threshold)?;
    Ok(partition_gain(class_counts(&left), class_counts(&right)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub threshold: f64,
    pub gain: f64,
    pub left: Vec<LabeledExample>,
    pub right: Vec<LabeledExample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitSearch {
    pub best: Option<Split>,
    /// Number of candidate midpoints whose gain was computed.
    pub evaluated: usize,
}

/// Best midpoint split of `examples` on `d`; `None` when fewer than two
/// distinct values exist or no candidate has positive gain.
pub fn best_split(
    kb: &KnowledgeBase,
    examples: &[LabeledExample],
    d: RoleId,
) -> Result<Option<Split>, SplitError> {
    Ok(search_split(kb, examples, d, true)?.best)
}

/// Midpoint search with optional boundary pruning: the midpoint between two
/// adjacent values is skipped when every example carrying either value is
/// single-valued and all of them share one class.
pub fn search_split(
    kb: &KnowledgeBase,
    examples: &[LabeledExample],
    d: RoleId,
    prune: bool,
) -> Result<SplitSearch, SplitError> {
    let values = numeric_values(kb, d)?;

    // (value, positive, single-valued) for every value of every example
    let mut points: Vec<(f64, bool, bool)> = Vec::new();
    let mut mins: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut maxs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for e in examples {
        let vals = &values[e.instance.index()];
        if let (Some(&lo), Some(&hi)) = (vals.first(), vals.last()) {
            let single = vals.len() == 1;
            points.extend(vals.iter().map(|&v| (v, e.positive, single)));
            mins[e.positive as usize].push(lo);
            maxs[e.positive as usize].push(hi);
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    for v in mins.iter_mut().chain(maxs.iter_mut()) {
        v.sort_by(f64::total_cmp);
    }

    // Per distinct value: (value, has pos, has neg, all single-valued).
    let mut groups: Vec<(f64, bool, bool, bool)> = Vec::new();
    for &(v, positive, single) in &points {
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                g.1 |= positive;
                g.2 |= !positive;
                g.3 &= single;
            }
            _ => groups.push((v, positive, !positive, single)),
        }
    }

    let count_le = |sorted: &[f64], t: f64| sorted.partition_point(|&u| u <= t);
    let mut best: Option<(f64, f64)> = None;
    let mut evaluated = 0;
    for pair in groups.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if prune {
            let pure_pos = a.1 && b.1 && !a.2 && !b.2;
            let pure_neg = a.2 && b.2 && !a.1 && !b.1;
            if (pure_pos || pure_neg) && a.3 && b.3 {
                continue;
            }
        }
        let t = (a.0 + b.0) / 2.0;
        evaluated += 1;
        let left = (count_le(&mins[1], t), count_le(&mins[0], t));
        let right = (
            maxs[1].len() - count_le(&maxs[1], t),
            maxs[0].len() - count_le(&maxs[0], t),
        );
        let gain = partition_gain(left, right);
        if best.is_none_or(|(_, g)| gain > g + GAIN_EPS) {
            best = Some((t, gain));
        }
    }

    let best = match best {
        Some((threshold, gain)) if gain > GAIN_EPS => {
            let (left, right) = partition(kb, examples, d, threshold)?;
            Some(Split {
                threshold,
                gain,
                left,
                right,
            })
        }
        _ => None,
    };
    Ok(SplitSearch { best, evaluated })
}

/// Ascending, duplicate-free thresholds per numeric role.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitTable {
    pub k: usize,
    thresholds: BTreeMap<RoleId, Vec<f64>>,
}

impl SplitTable {
    pub fn new(k: usize) -> Self {
        SplitTable {
            k,
            thresholds: BTreeMap::new(),
        }
    }

    /// Builds a table directly; lists are sorted and deduplicated.
    pub fn from_thresholds(k: usize, entries: impl IntoIterator<Item = (RoleId, Vec<f64>)>) -> Self {
        let mut table = SplitTable::new(k);
        for (role, mut list) in entries {
            list.sort_by(f64::total_cmp);
            list.dedup();
            table.thresholds.insert(role, list);
        }
        table
    }

    pub fn thresholds(&self, d: RoleId) -> &[f64] {
        self.thresholds.get(&d).map_or(&[], Vec::as_slice)
    }

    pub fn roles(&self) -> impl Iterator<Item = RoleId> + '_ {
        self.thresholds.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Threshold nearest to `o`; ties go to the smaller threshold.
    pub fn closest(&self, d: RoleId, o: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for &t in self.thresholds(d) {
            if best.is_none_or(|b| (t - o).abs() < (b - o).abs()) {
                best = Some(t);
            }
        }
        best
    }

    /// Role-name keyed view for reports.
    pub fn named(&self, kb: &KnowledgeBase) -> NamedSplitTable {
        NamedSplitTable {
            k: self.k,
            thresholds: self
                .thresholds
                .iter()
                .map(|(r, v)| (kb.role_name(*r).to_string(), v.clone()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct NamedSplitTable {
    pub k: usize,
    pub thresholds: BTreeMap<String, Vec<f64>>,
}

pub fn closest_split(table: &SplitTable, kb: &KnowledgeBase, d: RoleId, o: f64) -> Result<f64, SplitError> {
    table
        .closest(d, o)
        .ok_or_else(|| SplitError::NoThresholds(kb.role_name(d).to_string()))
}

/// Level-wise greedy threshold search over every numeric role.
///
/// Each level computes the best split of every current example set for every
/// remaining role and queues both halves; a role retires once it holds `k`
/// distinct thresholds. The next level is ordered by entropy (descending) and
/// pure sets are dropped. Identical sets are queued once, which does not
/// change the resulting thresholds.
pub fn calculate_splits(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    k: usize,
) -> Result<SplitTable, SplitError> {
    let mut active: Vec<RoleId> = kb.roles_of_kind(RoleKind::Numeric);
    let mut table = SplitTable::new(k);
    for &d in &active {
        table.thresholds.insert(d, Vec::new());
    }
    if k == 0 {
        return Ok(table);
    }

    let mut root = labeled_examples(problem);
    root.sort_unstable();
    let mut current: Vec<Vec<LabeledExample>> = if root.is_empty() { vec![] } else { vec![root] };

    while !active.is_empty() && !current.is_empty() {
        let mut next: Vec<Vec<LabeledExample>> = Vec::new();
        let mut seen: HashSet<Vec<LabeledExample>> = HashSet::new();
        let mut retired: Vec<RoleId> = Vec::new();
        for &d in &active {
            for set in &current {
                let Some(split) = best_split(kb, set, d)? else {
                    continue;
                };
                let list = table.thresholds.get_mut(&d).expect("initialized");
                if !list.contains(&split.threshold) {
                    list.push(split.threshold);
                }
                for half in [split.left, split.right] {
                    // multi-valued examples can land on both sides
                    if half.len() < set.len() && seen.insert(half.clone()) {
                        next.push(half);
                    }
                }
                if list.len() >= k {
                    retired.push(d);
                    break;
                }
            }
        }
        active.retain(|d| !retired.contains(d));

        let mut scored: Vec<(f64, Vec<LabeledExample>)> = next
            .into_iter()
            .map(|s| {
                let (p, n) = class_counts(&s);
                (entropy(p, n).expect("nonempty"), s)
            })
            .filter(|(h, _)| *h > 0.0)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        current = scored.into_iter().map(|(_, s)| s).collect();
    }

    for list in table.thresholds.values_mut() {
        list.sort_by(f64::total_cmp);
    }
    Ok(table)
}
