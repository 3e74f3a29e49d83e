//! Reference oracles for the acceptance suite, written directly from the
//! definitions and sharing no code with the optimized implementations.

use dlevo::concept::ConceptTree;
use dlevo::kb::{InstanceId, KnowledgeBase, RoleId, Value};

/// Per-instance model checking over the raw assertions of `x`.
pub fn holds(kb: &KnowledgeBase, c: &ConceptTree, x: InstanceId) -> bool {
    let triples = kb.outgoing_triples(x).expect("known instance");
    let fillers = |r: RoleId| {
        triples.iter().filter_map(move |t| match t.object {
            Value::Instance(y) if t.role == r => Some(y),
            _ => None,
        })
    };
    let numbers = |d: RoleId| {
        triples.iter().filter_map(move |t| match t.object {
            Value::Number(u) if t.role == d => Some(u),
            _ => None,
        })
    };
    let count = |n: &u32, r: &RoleId, a: &ConceptTree| (fillers(*r).filter(|&y| holds(kb, a, y)).count(), *n as usize);
    match c {
        ConceptTree::Thing => true,
        ConceptTree::Atomic(a) => kb.types_of(x).expect("known instance").contains(a),
        ConceptTree::Not(a) => !holds(kb, a, x),
        ConceptTree::And(a, b) => holds(kb, a, x) && holds(kb, b, x),
        ConceptTree::Or(a, b) => holds(kb, a, x) || holds(kb, b, x),
        ConceptTree::Exists(r, a) => fillers(*r).any(|y| holds(kb, a, y)),
        ConceptTree::Forall(r, a) => fillers(*r).all(|y| holds(kb, a, y)),
        ConceptTree::MinCard(n, r, a) => {
            let (have, need) = count(n, r, a);
            have >= need
        }
        ConceptTree::MaxCard(n, r, a) => {
            let (have, bound) = count(n, r, a);
            have <= bound
        }
        ConceptTree::DataLe(d, v) => numbers(*d).any(|u| u <= *v),
        ConceptTree::DataGe(d, v) => numbers(*d).any(|u| u >= *v),
        ConceptTree::BoolEq(b, v) => triples.iter().any(|t| t.role == *b && t.object == Value::Bool(*v)),
    }
}

/// Instances satisfying `c`, in id order.
pub fn model_check(kb: &KnowledgeBase, c: &ConceptTree) -> Vec<InstanceId> {
    kb.instance_ids().filter(|&x| holds(kb, c, x)).collect()
}

/// Binary entropy in bits of a `p`/`n` class split.
pub fn entropy_bits(p: usize, n: usize) -> f64 {
    let total = (p + n) as f64;
    [p, n]
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let q = k as f64 / total;
            -q * q.log2()
        })
        .sum()
}

/// Exhaustive midpoint search over single-valued `(value, positive)` pairs:
/// the best information gain and the smallest threshold attaining it, or
/// `None` if no midpoint has positive gain.
pub fn exhaustive_split(values: &[(f64, bool)]) -> Option<(f64, f64)> {
    let mut distinct: Vec<f64> = values.iter().map(|v| v.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let p = values.iter().filter(|v| v.1).count();
    let n = values.len() - p;
    let total = values.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    for w in distinct.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let lp = values.iter().filter(|v| v.0 <= t && v.1).count();
        let ln = values.iter().filter(|v| v.0 <= t && !v.1).count();
        let (rp, rn) = (p - lp, n - ln);
        let gain = entropy_bits(p, n)
            - (lp + ln) as f64 / total * entropy_bits(lp, ln)
            - (rp + rn) as f64 / total * entropy_bits(rp, rn);
        if best.is_none_or(|(_, g)| gain > g + 1e-12) {
            best = Some((t, gain));
        }
    }
    best.filter(|&(_, g)| g > 1e-12)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}
