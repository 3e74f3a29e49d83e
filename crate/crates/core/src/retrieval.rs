//! Closed-world retrieval: every concept denotes a set of instances computed
//! by set operations over the materialized knowledge base.

use std::fmt::Write as _;

use thiserror::Error;

use crate::concept::{ConceptError, ConceptTree};
use crate::kb::{InstanceId, InstanceSet, KbError, KnowledgeBase};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error("learning problem line {line}: {message}")]
    Problem { line: usize, message: String },
}

/// Positive and negative examples. The two sets may overlap.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LearningProblem {
    pub positives: Vec<InstanceId>,
    pub negatives: Vec<InstanceId>,
}

impl LearningProblem {
    pub fn new(mut positives: Vec<InstanceId>, mut negatives: Vec<InstanceId>) -> Self {
        positives.sort_unstable();
        positives.dedup();
        negatives.sort_unstable();
        negatives.dedup();
        LearningProblem {
            positives,
            negatives,
        }
    }

    /// Parses `pos <x>` / `neg <x>` lines against `kb`.
    pub fn parse(text: &str, kb: &KnowledgeBase) -> Result<Self, RetrievalError> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            let (label, name) = match toks.as_slice() {
                [] => continue,
                [label, name] => (*label, *name),
                _ => {
                    return Err(RetrievalError::Problem {
                        line,
                        message: "expected `pos <instance>` or `neg <instance>`".into(),
                    })
                }
            };
            let id = kb.instance_id(name).ok_or_else(|| RetrievalError::Problem {
                line,
                message: format!("unknown instance `{name}`"),
            })?;
            match label {
                "pos" => pos.push(id),
                "neg" => neg.push(id),
                other => {
                    return Err(RetrievalError::Problem {
                        line,
                        message: format!("unknown label `{other}`"),
                    })
                }
            }
        }
        Ok(LearningProblem::new(pos, neg))
    }

    pub fn to_text(&self, kb: &KnowledgeBase) -> String {
        let mut out = String::new();
        for &x in &self.positives {
            let _ = writeln!(out, "pos {}", kb.instance_name(x));
        }
        for &x in &self.negatives {
            let _ = writeln!(out, "neg {}", kb.instance_name(x));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `R(c)` under closed-world set semantics.
pub fn retrieve(kb: &KnowledgeBase, c: &ConceptTree) -> Result<InstanceSet, RetrievalError> {
    let n = kb.num_instances();
    Ok(match c {
        ConceptTree::Thing => InstanceSet::full(n),
        ConceptTree::Atomic(id) => kb.instances_of(*id)?.clone(),
        ConceptTree::Not(inner) => {
            let mut s = retrieve(kb, inner)?;
            s.complement();
            s
        }
        ConceptTree::And(a, b) => {
            let mut s = retrieve(kb, a)?;
            if !s.is_empty() {
                s.intersect_with(&retrieve(kb, b)?);
            }
            s
        }
        ConceptTree::Or(a, b) => {
            let mut s = retrieve(kb, a)?;
            s.union_with(&retrieve(kb, b)?);
            s
        }
        ConceptTree::Exists(r, filler) => {
            let adj = kb.object_adjacency(*r)?;
            let inner = retrieve(kb, filler)?;
            select(n, |x| adj[x].iter().any(|&y| inner.contains(y)))
        }
        ConceptTree::Forall(r, filler) => {
            let adj = kb.object_adjacency(*r)?;
            let inner = retrieve(kb, filler)?;
            select(n, |x| adj[x].iter().all(|&y| inner.contains(y)))
        }
        ConceptTree::MinCard(k, r, filler) => {
            if *k == 0 {
                return Err(ConceptError::ZeroMinCard.into());
            }
            let adj = kb.object_adjacency(*r)?;
            let inner = retrieve(kb, filler)?;
            let k = *k as usize;
            select(n, |x| {
                adj[x].len() >= k && adj[x].iter().filter(|&&y| inner.contains(y)).count() >= k
            })
        }
        ConceptTree::MaxCard(k, r, filler) => {
            let adj = kb.object_adjacency(*r)?;
            let inner = retrieve(kb, filler)?;
            let k = *k as usize;
            select(n, |x| {
                adj[x].len() <= k || adj[x].iter().filter(|&&y| inner.contains(y)).count() <= k
            })
        }
        // value lists are sorted ascending
        ConceptTree::DataLe(d, v) => {
            let vals = kb.numeric_table(*d)?;
            select(n, |x| vals[x].first().is_some_and(|u| u <= v))
        }
        ConceptTree::DataGe(d, v) => {
            let vals = kb.numeric_table(*d)?;
            select(n, |x| vals[x].last().is_some_and(|u| u >= v))
        }
        ConceptTree::BoolEq(b, t) => {
            let vals = kb.boolean_table(*b)?;
            select(n, |x| vals[x][*t as usize])
        }
    })
}

fn select(n: usize, pred: impl Fn(usize) -> bool) -> InstanceSet {
    InstanceSet::from_ids(n, (0..n).filter(|&x| pred(x)).map(|x| InstanceId(x as u32)))
}

/// Example sets as bitsets, reusable across many concept evaluations.
#[derive(Clone, Debug)]
pub struct ProblemSets {
    pub positives: InstanceSet,
    pub negatives: InstanceSet,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl ProblemSets {
    pub fn new(kb: &KnowledgeBase, problem: &LearningProblem) -> Result<Self, RetrievalError> {
        let n = kb.num_instances();
        for &x in problem.positives.iter().chain(&problem.negatives) {
            if x.index() >= n {
                return Err(KbError::UnknownInstance(x.0).into());
            }
        }
        Ok(ProblemSets {
            positives: InstanceSet::from_ids(n, problem.positives.iter().copied()),
            negatives: InstanceSet::from_ids(n, problem.negatives.iter().copied()),
            n_pos: problem.positives.len(),
            n_neg: problem.negatives.len(),
        })
    }

    pub fn confusion_of(&self, retrieved: &InstanceSet) -> Confusion {
        let tp = retrieved.intersection_count(&self.positives);
        let fp = retrieved.intersection_count(&self.negatives);
        Confusion {
            tp,
            fp,
            tn: self.n_neg - fp,
            fn_: self.n_pos - tp,
        }
    }
}

pub fn confusion(
    kb: &KnowledgeBase,
    c: &ConceptTree,
    problem: &LearningProblem,
) -> Result<Confusion, RetrievalError> {
    let sets = ProblemSets::new(kb, problem)?;
    Ok(sets.confusion_of(&retrieve(kb, c)?))
}
