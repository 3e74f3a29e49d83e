//! Experiment runner: timed learning, stratified cross-validation, reports
//! and synthetic datasets with known ground truth.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::ConceptTree;
use crate::evolve::{evolve_until, EvolveError, GPConfig, GenerationStats, Individual};
use crate::kb::{InstanceId, KbError, KnowledgeBase};
use crate::par;
use crate::retrieval::{retrieve, Confusion, LearningProblem, ProblemSets, RetrievalError};
use crate::rng::stream_rng;
use crate::splits::{calculate_splits, NamedSplitTable, SplitError, SplitTable};

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{examples} examples cannot fill {folds} folds")]
    TooFewExamples { examples: usize, folds: usize },
    #[error("n_families must be at least 1")]
    NoFamilies,
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Kb(#[from] KbError),
}

pub fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
}

impl From<Confusion> for Metrics {
    fn from(c: Confusion) -> Self {
        let total = c.total();
        Metrics {
            accuracy: if total == 0 { 0.0 } else { (c.tp + c.tn) as f64 / total as f64 },
            f1: f1_score(c.tp, c.fp, c.fn_),
        }
    }
}

pub fn evaluate(kb: &KnowledgeBase, c: &ConceptTree, problem: &LearningProblem) -> Result<Metrics, HarnessError> {
    let sets = ProblemSets::new(kb, problem)?;
    Ok(sets.confusion_of(&retrieve(kb, c)?).into())
}

#[derive(Clone, Debug)]
pub struct Learned {
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub table: SplitTable,
    pub timed_out: bool,
    pub elapsed: Duration,
}

/// Learns a concept. The timeout clock starts before the split thresholds
/// are computed; no thresholds are computed when data properties are off.
pub fn learn(kb: &KnowledgeBase, problem: &LearningProblem, cfg: &GPConfig) -> Result<Learned, HarnessError> {
    let start = Instant::now();
    let deadline = start.checked_add(cfg.timeout());
    let table = if cfg.use_data_properties {
        calculate_splits(kb, problem, cfg.k_splits)?
    } else {
        SplitTable::new(cfg.k_splits)
    };
    let run = evolve_until(kb, problem, &table, cfg, deadline)?;
    Ok(Learned {
        best: run.best,
        history: run.history,
        table,
        timed_out: run.timed_out,
        elapsed: start.elapsed(),
    })
}

/// Test-fold membership. Positives and negatives are shuffled separately
/// and dealt round-robin, negatives continuing where positives stopped.
pub fn stratified_folds(
    problem: &LearningProblem,
    folds: usize,
    shuffle_seed: u64,
) -> Result<Vec<LearningProblem>, HarnessError> {
    if folds < 2 {
        return Err(HarnessError::TooFewFolds(folds));
    }
    if problem.len() < folds {
        return Err(HarnessError::TooFewExamples { examples: problem.len(), folds });
    }
    let mut rng = stream_rng(shuffle_seed, 1);
    let mut pos = problem.positives.clone();
    let mut neg = problem.negatives.clone();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out = vec![(Vec::new(), Vec::new()); folds];
    for (i, &x) in pos.iter().enumerate() {
        out[i % folds].0.push(x);
    }
    for (i, &x) in neg.iter().enumerate() {
        out[(pos.len() + i) % folds].1.push(x);
    }
    Ok(out.into_iter().map(|(p, n)| LearningProblem::new(p, n)).collect())
}

fn without(all: &[InstanceId], drop: &[InstanceId]) -> Vec<InstanceId> {
    all.iter().filter(|x| drop.binary_search(x).is_err()).copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_accuracy: f64,
    pub train_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_f1: Option<f64>,
    pub concept: String,
    pub length: usize,
    pub generations: usize,
    pub timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_secs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// `test` for cross-validation, `train` for a single run.
    pub evaluated_on: String,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub length_mean: f64,
    pub length_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(flatten)]
    pub gp: GPConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub folds: Option<usize>,
    pub stratified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub split_table: NamedSplitTable,
    pub folds: Vec<FoldRecord>,
    pub aggregate: Aggregate,
}

/// Mean and sample standard deviation; the deviation of fewer than two
/// values is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldRecord]) -> Self {
        let test = folds.iter().all(|f| f.test_accuracy.is_some() && f.test_f1.is_some());
        let pick = |f: &FoldRecord| {
            if test {
                (f.test_accuracy.unwrap(), f.test_f1.unwrap())
            } else {
                (f.train_accuracy, f.train_f1)
            }
        };
        let (acc, f1): (Vec<f64>, Vec<f64>) = folds.iter().map(pick).unzip();
        let len: Vec<f64> = folds.iter().map(|f| f.length as f64).collect();
        let (accuracy_mean, accuracy_std) = mean_std(&acc);
        let (f1_mean, f1_std) = mean_std(&f1);
        let (length_mean, length_std) = mean_std(&len);
        Aggregate {
            evaluated_on: if test { "test" } else { "train" }.to_string(),
            accuracy_mean,
            accuracy_std,
            f1_mean,
            f1_std,
            length_mean,
            length_std,
        }
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per fold; absent test metrics are left empty.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "fold\ttrain_accuracy\ttrain_f1\ttest_accuracy\ttest_f1\tlength\tgenerations\ttimed_out\tconcept\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                f.fold,
                f.train_accuracy,
                f.train_f1,
                opt(f.test_accuracy),
                opt(f.test_f1),
                f.length,
                f.generations,
                f.timed_out,
                f.concept
            );
        }
        out
    }
}

fn record(
    kb: &KnowledgeBase,
    fold: usize,
    learned: &Learned,
    train: &LearningProblem,
    test: Option<&LearningProblem>,
    wall_time: bool,
) -> Result<FoldRecord, HarnessError> {
    let genome = &learned.best.genome;
    let tr = evaluate(kb, genome, train)?;
    let te = test.map(|t| evaluate(kb, genome, t)).transpose()?;
    Ok(FoldRecord {
        fold,
        train_accuracy: tr.accuracy,
        train_f1: tr.f1,
        test_accuracy: te.map(|m| m.accuracy),
        test_f1: te.map(|m| m.f1),
        concept: genome.serialize(kb),
        length: genome.length(),
        generations: learned.history.len() - 1,
        timed_out: learned.timed_out,
        wall_time_secs: wall_time.then_some(learned.elapsed.as_secs_f64()),
    })
}

/// Split table over the whole problem, as printed in reports.
fn audit_table(kb: &KnowledgeBase, problem: &LearningProblem, cfg: &GPConfig) -> Result<NamedSplitTable, HarnessError> {
    let table = if cfg.use_data_properties {
        calculate_splits(kb, problem, cfg.k_splits)?
    } else {
        SplitTable::new(cfg.k_splits)
    };
    Ok(table.named(kb))
}

/// Single learning run scored on its own training data.
pub fn learn_report(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    cfg: &GPConfig,
    wall_time: bool,
) -> Result<EvalReport, HarnessError> {
    let learned = learn(kb, problem, cfg)?;
    let folds = vec![record(kb, 0, &learned, problem, None, wall_time)?];
    Ok(EvalReport {
        config: ReportConfig {
            gp: cfg.clone(),
            folds: None,
            stratified: false,
        },
        split_table: learned.table.named(kb),
        aggregate: Aggregate::from_folds(&folds),
        folds,
    })
}

/// Seed of the run on fold `fold`, derived from the configured seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    stream_rng(seed, 2 + fold as u64).gen()
}

pub fn cross_validate(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    cfg: &GPConfig,
    folds: usize,
    shuffle_seed: u64,
    wall_time: bool,
) -> Result<EvalReport, HarnessError> {
    cfg.validate()?;
    let tests = stratified_folds(problem, folds, shuffle_seed)?;
    let records = par::map_range(folds, |i| {
        let test = &tests[i];
        let train = LearningProblem::new(
            without(&problem.positives, &test.positives),
            without(&problem.negatives, &test.negatives),
        );
        let fold_cfg = GPConfig {
            seed: fold_seed(cfg.seed, i),
            ..cfg.clone()
        };
        let learned = learn(kb, &train, &fold_cfg)?;
        record(kb, i, &learned, &train, Some(test), wall_time)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        config: ReportConfig {
            gp: cfg.clone(),
            folds: Some(folds),
            stratified: true,
        },
        split_table: audit_table(kb, problem, cfg)?,
        aggregate: Aggregate::from_folds(&records),
        folds: records,
    })
}

pub const FAMILY_CLASSES: [&str; 11] = [
    "Person",
    "Male",
    "Female",
    "Parent",
    "Child",
    "Brother",
    "Sister",
    "Grandfather",
    "Father",
    "Mother",
    "Daughter",
];

/// Ground truth of the generated kinship problem.
pub const UNCLE: &str = "and(Male, or(exists married.(exists hasSibling.(Parent)), exists hasSibling.(Parent)))";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub kb_text: String,
    pub problem_text: String,
}

#[derive(Default)]
struct Person {
    name: String,
    male: bool,
    parents: Vec<usize>,
    children: Vec<usize>,
    spouse: Option<usize>,
}

#[derive(Default)]
struct Family {
    people: Vec<Person>,
}

impl Family {
    fn add(&mut self, name: String, male: bool) -> usize {
        self.people.push(Person { name, male, ..Default::default() });
        self.people.len() - 1
    }

    fn marry(&mut self, a: usize, b: usize) {
        self.people[a].spouse = Some(b);
        self.people[b].spouse = Some(a);
    }

    fn child_of(&mut self, c: usize, parents: [usize; 2]) {
        for p in parents {
            self.people[p].children.push(c);
            self.people[c].parents.push(p);
        }
    }

    fn siblings(&self, x: usize) -> Vec<usize> {
        match self.people[x].parents.first() {
            Some(&p) => self.people[p].children.iter().copied().filter(|&c| c != x).collect(),
            None => Vec::new(),
        }
    }

    fn types(&self, x: usize) -> Vec<&'static str> {
        let p = &self.people[x];
        let mut t = vec![if p.male { "Male" } else { "Female" }];
        let parent = !p.children.is_empty();
        if parent {
            t.extend(["Parent", if p.male { "Father" } else { "Mother" }]);
        }
        if !p.parents.is_empty() {
            t.push("Child");
            if !p.male {
                t.push("Daughter");
            }
        }
        if !self.siblings(x).is_empty() {
            t.push(if p.male { "Brother" } else { "Sister" });
        }
        if p.male && p.children.iter().any(|&c| !self.people[c].children.is_empty()) {
            t.push("Grandfather");
        }
        t
    }
}

/// Three-generation kinship graph, `n_families` disjoint family trees.
/// Positives are every instance of [`UNCLE`]; negatives are an equally
/// sized random sample of the rest (all of them if fewer remain).
pub fn generate_family_kb(n_families: usize, seed: u64) -> Result<Dataset, HarnessError> {
    if n_families == 0 {
        return Err(HarnessError::NoFamilies);
    }
    let mut rng = stream_rng(seed, 0);
    let mut fam = Family::default();
    for f in 0..n_families {
        let mut next = 0;
        let mut name = |fam_id: usize| {
            next += 1;
            format!("f{fam_id}_p{next}")
        };
        let gf = fam.add(name(f), true);
        let gm = fam.add(name(f), false);
        fam.marry(gf, gm);
        for _ in 0..rng.gen_range(2..=5) {
            let male = rng.gen_bool(0.5);
            let c = fam.add(name(f), male);
            fam.child_of(c, [gf, gm]);
            if rng.gen_bool(0.8) {
                let s = fam.add(name(f), !male);
                fam.marry(c, s);
                for _ in 0..rng.gen_range(0..=4) {
                    let g = fam.add(name(f), rng.gen_bool(0.5));
                    fam.child_of(g, [c, s]);
                }
            }
        }
    }

    let mut kb = String::new();
    for c in FAMILY_CLASSES {
        let _ = writeln!(kb, "class {c}");
    }
    for (sub, sup) in [
        ("Male", "Person"),
        ("Female", "Person"),
        ("Parent", "Person"),
        ("Child", "Person"),
        ("Brother", "Male"),
        ("Sister", "Female"),
        ("Father", "Male"),
        ("Father", "Parent"),
        ("Mother", "Female"),
        ("Mother", "Parent"),
        ("Grandfather", "Father"),
        ("Daughter", "Female"),
        ("Daughter", "Child"),
    ] {
        let _ = writeln!(kb, "subclass {sub} {sup}");
    }
    for r in ["hasChild", "hasParent", "hasSibling", "married"] {
        let _ = writeln!(kb, "objprop {r}");
    }
    for (x, p) in fam.people.iter().enumerate() {
        for t in fam.types(x) {
            let _ = writeln!(kb, "type {} {t}", p.name);
        }
    }
    for (x, p) in fam.people.iter().enumerate() {
        let name = |i: usize| fam.people[i].name.as_str();
        for &c in &p.children {
            let _ = writeln!(kb, "rel {} hasChild {}", p.name, name(c));
        }
        for &q in &p.parents {
            let _ = writeln!(kb, "rel {} hasParent {}", p.name, name(q));
        }
        for s in fam.siblings(x) {
            let _ = writeln!(kb, "rel {} hasSibling {}", p.name, name(s));
        }
        if let Some(s) = p.spouse {
            let _ = writeln!(kb, "rel {} married {}", p.name, name(s));
        }
    }

    let parsed = KnowledgeBase::parse(&kb)?;
    let truth = retrieve(&parsed, &ConceptTree::parse(UNCLE, &parsed).expect("ground truth parses"))?;
    let positives: Vec<InstanceId> = truth.iter().collect();
    let rest: Vec<InstanceId> = parsed.instance_ids().filter(|x| !truth.contains(*x)).collect();
    let negatives: Vec<InstanceId> = rest
        .choose_multiple(&mut rng, positives.len().min(rest.len()))
        .copied()
        .collect();
    let problem = LearningProblem::new(positives, negatives);
    debug_assert!(problem.positives.iter().all(|&x| truth.contains(x)));
    debug_assert!(problem.negatives.iter().all(|&x| !truth.contains(x)));
    Ok(Dataset {
        kb_text: kb,
        problem_text: problem.to_text(&parsed),
    })
}

/// People with a random age and employment flag, linked by random `knows`
/// edges. Positives are exactly those with `age >= threshold`; negatives
/// are everyone else.
pub fn generate_age_dataset(n: usize, threshold: f64, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, 0);
    let mut kb = String::from("class Person\nobjprop knows\ndataprop age numeric\ndataprop employed boolean\n");
    let mut problem = String::new();
    for i in 0..n {
        let age = rng.gen_range(1..=90);
        let _ = writeln!(kb, "type q{i} Person");
        let _ = writeln!(kb, "data q{i} age {age}");
        let _ = writeln!(kb, "data q{i} employed {}", rng.gen_bool(0.5));
        let label = if age as f64 >= threshold { "pos" } else { "neg" };
        let _ = writeln!(problem, "{label} q{i}");
    }
    for i in 0..n {
        for _ in 0..2 {
            let j = rng.gen_range(0..n);
            if j != i {
                let _ = writeln!(kb, "rel q{i} knows q{j}");
            }
        }
    }
    Dataset {
        kb_text: kb,
        problem_text: problem,
    }
}
