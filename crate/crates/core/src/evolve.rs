//! Generational GP engine: parsimony-penalised fitness, tournament
//! selection, one-point crossover, four mutation variants and the main loop
//! with a size-one hall of fame.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rand::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::{ConceptError, ConceptTree};
use crate::init::{random_population, random_tree, type_counts, InitError, PrimitiveSet, TreeMethod, Walker};
use crate::kb::KnowledgeBase;
use crate::par;
use crate::retrieval::{retrieve, LearningProblem, ProblemSets, RetrievalError};
use crate::rng::stream_rng;
use crate::splits::SplitTable;

/// Height range of the random-tree initializers.
pub const INIT_HEIGHTS: (usize, usize) = (1, 6);
/// Height range of subtrees grown by uniform mutation.
pub const MUTATION_HEIGHTS: (usize, usize) = (1, 3);

#[derive(Debug, Error, PartialEq)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("learning problem has no examples")]
    EmptyProblem,
    #[error("population is empty")]
    EmptyPopulation,
    #[error("individual {0} has not been evaluated")]
    Unevaluated(usize),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub accuracy: f64,
    pub length: usize,
    pub scalar: f64,
}

impl Fitness {
    pub fn new(accuracy: f64, length: usize, x: f64) -> Self {
        Fitness {
            accuracy,
            length,
            scalar: fitness(accuracy, length, x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: ConceptTree,
    pub fitness: Option<Fitness>,
}

impl Individual {
    pub fn new(genome: ConceptTree) -> Self {
        Individual { genome, fitness: None }
    }

    /// Replaces the genome, dropping the fitness if it changed.
    pub fn set_genome(&mut self, genome: ConceptTree) {
        if genome != self.genome {
            self.genome = genome;
            self.fitness = None;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    Walk,
    Grow,
    Full,
    Ramped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationVariant {
    Uniform,
    Shrink,
    NodeReplacement,
    Insert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GPConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub depth_limit: usize,
    pub parsimony_x: f64,
    pub max_t: usize,
    pub k_splits: usize,
    pub max_cardinality: u32,
    pub timeout_secs: f64,
    pub seed: u64,
    pub init_method: InitMethod,
    pub mutation_variant: MutationVariant,
    pub use_data_properties: bool,
}

impl Default for GPConfig {
    fn default() -> Self {
        GPConfig {
            population_size: 800,
            generations: 200,
            tournament_size: 7,
            p_crossover: 0.9,
            p_mutation: 0.1,
            depth_limit: 17,
            parsimony_x: 2048.0,
            max_t: 2,
            k_splits: 10,
            max_cardinality: 5,
            timeout_secs: 300.0,
            seed: 0,
            init_method: InitMethod::Walk,
            mutation_variant: MutationVariant::Uniform,
            use_data_properties: true,
        }
    }
}

impl GPConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::Config(m.to_string()));
        for (name, p) in [("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.population_size == 0 || self.tournament_size == 0 || self.k_splits == 0 {
            return bad("population, tournament and k_splits must be at least 1");
        }
        if self.depth_limit == 0 || self.max_cardinality == 0 {
            return bad("depth_limit and max_cardinality must be at least 1");
        }
        if self.timeout_secs.is_nan() || self.timeout_secs < 0.0 {
            return bad("timeout must be non-negative");
        }
        if !self.parsimony_x.is_finite() {
            return bad("parsimony factor must be finite");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::try_from_secs_f64(self.timeout_secs).unwrap_or(Duration::MAX)
    }
}

pub fn fitness(accuracy: f64, length: usize, x: f64) -> f64 {
    accuracy * x - length as f64
}

pub fn accuracy(kb: &KnowledgeBase, c: &ConceptTree, problem: &LearningProblem) -> Result<f64, EvolveError> {
    if problem.is_empty() {
        return Err(EvolveError::EmptyProblem);
    }
    let conf = crate::retrieval::confusion(kb, c, problem)?;
    Ok((conf.tp + conf.tn) as f64 / conf.total() as f64)
}

/// Scores concepts against a fixed problem.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    kb: &'a KnowledgeBase,
    sets: ProblemSets,
    x: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(kb: &'a KnowledgeBase, problem: &LearningProblem, x: f64) -> Result<Self, EvolveError> {
        if problem.is_empty() {
            return Err(EvolveError::EmptyProblem);
        }
        Ok(Evaluator {
            kb,
            sets: ProblemSets::new(kb, problem)?,
            x,
        })
    }

    pub fn evaluate(&self, c: &ConceptTree) -> Result<Fitness, EvolveError> {
        let conf = self.sets.confusion_of(&retrieve(self.kb, c)?);
        let acc = (conf.tp + conf.tn) as f64 / conf.total() as f64;
        Ok(Fitness::new(acc, c.length(), self.x))
    }
}

/// Strict tournament order: higher scalar, then shorter, then lower index.
fn beats(fits: &[Fitness], a: usize, b: usize) -> bool {
    match fits[a].scalar.partial_cmp(&fits[b].scalar) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => (fits[a].length, a) < (fits[b].length, b),
    }
}

fn fitnesses(pop: &[Individual]) -> Result<Vec<Fitness>, EvolveError> {
    if pop.is_empty() {
        return Err(EvolveError::EmptyPopulation);
    }
    pop.iter()
        .enumerate()
        .map(|(i, ind)| ind.fitness.ok_or(EvolveError::Unevaluated(i)))
        .collect()
}

/// Winner indices of `count` independent tournaments of `k` draws with
/// replacement.
pub fn tournament_indices<R: Rng + ?Sized>(
    pop: &[Individual],
    k: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, EvolveError> {
    let fits = fitnesses(pop)?;
    let n = pop.len();
    Ok((0..count)
        .map(|_| {
            let mut best = rng.gen_range(0..n);
            for _ in 1..k {
                let c = rng.gen_range(0..n);
                if beats(&fits, c, best) {
                    best = c;
                }
            }
            best
        })
        .collect())
}

pub fn tournament_select<R: Rng + ?Sized>(
    pop: &[Individual],
    k: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Individual>, EvolveError> {
    Ok(tournament_indices(pop, k, count, rng)?
        .into_iter()
        .map(|i| pop[i].clone())
        .collect())
}

/// Swaps the subtrees at `ia` in `a` and `ib` in `b`; an offspring deeper
/// than `depth_limit` is replaced by its parent.
pub fn crossover_at(
    a: &ConceptTree,
    b: &ConceptTree,
    ia: usize,
    ib: usize,
    depth_limit: usize,
) -> Result<(ConceptTree, ConceptTree), EvolveError> {
    let bad = |addr: usize, t: &ConceptTree| ConceptError::InvalidAddress { addr, len: t.length() };
    let sa = a.subtree(ia).ok_or_else(|| bad(ia, a))?.clone();
    let sb = b.subtree(ib).ok_or_else(|| bad(ib, b))?.clone();
    let c1 = a.replace_subtree(ia, sb)?;
    let c2 = b.replace_subtree(ib, sa)?;
    let keep = |child: ConceptTree, parent: &ConceptTree| {
        if child.depth() > depth_limit {
            parent.clone()
        } else {
            child
        }
    };
    Ok((keep(c1, a), keep(c2, b)))
}

pub fn one_point_crossover<R: Rng + ?Sized>(
    a: &ConceptTree,
    b: &ConceptTree,
    depth_limit: usize,
    rng: &mut R,
) -> (ConceptTree, ConceptTree) {
    let ia = rng.gen_range(0..a.length());
    let ib = rng.gen_range(0..b.length());
    crossover_at(a, b, ia, ib, depth_limit).expect("addresses drawn within range")
}

/// Applies one mutation; the input is returned unchanged if the result
/// would exceed `depth_limit`.
pub fn mutate<R: Rng + ?Sized>(
    c: &ConceptTree,
    variant: MutationVariant,
    prims: &PrimitiveSet,
    depth_limit: usize,
    rng: &mut R,
) -> Result<ConceptTree, EvolveError> {
    let addr = rng.gen_range(0..c.length());
    let node = c.subtree(addr).expect("address in range");
    let out = match variant {
        MutationVariant::Uniform => {
            let (lo, hi) = MUTATION_HEIGHTS;
            c.replace_subtree(addr, random_tree(TreeMethod::RampedHalfHalf, lo, hi, prims, rng)?)?
        }
        MutationVariant::Shrink => {
            let internal: Vec<usize> = (0..c.length())
                .filter(|&i| !c.subtree(i).expect("in range").is_leaf())
                .collect();
            let Some(&anc) = internal.choose(rng) else {
                return Ok(c.clone());
            };
            // descendants of a pre-order address form a contiguous block
            let size = c.subtree(anc).expect("in range").length();
            let desc = rng.gen_range(anc + 1..anc + size);
            let sub = c.subtree(desc).expect("in range").clone();
            c.replace_subtree(anc, sub)?
        }
        MutationVariant::NodeReplacement => {
            let fresh = if node.is_leaf() {
                prims.random_leaf(rng)?
            } else {
                let op = prims.random_internal_of_arity(node.arity(), rng);
                let children = node.children().into_iter().cloned().collect();
                prims.build(op, children, rng)
            };
            c.replace_subtree(addr, fresh)?
        }
        MutationVariant::Insert => {
            let op = prims.random_internal(rng);
            let slot = rng.gen_range(0..op.arity());
            let mut children = Vec::with_capacity(op.arity());
            for i in 0..op.arity() {
                children.push(if i == slot { node.clone() } else { prims.random_leaf(rng)? });
            }
            let wrapped = prims.build(op, children, rng);
            c.replace_subtree(addr, wrapped)?
        }
    };
    Ok(if out.depth() > depth_limit { c.clone() } else { out })
}

/// Per-generation summary. Generation 0 is the initial population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub evaluations: usize,
    pub population_size: usize,
    pub best_scalar: f64,
    pub best_accuracy: f64,
    pub best_length: usize,
    pub generation_best_scalar: f64,
    pub mean_scalar: f64,
    pub max_depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub timed_out: bool,
}

pub fn initial_population<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    table: &SplitTable,
    prims: &PrimitiveSet,
    cfg: &GPConfig,
    rng: &mut R,
) -> Result<Vec<ConceptTree>, EvolveError> {
    let (lo, hi) = INIT_HEIGHTS;
    let method = match cfg.init_method {
        InitMethod::Walk => {
            let walker = Walker::new(kb, type_counts(kb, &problem.positives)?, cfg.max_t, table);
            let walker = if cfg.use_data_properties { walker } else { walker.without_data() };
            return Ok(walker.population(&problem.positives, cfg.population_size, rng)?);
        }
        InitMethod::Grow => TreeMethod::Grow,
        InitMethod::Full => TreeMethod::Full,
        InitMethod::Ramped => TreeMethod::RampedHalfHalf,
    };
    Ok(random_population(method, lo, hi, prims, cfg.population_size, rng)?)
}

/// Evaluates every individual without a fitness. Returns the number of
/// evaluations, or `None` once `deadline` passes.
fn evaluate_invalid(
    pop: &mut [Individual],
    eval: &Evaluator,
    deadline: Option<Instant>,
) -> Result<Option<usize>, EvolveError> {
    let todo: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].fitness.is_none()).collect();
    let results = par::map_range(todo.len(), |j| {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        Some(eval.evaluate(&pop[todo[j]].genome))
    });
    let mut done = 0;
    for (j, r) in results.into_iter().enumerate() {
        match r {
            Some(fit) => {
                pop[todo[j]].fitness = Some(fit?);
                done += 1;
            }
            None => return Ok(None),
        }
    }
    Ok(Some(done))
}

fn stats(generation: usize, evaluations: usize, pop: &[Individual], hof: &Individual) -> GenerationStats {
    let fits: Vec<Fitness> = pop.iter().filter_map(|i| i.fitness).collect();
    let best = hof.fitness.expect("hall of fame is evaluated");
    GenerationStats {
        generation,
        evaluations,
        population_size: pop.len(),
        best_scalar: best.scalar,
        best_accuracy: best.accuracy,
        best_length: best.length,
        generation_best_scalar: fits.iter().map(|f| f.scalar).fold(f64::NEG_INFINITY, f64::max),
        mean_scalar: fits.iter().map(|f| f.scalar).sum::<f64>() / fits.len() as f64,
        max_depth: pop.iter().map(|i| i.genome.depth()).max().unwrap_or(0),
    }
}

fn update_hof(hof: &mut Option<Individual>, pop: &[Individual]) {
    let fits: Vec<Fitness> = pop.iter().map(|i| i.fitness.expect("evaluated")).collect();
    let mut best = 0;
    for i in 1..pop.len() {
        if beats(&fits, i, best) {
            best = i;
        }
    }
    let replace = match hof {
        None => true,
        Some(h) => fits[best].scalar > h.fitness.expect("evaluated").scalar,
    };
    if replace {
        *hof = Some(pop[best].clone());
    }
}

/// Runs the GP loop with the timeout measured from now.
pub fn evolve_run(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    table: &SplitTable,
    cfg: &GPConfig,
) -> Result<RunResult, EvolveError> {
    let deadline = Instant::now().checked_add(cfg.timeout());
    evolve_until(kb, problem, table, cfg, deadline)
}

/// Runs the GP loop until `cfg.generations` or `deadline`. The initial
/// population is always evaluated in full so that a best individual exists.
pub fn evolve_until(
    kb: &KnowledgeBase,
    problem: &LearningProblem,
    table: &SplitTable,
    cfg: &GPConfig,
    deadline: Option<Instant>,
) -> Result<RunResult, EvolveError> {
    cfg.validate()?;
    if problem.positives.is_empty() {
        return Err(InitError::EmptyPositives.into());
    }
    let eval = Evaluator::new(kb, problem, cfg.parsimony_x)?;
    let prims = PrimitiveSet::from_kb(kb, table, cfg.max_cardinality, cfg.use_data_properties);
    let mut rng = stream_rng(cfg.seed, 0);

    let mut pop: Vec<Individual> = initial_population(kb, problem, table, &prims, cfg, &mut rng)?
        .into_iter()
        .map(Individual::new)
        .collect();
    let n = evaluate_invalid(&mut pop, &eval, None)?.expect("no deadline");
    let mut hof = None;
    update_hof(&mut hof, &pop);
    let mut history = vec![stats(0, n, &pop, hof.as_ref().expect("set"))];
    let mut timed_out = false;

    for generation in 1..=cfg.generations {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        let mut offspring = tournament_select(&pop, cfg.tournament_size, pop.len(), &mut rng)?;
        for i in (1..offspring.len()).step_by(2) {
            if rng.gen_bool(cfg.p_crossover) {
                let (c1, c2) = one_point_crossover(
                    &offspring[i - 1].genome,
                    &offspring[i].genome,
                    cfg.depth_limit,
                    &mut rng,
                );
                offspring[i - 1].set_genome(c1);
                offspring[i].set_genome(c2);
            }
        }
        for ind in offspring.iter_mut() {
            if rng.gen_bool(cfg.p_mutation) {
                let m = mutate(&ind.genome, cfg.mutation_variant, &prims, cfg.depth_limit, &mut rng)?;
                ind.set_genome(m);
            }
        }
        let Some(n) = evaluate_invalid(&mut offspring, &eval, deadline)? else {
            timed_out = true;
            break;
        };
        pop = offspring;
        update_hof(&mut hof, &pop);
        history.push(stats(generation, n, &pop, hof.as_ref().expect("set")));
    }

    Ok(RunResult {
        best: hof.expect("initial population evaluated"),
        history,
        timed_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::tests::family_mini;
    use crate::retrieval::tests::names;
    use proptest::prelude::*;

    fn male_problem(kb: &KnowledgeBase) -> LearningProblem {
        LearningProblem::parse("pos bob\npos dan\nneg ann\nneg cat\n", kb).unwrap()
    }

    fn parse(kb: &KnowledgeBase, text: &str) -> ConceptTree {
        ConceptTree::parse(text, kb).unwrap()
    }

    fn scored(scalars: &[f64], lengths: &[usize]) -> Vec<Individual> {
        scalars
            .iter()
            .zip(lengths)
            .map(|(&s, &l)| Individual {
                genome: ConceptTree::Thing,
                fitness: Some(Fitness { accuracy: 0.0, length: l, scalar: s }),
            })
            .collect()
    }

    fn chain(kb: &KnowledgeBase, depth: usize) -> ConceptTree {
        (0..depth).fold(parse(kb, "Male"), |c, _| ConceptTree::not(c))
    }

    #[test]
    fn accuracy_examples() {
        let kb = family_mini();
        let p = male_problem(&kb);
        assert_eq!(accuracy(&kb, &parse(&kb, "Male"), &p).unwrap(), 1.0);
        assert_eq!(accuracy(&kb, &ConceptTree::Thing, &p).unwrap(), 0.5);
        assert_eq!(accuracy(&kb, &parse(&kb, "Female"), &p).unwrap(), 0.0);
        assert_eq!(
            accuracy(&kb, &ConceptTree::Thing, &LearningProblem::default()),
            Err(EvolveError::EmptyProblem)
        );
    }

    #[test]
    fn fitness_examples() {
        assert_eq!(fitness(1.0, 7, 2048.0), 2041.0);
        assert_eq!(fitness(0.5, 1, 2048.0), 1023.0);
        assert_eq!(fitness(0.0, 0, 17.0), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(GPConfig::default().validate().is_ok());
        for cfg in [
            GPConfig { p_crossover: 1.5, ..Default::default() },
            GPConfig { population_size: 0, ..Default::default() },
            GPConfig { depth_limit: 0, ..Default::default() },
            GPConfig { timeout_secs: -1.0, ..Default::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(EvolveError::Config(_))));
        }
    }

    #[test]
    fn tournament_large_k_finds_best() {
        let pop = scored(&[5.0, 1.0, 1.0], &[1, 1, 1]);
        let mut rng = stream_rng(1, 0);
        let wins = tournament_indices(&pop, 50, 10_000, &mut rng)
            .unwrap()
            .into_iter()
            .filter(|&i| i == 0)
            .count();
        assert!(wins >= 9_900, "{wins}");
    }

    #[test]
    fn tournament_size_one_is_uniform() {
        let n = 5;
        let pop = scored(&[3.0, 1.0, 4.0, 1.0, 5.0], &[1; 5]);
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for i in tournament_indices(&pop, 1, draws, &mut stream_rng(2, 0)).unwrap() {
            counts[i] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn tournament_ties() {
        let equal = scored(&[2.0; 4], &[3; 4]);
        let fits = fitnesses(&equal).unwrap();
        assert!(beats(&fits, 1, 3) && !beats(&fits, 3, 1));
        let mixed = scored(&[2.0, 2.0], &[5, 3]);
        let fits = fitnesses(&mixed).unwrap();
        assert!(beats(&fits, 1, 0));
        // with k large every tournament includes index 0 w.h.p.; ties go to it
        let winners = tournament_indices(&equal, 64, 100, &mut stream_rng(3, 0)).unwrap();
        assert!(winners.iter().all(|&i| i == 0));
        let mut unevaluated = equal.clone();
        unevaluated[2].fitness = None;
        assert_eq!(
            tournament_select(&unevaluated, 3, 1, &mut stream_rng(0, 0)),
            Err(EvolveError::Unevaluated(2))
        );
    }

    #[test]
    fn crossover_examples() {
        let kb = family_mini();
        let a = parse(&kb, "and(Male, Female)");
        let b = parse(&kb, "exists hasChild.(Person)");
        let (c1, c2) = crossover_at(&a, &b, 2, 1, 17).unwrap();
        assert_eq!(c1, parse(&kb, "and(Male, Person)"));
        assert_eq!(c2, parse(&kb, "exists hasChild.(Female)"));
        let (c1, c2) = crossover_at(&a, &b, 0, 0, 17).unwrap();
        assert_eq!((c1, c2), (b.clone(), a.clone()));
    }

    #[test]
    fn crossover_depth_limit() {
        let kb = family_mini();
        let a = chain(&kb, 17);
        let b = chain(&kb, 17);
        // a's leaf replaced by b's depth-1 subtree gives depth 33
        let (c1, c2) = crossover_at(&a, &b, 17, 1, 17).unwrap();
        assert_eq!(c1, a);
        assert_eq!(c2.depth(), 1);
        let mut rng = stream_rng(4, 0);
        for _ in 0..200 {
            let (c1, c2) = one_point_crossover(&a, &b, 17, &mut rng);
            assert!(c1.depth() <= 17 && c2.depth() <= 17);
        }
    }

    fn prims(kb: &KnowledgeBase) -> PrimitiveSet {
        let table = SplitTable::from_thresholds(10, [(kb.role_id("age").unwrap(), vec![39.0])]);
        PrimitiveSet::from_kb(kb, &table, 5, true)
    }

    #[test]
    fn shrink_and_node_replacement_examples() {
        let kb = family_mini();
        let p = prims(&kb);
        let c = parse(&kb, "and(Male, Female)");
        let mut seen_shrink = std::collections::HashSet::new();
        let mut seen_swap = std::collections::HashSet::new();
        let mut rng = stream_rng(5, 0);
        for _ in 0..500 {
            seen_shrink.insert(mutate(&c, MutationVariant::Shrink, &p, 17, &mut rng).unwrap().serialize(&kb));
            seen_swap.insert(
                mutate(&c, MutationVariant::NodeReplacement, &p, 17, &mut rng).unwrap().serialize(&kb),
            );
        }
        assert!(seen_shrink.contains("Male"));
        assert!(seen_shrink.iter().all(|s| s == "Male" || s == "Female"));
        assert!(seen_swap.contains("or(Male, Female)"));
        assert_eq!(
            mutate(&ConceptTree::Thing, MutationVariant::Shrink, &p, 17, &mut rng).unwrap(),
            ConceptTree::Thing
        );
    }

    #[test]
    fn uniform_mutation_of_leaf_is_shallow() {
        let kb = family_mini();
        let p = prims(&kb);
        let mut rng = stream_rng(6, 0);
        for _ in 0..2_000 {
            let m = mutate(&ConceptTree::Thing, MutationVariant::Uniform, &p, 17, &mut rng).unwrap();
            assert!(m.depth() <= 3);
        }
    }

    #[test]
    fn insert_wraps_subtree() {
        let kb = family_mini();
        let p = prims(&kb);
        let male = parse(&kb, "Male");
        let mut rng = stream_rng(7, 0);
        for _ in 0..500 {
            let m = mutate(&male, MutationVariant::Insert, &p, 17, &mut rng).unwrap();
            assert_eq!(m.depth(), 1);
            assert!(m.children().contains(&&male));
        }
    }

    #[test]
    fn mutation_respects_depth_limit() {
        let kb = family_mini();
        let p = prims(&kb);
        let c = chain(&kb, 17);
        let mut rng = stream_rng(8, 0);
        for variant in [
            MutationVariant::Uniform,
            MutationVariant::Shrink,
            MutationVariant::NodeReplacement,
            MutationVariant::Insert,
        ] {
            for _ in 0..200 {
                let m = mutate(&c, variant, &p, 17, &mut rng).unwrap();
                assert!(m.depth() <= 17);
                m.validate(&kb).unwrap();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fitness_orderings(
            a1 in 0.0..1.0f64, a2 in 0.0..1.0f64, l1 in 1usize..100, l2 in 1usize..100, s in 0.1..10.0f64,
        ) {
            if a1 < a2 {
                prop_assert!(fitness(a1, l1, 2048.0) < fitness(a2, l1, 2048.0));
            }
            if l1 < l2 {
                prop_assert!(fitness(a1, l1, 2048.0) > fitness(a1, l2, 2048.0));
            }
            // rescaling both terms by s preserves the order
            let f = |a: f64, l: usize| a * 2048.0 * s - l as f64 * s;
            let ord = fitness(a1, l1, 2048.0).partial_cmp(&fitness(a2, l2, 2048.0));
            prop_assert_eq!(ord, f(a1, l1).partial_cmp(&f(a2, l2)));
        }

        #[test]
        fn operators_keep_trees_valid(
            a in crate::concept::tests::arb_tree(&family_mini()),
            b in crate::concept::tests::arb_tree(&family_mini()),
            seed in any::<u64>(),
            variant in prop::sample::select(vec![
                MutationVariant::Uniform,
                MutationVariant::Shrink,
                MutationVariant::NodeReplacement,
                MutationVariant::Insert,
            ]),
        ) {
            let kb = family_mini();
            let p = prims(&kb);
            let mut rng = stream_rng(seed, 0);
            let limit = a.depth().max(b.depth()).max(2);
            let (u1, u2) = one_point_crossover(&a, &b, usize::MAX, &mut rng);
            prop_assert_eq!(u1.length() + u2.length(), a.length() + b.length());
            let (c1, c2) = one_point_crossover(&a, &b, limit, &mut rng);
            prop_assert!(c1.depth() <= limit && c2.depth() <= limit);
            let m = mutate(&c1, variant, &p, limit, &mut rng).unwrap();
            prop_assert!(m.depth() <= limit);
            m.validate(&kb).unwrap();
        }
    }

    fn small_cfg(seed: u64) -> GPConfig {
        GPConfig {
            population_size: 40,
            generations: 5,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn separable_problem_is_solved() {
        let kb = family_mini();
        let p = male_problem(&kb);
        let table = crate::splits::calculate_splits(&kb, &p, 10).unwrap();
        let solved = (0..100)
            .filter(|&seed| {
                let run = evolve_run(&kb, &p, &table, &small_cfg(seed)).unwrap();
                names(&kb, &retrieve(&kb, &run.best.genome).unwrap()) == ["bob", "dan"]
            })
            .count();
        assert!(solved >= 95, "{solved}");
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let kb = family_mini();
        let p = male_problem(&kb);
        let table = crate::splits::calculate_splits(&kb, &p, 10).unwrap();
        let cfg = GPConfig { generations: 0, ..small_cfg(3) };
        let run = evolve_run(&kb, &p, &table, &cfg).unwrap();
        assert_eq!(run.history.len(), 1);

        let prims = PrimitiveSet::from_kb(&kb, &table, cfg.max_cardinality, true);
        let init = initial_population(&kb, &p, &table, &prims, &cfg, &mut stream_rng(cfg.seed, 0)).unwrap();
        let eval = Evaluator::new(&kb, &p, cfg.parsimony_x).unwrap();
        let best = init
            .iter()
            .map(|c| eval.evaluate(c).unwrap().scalar)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(run.best.fitness.unwrap().scalar, best);
    }

    #[test]
    fn run_invariants_and_determinism() {
        let kb = family_mini();
        let p = LearningProblem::parse("pos ann\npos bob\nneg cat\nneg dan\n", &kb).unwrap();
        let table = crate::splits::calculate_splits(&kb, &p, 10).unwrap();
        for init in [InitMethod::Walk, InitMethod::Grow, InitMethod::Full, InitMethod::Ramped] {
            for variant in [MutationVariant::Uniform, MutationVariant::Insert] {
                let cfg = GPConfig {
                    population_size: 30,
                    generations: 15,
                    depth_limit: 6,
                    p_mutation: 0.5,
                    init_method: init,
                    mutation_variant: variant,
                    ..small_cfg(11)
                };
                let run = evolve_run(&kb, &p, &table, &cfg).unwrap();
                assert_eq!(run.history.len(), 16);
                for w in run.history.windows(2) {
                    assert!(w[1].best_scalar >= w[0].best_scalar);
                }
                for h in &run.history[1..] {
                    assert_eq!(h.population_size, 30);
                    assert!(h.max_depth <= 6);
                }
                let again = evolve_run(&kb, &p, &table, &cfg).unwrap();
                assert_eq!(run, again);
            }
        }
    }

    #[test]
    fn expired_deadline_keeps_initial_best() {
        let kb = family_mini();
        let p = male_problem(&kb);
        let table = SplitTable::new(10);
        let run = evolve_until(&kb, &p, &table, &small_cfg(1), Some(Instant::now())).unwrap();
        assert!(run.timed_out);
        assert_eq!(run.history.len(), 1);
        assert!(run.best.fitness.is_some());
    }

    #[test]
    fn evolution_without_data_never_uses_data() {
        let kb = family_mini();
        let p = LearningProblem::parse("pos ann\npos bob\nneg cat\nneg dan\n", &kb).unwrap();
        let table = crate::splits::calculate_splits(&kb, &p, 10).unwrap();
        let cfg = GPConfig {
            use_data_properties: false,
            init_method: InitMethod::Ramped,
            ..small_cfg(2)
        };
        let run = evolve_run(&kb, &p, &table, &cfg).unwrap();
        assert!(!run.best.genome.has_data_restriction());
    }
}
