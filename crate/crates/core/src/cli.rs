//! Command-line front end. Exit status 0 on success, 1 on usage errors and
//! 2 on data errors (unreadable files, malformed input, failed runs).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::concept::ConceptTree;
use crate::evolve::{GPConfig, InitMethod, MutationVariant};
use crate::harness::{cross_validate, generate_family_kb, learn_report, EvalReport};
use crate::kb::KnowledgeBase;
use crate::par;
use crate::retrieval::{retrieve, LearningProblem};
use crate::splits::calculate_splits;

pub const THREADS_ENV: &str = "EVOLEARNER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dlevo", version, about = "Evolutionary ALCQ(D) concept learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn one concept on the whole problem
    Learn(LearnArgs),
    /// Stratified k-fold cross-validation
    Cv {
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
    },
    /// Write a synthetic kinship KB and its uncle problem
    GenFamily {
        #[arg(long, default_value_t = 10)]
        families: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the numeric split thresholds as JSON
    Splits {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 10)]
        k_splits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the instances of a concept, one per line
    Retrieve {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        concept: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Walk,
    Grow,
    Full,
    Ramped,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MutationArg {
    Uniform,
    Shrink,
    NodeReplacement,
    Insert,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include per-fold wall time (makes reports non-reproducible)
    #[arg(long)]
    wall_time: bool,
    #[command(flatten)]
    evo: EvoArgs,
}

#[derive(Args, Debug)]
struct EvoArgs {
    #[arg(long, default_value_t = 800)]
    population: usize,
    #[arg(long, default_value_t = 200)]
    generations: usize,
    #[arg(long, default_value_t = 7)]
    tournament: usize,
    #[arg(long, default_value_t = 0.9)]
    p_crossover: f64,
    #[arg(long, default_value_t = 0.1)]
    p_mutation: f64,
    #[arg(long, default_value_t = 17)]
    depth_limit: usize,
    /// Parsimony factor: fitness = accuracy * x - length
    #[arg(long, default_value_t = 2048.0)]
    gain_x: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    mutation: MutationArg,
    #[arg(long, value_enum, default_value = "walk")]
    init: InitArg,
    #[arg(long, default_value_t = 2)]
    max_t: usize,
    #[arg(long, default_value_t = 10)]
    k_splits: usize,
    #[arg(long, default_value_t = 5)]
    max_cardinality: u32,
    #[arg(long, default_value_t = 300.0)]
    timeout_secs: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable numeric and boolean restrictions
    #[arg(long)]
    no_data_properties: bool,
}

impl EvoArgs {
    fn config(&self) -> GPConfig {
        GPConfig {
            population_size: self.population,
            generations: self.generations,
            tournament_size: self.tournament,
            p_crossover: self.p_crossover,
            p_mutation: self.p_mutation,
            depth_limit: self.depth_limit,
            parsimony_x: self.gain_x,
            max_t: self.max_t,
            k_splits: self.k_splits,
            max_cardinality: self.max_cardinality,
            timeout_secs: self.timeout_secs,
            seed: self.seed,
            init_method: match self.init {
                InitArg::Walk => InitMethod::Walk,
                InitArg::Grow => InitMethod::Grow,
                InitArg::Full => InitMethod::Full,
                InitArg::Ramped => InitMethod::Ramped,
            },
            mutation_variant: match self.mutation {
                MutationArg::Uniform => MutationVariant::Uniform,
                MutationArg::Shrink => MutationVariant::Shrink,
                MutationArg::NodeReplacement => MutationVariant::NodeReplacement,
                MutationArg::Insert => MutationVariant::Insert,
            },
            use_data_properties: !self.no_data_properties,
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let file = fs::File::open(path).map_err(data(path.display()))?;
    KnowledgeBase::load(file).map_err(data(path.display()))
}

fn load_problem(path: &Path, kb: &KnowledgeBase) -> Result<LearningProblem, Failure> {
    let text = fs::read_to_string(path).map_err(data(path.display()))?;
    LearningProblem::parse(&text, kb).map_err(data(path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(data(path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(data("stdout")),
    }
}

fn emit_report(args: &LearnArgs, report: &EvalReport) -> Result<(), Failure> {
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Tsv => report.to_tsv(),
    };
    emit(args.out.as_deref(), &text)
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Learn(args) => {
            let cfg = args.evo.config();
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let kb = load_kb(&args.kb)?;
            let problem = load_problem(&args.problem, &kb)?;
            let report = learn_report(&kb, &problem, &cfg, args.wall_time).map_err(data("learn"))?;
            emit_report(&args, &report)
        }
        Command::Cv { learn: args, folds } => {
            let cfg = args.evo.config();
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            if folds < 2 {
                return Err(Failure::Usage("--folds must be at least 2".into()));
            }
            let kb = load_kb(&args.kb)?;
            let problem = load_problem(&args.problem, &kb)?;
            let report =
                cross_validate(&kb, &problem, &cfg, folds, cfg.seed, args.wall_time).map_err(data("cv"))?;
            emit_report(&args, &report)
        }
        Command::GenFamily { families, seed, out_dir } => {
            if families == 0 {
                return Err(Failure::Usage("--families must be at least 1".into()));
            }
            let ds = generate_family_kb(families, seed).map_err(data("gen-family"))?;
            fs::create_dir_all(&out_dir).map_err(data(out_dir.display()))?;
            emit(Some(&out_dir.join("kb.txt")), &ds.kb_text)?;
            emit(Some(&out_dir.join("uncle.txt")), &ds.problem_text)
        }
        Command::Splits { kb, problem, k_splits, out } => {
            let kb = load_kb(&kb)?;
            let problem = load_problem(&problem, &kb)?;
            let table = calculate_splits(&kb, &problem, k_splits).map_err(data("splits"))?;
            let mut text = serde_json::to_string_pretty(&table.named(&kb)).map_err(data("splits"))?;
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Retrieve { kb, concept } => {
            let kb = load_kb(&kb)?;
            let c = ConceptTree::parse(&concept, &kb).map_err(data("concept"))?;
            let set = retrieve(&kb, &c).map_err(data("retrieve"))?;
            let mut text = String::new();
            for x in set.iter() {
                text.push_str(kb.instance_name(x));
                text.push('\n');
            }
            emit(None, &text)
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = threads().and_then(|n| par::with_threads(n, || execute(cli.command)));
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}
