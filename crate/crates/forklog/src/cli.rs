//! Command-line interface: `run`, `gen`, `bench`, and `explain-plan`.
//!
//! Exit codes: 0 success, 1 usage/parse/validation/io errors, 2 resource
//! bound exceeded, 3 benchmark aborted on an answer-set mismatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{report_to_csv, run_bench, BenchError, BenchParams, Suite};
use crate::engine::{solve, EvalConfig, EvalError, EvalMode};
use crate::generators::{EdgeList, PointstoGen, TcFlavor};
use crate::lang::Program;
use crate::pdg::{plan_split, PlanError, PlanOutcome};
use crate::tables::MergeStrategy;

#[derive(Parser)]
#[command(
    name = "forklog",
    version,
    about = "Tabled Datalog engine with parallel reachability evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Serial,
    Parallel,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MergeArg {
    Link,
    Copy,
}

impl From<MergeArg> for MergeStrategy {
    fn from(m: MergeArg) -> Self {
        match m {
            MergeArg::Link => MergeStrategy::Link,
            MergeArg::Copy => MergeStrategy::Copy,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlavorArg {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKindArg {
    Complete,
    Chain,
    Random,
    Pointsto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Tc,
    Pointsto,
    Merge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Load program files and evaluate one query.
    Run {
        /// Program files; multiple files are concatenated before parsing.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Query atom, e.g. 'reachr(a,Y)'.
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Serial)]
        mode: ModeArg,
        /// Worker count for parallel mode.
        #[arg(long, default_value_t = 2)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = MergeArg::Link)]
        merge: MergeArg,
        /// Print only the number of answers.
        #[arg(long)]
        count: bool,
        /// Print per-phase wall times to stderr.
        #[arg(long)]
        stats: bool,
        /// Force duplicate suppression during answer iteration.
        #[arg(long)]
        dedup: bool,
        /// Assert child-table disjointness instead of trusting the claims.
        #[arg(long)]
        debug_disjoint: bool,
        /// Abort with exit code 2 once this many facts have been derived.
        #[arg(long, default_value_t = crate::engine::DEFAULT_FACT_LIMIT)]
        max_facts: usize,
    },
    /// Write generated facts to standard output.
    Gen {
        #[arg(value_enum)]
        kind: GenKindArg,
        /// Node count (variables for pointsto).
        #[arg(long)]
        nodes: u32,
        /// Edge probability for the random kind.
        #[arg(long, default_value_t = 0.1)]
        prob: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run a benchmark suite and print a report.
    Bench {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Input sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Worker counts to compare; 1 means serial.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        workers: Vec<usize>,
        /// Merge strategies for the parallel runs.
        #[arg(long, value_delimiter = ',', default_value = "link")]
        merge: Vec<MergeArg>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Transitive-closure formulation for the tc suite.
        #[arg(long, value_enum, default_value_t = FlavorArg::Left)]
        flavor: FlavorArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Print the parallel evaluation plan for a query as JSON.
    ExplainPlan {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 2)]
        threads: usize,
    },
}

/// Entry point used by the `forklog` binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io { path: PathBuf, cause: std::io::Error },
    Lang(crate::lang::LangError),
    Eval(EvalError),
    Bench(BenchError),
    Params(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io { path, cause } => {
                write!(f, "cannot read `{}`: {cause}", path.display())
            }
            CliError::Lang(e) => e.fmt(f),
            CliError::Eval(e) => e.fmt(f),
            CliError::Bench(e) => e.fmt(f),
            CliError::Params(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Eval(EvalError::Resource { .. }) => 2,
            CliError::Bench(BenchError::Mismatch { .. }) => 3,
            CliError::Bench(BenchError::Eval(EvalError::Resource { .. })) => 2,
            _ => 1,
        }
    }
}

impl From<crate::lang::LangError> for CliError {
    fn from(e: crate::lang::LangError) -> Self {
        CliError::Lang(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Eval(e)
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::Bench(e)
    }
}

fn load_program(files: &[PathBuf]) -> Result<Program, CliError> {
    let mut text = String::new();
    for path in files {
        let content = std::fs::read_to_string(path).map_err(|cause| CliError::Io {
            path: path.clone(),
            cause,
        })?;
        text.push_str(&content);
        text.push('\n');
    }
    Ok(Program::parse(&text)?)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            files,
            query,
            mode,
            threads,
            merge,
            count,
            stats,
            dedup,
            debug_disjoint,
            max_facts,
        } => cmd_run(
            &files,
            &query,
            mode,
            threads,
            merge.into(),
            count,
            stats,
            dedup,
            debug_disjoint,
            max_facts,
        ),
        Command::Gen {
            kind,
            nodes,
            prob,
            seed,
        } => cmd_gen(kind, nodes, prob, seed),
        Command::Bench {
            suite,
            sizes,
            trials,
            workers,
            merge,
            seed,
            flavor,
            format,
        } => cmd_bench(suite, sizes, trials, workers, merge, seed, flavor, format),
        Command::ExplainPlan {
            files,
            query,
            threads,
        } => cmd_explain_plan(&files, &query, threads),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    files: &[PathBuf],
    query_text: &str,
    mode: ModeArg,
    threads: usize,
    merge: MergeStrategy,
    count_only: bool,
    stats: bool,
    dedup: bool,
    debug_disjoint: bool,
    max_facts: usize,
) -> Result<(), CliError> {
    let mut program = load_program(files)?;
    let query = program.parse_query(query_text)?;
    let config = EvalConfig {
        mode: match mode {
            ModeArg::Serial => EvalMode::Serial,
            ModeArg::Parallel => EvalMode::Parallel,
            ModeArg::Oracle => EvalMode::Oracle,
        },
        workers: if matches!(mode, ModeArg::Parallel) {
            threads
        } else {
            1
        },
        merge_strategy: merge,
        dedup,
        debug_disjoint,
        max_derived_facts: max_facts,
        ..EvalConfig::default()
    };
    let result = solve(&program, &query, &config)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    if count_only {
        writeln!(out, "{}", result.count()).expect("stdout");
    } else {
        let mut lines: Vec<Vec<&str>> = result
            .iter()
            .map(|t| t.iter().map(|&c| program.const_text(c)).collect())
            .collect();
        lines.sort();
        let pred = program.pred_name(query.pred);
        for args in lines {
            writeln!(out, "{}({})", pred, args.join(",")).expect("stdout");
        }
    }
    out.flush().expect("stdout");
    if stats {
        let s = &result.stats;
        eprintln!("plan_ms: {:.3}", s.plan_ms);
        eprintln!(
            "worker_ms: [{}]",
            s.worker_ms
                .iter()
                .map(|ms| format!("{ms:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        eprintln!("merge_ms: {:.3}", s.merge_ms);
        eprintln!("total_ms: {:.3}", s.total_ms);
        eprintln!("answers: {}", s.answer_count);
        eprintln!("claims: {}", s.claims);
        eprintln!("fallback: {}", s.fallback);
        eprintln!("subgoals_evaluated: {}", s.subgoals_evaluated);
    }
    Ok(())
}

fn cmd_gen(kind: GenKindArg, nodes: u32, prob: f64, seed: u64) -> Result<(), CliError> {
    if nodes == 0 {
        return Err(CliError::Params("--nodes must be at least 1".into()));
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = match kind {
        GenKindArg::Complete => EdgeList::complete(nodes).write_facts(&mut out),
        GenKindArg::Chain => EdgeList::chain(nodes).write_facts(&mut out),
        GenKindArg::Random => {
            if !(0.0..=1.0).contains(&prob) {
                return Err(CliError::Params(format!(
                    "--prob must be within [0,1], got {prob}"
                )));
            }
            EdgeList::random(nodes, prob, seed).write_facts(&mut out)
        }
        GenKindArg::Pointsto => PointstoGen::generate(nodes, seed).write_facts(&mut out),
    };
    result.and_then(|()| out.flush()).map_err(|cause| CliError::Io {
        path: PathBuf::from("<stdout>"),
        cause,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    suite: SuiteArg,
    sizes: Vec<usize>,
    trials: usize,
    workers: Vec<usize>,
    merge: Vec<MergeArg>,
    seed: u64,
    flavor: FlavorArg,
    format: FormatArg,
) -> Result<(), CliError> {
    let suite = match suite {
        SuiteArg::Tc => Suite::Tc,
        SuiteArg::Pointsto => Suite::Pointsto,
        SuiteArg::Merge => Suite::Merge,
    };
    let mut params = BenchParams::new(suite);
    if !sizes.is_empty() {
        params.sizes = sizes;
    }
    params.trials = trials;
    params.workers = workers;
    params.merges = merge.into_iter().map(MergeStrategy::from).collect();
    params.seed = seed;
    params.flavor = match flavor {
        FlavorArg::Right => TcFlavor::Right,
        FlavorArg::Left => TcFlavor::Left,
    };
    let report = run_bench(&params)?;
    match format {
        FormatArg::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
        FormatArg::Csv => print!("{}", report_to_csv(&report)),
    }
    Ok(())
}

fn cmd_explain_plan(files: &[PathBuf], query_text: &str, threads: usize) -> Result<(), CliError> {
    let mut program = load_program(files)?;
    let query = program.parse_query(query_text)?;
    let value = match plan_split(&program, &query, threads.max(2)) {
        Ok(PlanOutcome::Split(plan)) => plan.to_json(&program),
        Ok(PlanOutcome::NoSplit) => serde_json::json!({
            "plan": "no_split",
            "reason": "reachable set exhausted before any fan-out of two or more",
        }),
        Err(PlanError::NotReachability) => serde_json::json!({
            "plan": "not_reachability",
            "reason": "query is outside the linear transitive-closure class",
        }),
        Err(e @ PlanError::NotEnoughWorkers(_)) => {
            return Err(CliError::Params(e.to_string()))
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("plan serializes")
    );
    Ok(())
}
