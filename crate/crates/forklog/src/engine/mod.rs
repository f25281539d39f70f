//! Query evaluation.
//!
//! Three evaluators share one answer-table vocabulary:
//!
//! * [`solve_oracle`] — naive bottom-up fixpoint over the whole program,
//!   re-deriving everything each round. Deliberately simple; the reference
//!   the other evaluators are tested against.
//! * [`solve_serial`] — top-down tabled evaluation for general definite
//!   Datalog. Subgoals are memoized; recursive subgoals iterate to fixpoint
//!   by consuming newly tabled answers through per-consumer cursors.
//! * [`solve_parallel`] — the reachability-class evaluator: split the
//!   frontier ([`crate::pdg::plan_split`]), run claim-guarded workers over
//!   private tables, join all workers, then merge child tables into the
//!   parent by linking or copying.

use std::collections::HashSet;
use std::fmt;

use crate::lang::{Program, Query, Tuple};
use crate::pdg::PlanError;
use crate::tables::{AnswerIter, AnswerTable, MergeStrategy, TableError};

mod oracle;
mod parallel;
mod pointsto;
mod serial;

pub use oracle::{solve_oracle, solve_oracle_bounded};
pub use parallel::solve_parallel;
pub use pointsto::{pointsto_program, run_pointsto, PointstoFacts, POINTSTO_RULES};
pub use serial::solve_serial;

/// Default bound on derived facts before evaluation aborts with
/// [`EvalError::Resource`].
pub const DEFAULT_FACT_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Serial,
    Parallel,
    Oracle,
}

/// Evaluation settings. `workers` and `merge_strategy` matter only in
/// parallel mode; `start_jitter_us` randomizes worker start times and exists
/// for schedule-independence testing.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub workers: usize,
    pub merge_strategy: MergeStrategy,
    /// Force duplicate suppression during iteration. Parallel runs over a
    /// base relation distinct from the step relation enable this on their
    /// own; claim-disjoint transitive-closure runs leave it off.
    pub dedup: bool,
    /// Assert pairwise disjointness of sealed child tables before merging
    /// instead of relying on the claim discipline silently.
    pub debug_disjoint: bool,
    pub start_jitter_us: u64,
    pub max_derived_facts: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: EvalMode::Serial,
            workers: 1,
            merge_strategy: MergeStrategy::Link,
            dedup: false,
            debug_disjoint: false,
            start_jitter_us: 0,
            max_derived_facts: DEFAULT_FACT_LIMIT,
        }
    }
}

impl EvalConfig {
    pub fn serial() -> Self {
        Self::default()
    }

    pub fn parallel(workers: usize) -> Self {
        EvalConfig {
            mode: EvalMode::Parallel,
            workers,
            ..Self::default()
        }
    }
}

/// Per-phase wall times and counters for one evaluation.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct EvalStats {
    pub plan_ms: f64,
    pub worker_ms: Vec<f64>,
    pub merge_ms: f64,
    pub total_ms: f64,
    pub answer_count: usize,
    /// Successful claims across the parent and all workers.
    pub claims: usize,
    /// True when a parallel run found no frontier split and fell back to the
    /// serial evaluator.
    pub fallback: bool,
    /// Distinct subgoals evaluated by the serial engine.
    pub subgoals_evaluated: usize,
}

/// Final answers plus statistics.
#[derive(Debug)]
pub struct QueryResult {
    answers: AnswerTable,
    dedup: bool,
    pub stats: EvalStats,
}

impl QueryResult {
    pub(crate) fn new(answers: AnswerTable, dedup: bool, stats: EvalStats) -> Self {
        QueryResult {
            answers,
            dedup,
            stats,
        }
    }

    /// The answer table; sealed, possibly multi-segment.
    pub fn answers(&self) -> &AnswerTable {
        &self.answers
    }

    /// Iterates answers under the dedup mode the run was configured with.
    pub fn iter(&self) -> AnswerIter<'_> {
        self.answers
            .iterate(self.dedup)
            .expect("result tables are never consumed")
    }

    pub fn answer_set(&self) -> HashSet<Tuple> {
        self.iter().map(|t| t.to_vec()).collect()
    }

    pub fn count(&self) -> usize {
        self.stats.answer_count
    }

    pub fn dedup(&self) -> bool {
        self.dedup
    }
}

#[derive(Debug)]
pub enum EvalError {
    /// Derived-fact count exceeded the configured bound.
    Resource { derived: usize, limit: usize },
    /// A worker thread panicked.
    Worker { index: usize, message: String },
    /// Configuration rejected (for example parallel mode with one worker).
    Config(String),
    /// The query is outside the parallelizable reachability class.
    Plan(PlanError),
    /// Two child tables overlapped while `debug_disjoint` was on.
    Disjointness { left: usize, right: usize },
    Table(TableError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Resource { derived, limit } => write!(
                f,
                "resource bound exceeded: {derived} derived facts (limit {limit})"
            ),
            EvalError::Worker { index, message } => {
                write!(f, "worker {index} panicked: {message}")
            }
            EvalError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            EvalError::Plan(e) => e.fmt(f),
            EvalError::Disjointness { left, right } => write!(
                f,
                "child answer tables {left} and {right} overlap; claim discipline violated"
            ),
            EvalError::Table(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<TableError> for EvalError {
    fn from(e: TableError) -> Self {
        EvalError::Table(e)
    }
}

impl From<PlanError> for EvalError {
    fn from(e: PlanError) -> Self {
        EvalError::Plan(e)
    }
}

/// Evaluates `query` in the mode selected by `config`.
pub fn solve(
    program: &Program,
    query: &Query,
    config: &EvalConfig,
) -> Result<QueryResult, EvalError> {
    match config.mode {
        EvalMode::Serial => solve_serial(program, query, config),
        EvalMode::Parallel => solve_parallel(program, query, config),
        EvalMode::Oracle => {
            let started = std::time::Instant::now();
            let answers = solve_oracle_bounded(program, query, config.max_derived_facts)?;
            let arity = program.pred_arity(query.pred);
            let mut table = AnswerTable::new(arity);
            for tuple in &answers {
                table.insert(tuple)?;
            }
            table.seal()?;
            let stats = EvalStats {
                total_ms: started.elapsed().as_secs_f64() * 1e3,
                answer_count: answers.len(),
                ..EvalStats::default()
            };
            Ok(QueryResult::new(table, false, stats))
        }
    }
}
