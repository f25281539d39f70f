//! forklog — a tabled Datalog engine that evaluates recursive queries
//! serially and in parallel.
//!
//! The parallel evaluator targets reachability-class queries (linear
//! transitive closure over an extensional edge relation, queried with the
//! first argument bound). It runs in three steps: split the initial query
//! frontier across workers, keep worker answer sets disjoint through an
//! atomic first-claim set, and merge per-worker answer tables in constant
//! time by linking table segments instead of copying tuples.
//!
//! Start with the `examples/` directory: each example is a runnable tour of
//! one capability (parsing and queries, plan inspection, parallel evaluation,
//! merge strategies, points-to analysis, claim-set behavior). The `forklog`
//! binary exposes the same functionality as `run`, `gen`, `bench`, and
//! `explain-plan` subcommands.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod generators;
pub mod lang;
pub mod pdg;
pub mod tables;

pub use engine::{solve, EvalConfig, EvalMode, QueryResult};
pub use lang::{Program, ProgramBuilder, Query};
pub use tables::MergeStrategy;
