//! Andersen-style points-to analysis as a shipped program.
//!
//! `pt(V,H)` holds when variable `V` may point to heap object `H`: either `V`
//! allocates `H` directly, or `V` is assigned from a variable that points to
//! `H`. The step relation (`assign`) differs from the base relation
//! (`alloc`), which classifies as right-linear reachability and runs on the
//! parallel evaluator.

use crate::lang::{LangError, Program, ProgramBuilder};

use super::{solve, EvalConfig, EvalError, QueryResult};

/// The points-to program over `alloc/2` and `assign/2`.
pub const POINTSTO_RULES: &str = "\
:- table pt/2.
pt(V,H) :- alloc(V,H).
pt(V,H) :- assign(V,W), pt(W,H).
";

/// Extensional input to the analysis.
#[derive(Debug, Clone, Default)]
pub struct PointstoFacts {
    /// `alloc(var, heap)` pairs.
    pub alloc: Vec<(String, String)>,
    /// `assign(to, from)` pairs; values flow from the second to the first.
    pub assign: Vec<(String, String)>,
}

/// Builds the points-to program over the given facts.
pub fn pointsto_program(facts: &PointstoFacts) -> Result<Program, LangError> {
    let mut b = ProgramBuilder::new();
    b.table("pt", 2)?;
    b.edb("alloc", 2)?;
    b.edb("assign", 2)?;
    b.rule(("pt", &["V", "H"]), &[("alloc", &["V", "H"])])?;
    b.rule(
        ("pt", &["V", "H"]),
        &[("assign", &["V", "W"]), ("pt", &["W", "H"])],
    )?;
    for (v, h) in &facts.alloc {
        b.fact("alloc", &[v, h])?;
    }
    for (to, from) in &facts.assign {
        b.fact("assign", &[to, from])?;
    }
    b.build()
}

/// Evaluates `pt(query_var, H)` over the given facts in the requested mode.
pub fn run_pointsto(
    facts: &PointstoFacts,
    query_var: &str,
    config: &EvalConfig,
) -> Result<QueryResult, EvalError> {
    let mut program =
        pointsto_program(facts).map_err(|e| EvalError::Config(format!("bad facts: {e}")))?;
    let query = program
        .parse_query(&format!("pt({query_var},H)"))
        .map_err(|e| EvalError::Config(format!("bad query variable `{query_var}`: {e}")))?;
    solve(&program, &query, config)
}
