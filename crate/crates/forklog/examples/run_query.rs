//! Parse a program from text and evaluate a query with the serial engine.
//!
//! ```bash
//! cargo run --example run_query
//! ```

use forklog::engine::{solve, solve_oracle, EvalConfig};
use forklog::Program;

const PROGRAM: &str = "
:- table reachr/2.
reachr(X,Y) :- edge(X,Y).
reachr(X,Y) :- edge(X,Z), reachr(Z,Y).

edge(lisbon, madrid).
edge(madrid, paris).
edge(paris, berlin).
edge(paris, rome).
edge(rome, lisbon).
";

fn main() {
    let mut program = Program::parse(PROGRAM).expect("program parses");
    let query = program.parse_query("reachr(lisbon,Y)").expect("query parses");

    let result = solve(&program, &query, &EvalConfig::serial()).expect("evaluation succeeds");
    println!("{} answers:", result.count());
    let mut lines: Vec<String> = result
        .iter()
        .map(|t| program.format_tuple(query.pred, t))
        .collect();
    lines.sort();
    for line in lines {
        println!("  {line}");
    }
    println!(
        "subgoals evaluated: {} (one per city reached)",
        result.stats.subgoals_evaluated
    );

    // The naive bottom-up oracle recomputes the same set from scratch.
    let oracle = solve_oracle(&program, &query).expect("oracle succeeds");
    assert_eq!(result.answer_set(), oracle);
    println!("oracle agrees on all {} answers", oracle.len());
}
