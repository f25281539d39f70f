//! Run the shipped points-to analysis over a synthetic assignment graph,
//! serially and in parallel.
//!
//! ```bash
//! cargo run --release --example points_to
//! ```

use forklog::engine::{run_pointsto, EvalConfig};
use forklog::generators::PointstoGen;

fn main() {
    let gen = PointstoGen::generate(5000, 7);
    let facts = gen.to_facts();
    let root = gen.root_var();
    println!(
        "{} variables, {} assignments, {} allocations; query pt({root},H)",
        gen.vars,
        facts.assign.len(),
        facts.alloc.len()
    );

    let serial = run_pointsto(&facts, &root, &EvalConfig::serial()).expect("serial run");
    println!(
        "serial:   {} heap objects in {:.1} ms ({} subgoals tabled)",
        serial.count(),
        serial.stats.total_ms,
        serial.stats.subgoals_evaluated
    );

    let parallel = run_pointsto(&facts, &root, &EvalConfig::parallel(2)).expect("parallel run");
    println!(
        "parallel: {} heap objects in {:.1} ms (dedup={} — branches may revisit a heap object)",
        parallel.count(),
        parallel.stats.total_ms,
        parallel.dedup()
    );

    assert_eq!(serial.answer_set(), parallel.answer_set());
    println!("answer sets identical");
}
