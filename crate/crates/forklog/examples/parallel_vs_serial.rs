//! Compare serial and parallel evaluation of transitive closure on a
//! complete graph and verify the answer sets match.
//!
//! ```bash
//! cargo run --release --example parallel_vs_serial
//! ```

use forklog::engine::{solve_parallel, solve_serial, EvalConfig};
use forklog::generators::{EdgeList, TcFlavor};

fn main() {
    let n = 1500;
    let graph = EdgeList::complete(n);
    println!("complete graph: {} nodes, {} edges", n, graph.edges.len());
    let mut program = graph.to_program(TcFlavor::Left).expect("program builds");
    let query = EdgeList::reach_query(&mut program, TcFlavor::Left, 0).expect("query parses");

    let serial = solve_serial(&program, &query, &EvalConfig::serial()).expect("serial run");
    println!(
        "serial:   {} answers in {:.1} ms",
        serial.count(),
        serial.stats.total_ms
    );

    let parallel =
        solve_parallel(&program, &query, &EvalConfig::parallel(2)).expect("parallel run");
    let s = &parallel.stats;
    println!(
        "parallel: {} answers in {:.1} ms (plan {:.2} ms, workers {:?} ms, merge {:.3} ms)",
        parallel.count(),
        s.total_ms,
        s.plan_ms,
        s.worker_ms
            .iter()
            .map(|ms| (ms * 10.0).round() / 10.0)
            .collect::<Vec<_>>(),
        s.merge_ms
    );
    println!(
        "claims: {} (every reachable node claimed exactly once)",
        s.claims
    );

    assert_eq!(serial.answer_set(), parallel.answer_set());
    let improvement = 100.0 * (serial.stats.total_ms - s.total_ms) / serial.stats.total_ms;
    println!("answer sets identical; wall-time improvement {improvement:.1}%");
}
