//! Inspect the dependency graph, shape classification, and frontier split
//! for a reachability query.
//!
//! ```bash
//! cargo run --example explain_plan
//! ```

use forklog::generators::{EdgeList, TcFlavor};
use forklog::pdg::{build_pdg, classify_shape, plan_split, PlanOutcome};

fn main() {
    // A chain that fans out after three hops: n1 -> n2 -> n3 -> {n4..n8}.
    let mut edges: Vec<(u32, u32)> = vec![(0, 1), (1, 2)];
    for target in 3..8 {
        edges.push((2, target));
    }
    let graph = EdgeList { nodes: 8, edges };
    let mut program = graph.to_program(TcFlavor::Right).expect("program builds");
    let query = EdgeList::reach_query(&mut program, TcFlavor::Right, 0).expect("query parses");

    let pdg = build_pdg(&program);
    println!("predicate dependency graph:");
    for &(from, to) in &pdg.edges {
        println!("  {} -> {}", program.pred_label(from), program.pred_label(to));
    }
    println!(
        "cyclic predicates: {:?}",
        pdg.cyclic
            .iter()
            .map(|&p| program.pred_label(p))
            .collect::<Vec<_>>()
    );

    let shape = classify_shape(&program, &query);
    println!("shape: {}", shape.label());

    // Planning absorbs the single-successor prefix (n2, n3 become parent
    // answers) and splits the five-way fan-out across the workers.
    match plan_split(&program, &query, 3).expect("query is in the reachability class") {
        PlanOutcome::Split(plan) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&plan.to_json(&program)).unwrap()
            );
        }
        PlanOutcome::NoSplit => println!("no split found; the query would run serially"),
    }
}
