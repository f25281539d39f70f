//! Measure linking a child answer table into a parent against copying its
//! tuples, across three orders of magnitude of child size.
//!
//! ```bash
//! cargo run --release --example merge_strategies
//! ```

use std::time::Instant;

use forklog::lang::ConstId;
use forklog::tables::AnswerTable;

fn child_of(size: u32) -> AnswerTable {
    let mut table = AnswerTable::new(2);
    for i in 0..size {
        table.insert(&[ConstId(i / 1000), ConstId(i % 1000)]).unwrap();
    }
    table.seal().unwrap();
    table
}

fn main() {
    println!("{:>10} {:>16} {:>16}", "tuples", "link (ms)", "copy (ms)");
    for size in [100u32, 10_000, 1_000_000] {
        let mut linked_parent = AnswerTable::new(2);
        let mut child = child_of(size);
        let started = Instant::now();
        linked_parent.merge_link(&mut child).unwrap();
        let link_ms = started.elapsed().as_secs_f64() * 1e3;

        let mut copied_parent = AnswerTable::new(2);
        let mut child = child_of(size);
        let started = Instant::now();
        copied_parent.merge_copy(&mut child).unwrap();
        let copy_ms = started.elapsed().as_secs_f64() * 1e3;

        assert_eq!(linked_parent.total_count(), copied_parent.total_count());
        println!("{size:>10} {link_ms:>16.6} {copy_ms:>16.6}");
    }
    println!();
    println!("linking relinks the segment chain and never touches tuples;");
    println!("copying re-inserts every tuple and scales with the child size.");
}
