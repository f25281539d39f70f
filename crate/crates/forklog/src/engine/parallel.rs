//! Parallel reachability evaluation.
//!
//! The parent plans a frontier split, claims everything it visited while
//! planning, and seeds the parent table with the answers planning already
//! found. Workers then explore their branches depth-first over the shared
//! step relation: a worker that wins the claim on a node records that node's
//! answers in its private table and expands its successors; a worker that
//! loses a claim abandons that node to the claimant. After all workers have
//! joined, their sealed tables are merged into the parent with the configured
//! strategy and the union is returned.
//!
//! For plain transitive closure the claimed node itself is the answer, so
//! child tables are pairwise disjoint by construction. When the base relation
//! differs from the step relation (as in points-to analysis), a claimed node
//! contributes its base facts instead; two nodes may share a base value, so
//! those runs deduplicate at iteration time.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::Rng;

use crate::lang::{ConstId, Program, Query};
use crate::pdg::{plan_split, PlanOutcome};
use crate::tables::{AnswerTable, ClaimKey, ClaimOutcome, ClaimSet};

use super::{solve_serial, EvalConfig, EvalError, EvalMode, EvalStats, QueryResult};

struct WorkerReport {
    table: AnswerTable,
    claims: usize,
    elapsed_ms: f64,
}

/// Evaluates a reachability-class query with `config.workers` workers.
/// Falls back to the serial evaluator (recorded in `stats.fallback`) when
/// planning finds no frontier split.
pub fn solve_parallel(
    program: &Program,
    query: &Query,
    config: &EvalConfig,
) -> Result<QueryResult, EvalError> {
    if config.mode != EvalMode::Parallel {
        return Err(EvalError::Config(
            "solve_parallel requires mode=parallel".into(),
        ));
    }
    if config.workers < 2 {
        return Err(EvalError::Config(format!(
            "parallel mode requires at least 2 workers, got {}",
            config.workers
        )));
    }
    let started = Instant::now();
    let plan = match plan_split(program, query, config.workers)? {
        PlanOutcome::Split(plan) => plan,
        PlanOutcome::NoSplit => {
            let plan_ms = started.elapsed().as_secs_f64() * 1e3;
            let mut result = solve_serial(program, query, config)?;
            result.stats.fallback = true;
            result.stats.plan_ms = plan_ms;
            result.stats.total_ms = started.elapsed().as_secs_f64() * 1e3;
            return Ok(result);
        }
    };
    let parts = plan.shape.parts().expect("split plans carry a shape");
    let tc = parts.base == parts.step;
    let step_facts = program.facts_for(parts.step);
    let base_facts = program.facts_for(parts.base);
    let start = plan.start;

    let claims = ClaimSet::new();
    let mut claim_count = 0usize;
    for &node in &plan.pre_claimed {
        if claims.try_claim(ClaimKey::Node(node)) == ClaimOutcome::Claimed {
            claim_count += 1;
        }
    }
    let mut parent = AnswerTable::new(2);
    for tuple in &plan.pre_answers {
        parent.insert(tuple)?;
    }
    // (start,start) is recorded at most once program-wide; planning may have
    // taken it already.
    let start_answer_taken = AtomicBool::new(plan.start_is_answer);
    let plan_ms = started.elapsed().as_secs_f64() * 1e3;

    let jitter = config.start_jitter_us;
    let worker_count = plan.branches.len();
    let mut reports: Vec<Result<WorkerReport, EvalError>> = Vec::with_capacity(worker_count);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(worker_count);
        for branch in plan.branches.iter() {
            let claims = &claims;
            let start_answer_taken = &start_answer_taken;
            handles.push(scope.spawn(move || {
                if jitter > 0 {
                    let us = rand::thread_rng().gen_range(0..=jitter);
                    std::thread::sleep(std::time::Duration::from_micros(us));
                }
                let worker_started = Instant::now();
                let mut table = AnswerTable::new(2);
                let mut stack: Vec<ConstId> = branch.iter().rev().copied().collect();
                let mut claimed = 0usize;
                while let Some(node) = stack.pop() {
                    if claims.try_claim(ClaimKey::Node(node)) == ClaimOutcome::AlreadyClaimed {
                        continue;
                    }
                    claimed += 1;
                    if tc {
                        table
                            .insert(&[start, node])
                            .expect("worker tables stay open");
                    } else if let Some(base) = base_facts {
                        for row in base.rows_with_first(node) {
                            table
                                .insert(&[start, row[1]])
                                .expect("worker tables stay open");
                        }
                    }
                    if let Some(step) = step_facts {
                        for row in step.rows_with_first(node) {
                            let next = row[1];
                            if next == start {
                                if tc && !start_answer_taken.swap(true, Ordering::SeqCst) {
                                    table
                                        .insert(&[start, start])
                                        .expect("worker tables stay open");
                                }
                                continue;
                            }
                            stack.push(next);
                        }
                    }
                }
                table.seal().expect("worker tables seal exactly once");
                WorkerReport {
                    table,
                    claims: claimed,
                    elapsed_ms: worker_started.elapsed().as_secs_f64() * 1e3,
                }
            }));
        }
        // Join every worker before any merge happens.
        for (index, handle) in handles.into_iter().enumerate() {
            reports.push(handle.join().map_err(|payload| {
                let message = payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown panic".into());
                EvalError::Worker { index, message }
            }));
        }
    });

    let mut children = Vec::with_capacity(worker_count);
    let mut worker_ms = Vec::with_capacity(worker_count);
    for report in reports {
        let report = report?;
        claim_count += report.claims;
        worker_ms.push(report.elapsed_ms);
        children.push(report.table);
    }

    if config.debug_disjoint {
        for left in 0..children.len() {
            for right in left + 1..children.len() {
                let overlap = children[left]
                    .iterate(false)?
                    .any(|tuple| children[right].contains(tuple));
                if overlap {
                    return Err(EvalError::Disjointness { left, right });
                }
            }
        }
    }

    let merge_started = Instant::now();
    for child in children.iter_mut() {
        parent.merge(child, config.merge_strategy)?;
    }
    let merge_ms = merge_started.elapsed().as_secs_f64() * 1e3;

    parent.seal()?;
    let dedup = config.dedup || !tc;
    let answer_count = parent.answer_count(dedup)?;
    let stats = EvalStats {
        plan_ms,
        worker_ms,
        merge_ms,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        answer_count,
        claims: claim_count,
        fallback: false,
        subgoals_evaluated: 0,
    };
    debug_assert_eq!(claim_count, claims.len());
    Ok(QueryResult::new(parent, dedup, stats))
}
