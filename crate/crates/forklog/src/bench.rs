//! Benchmark harness: runs serial/parallel configurations over generated
//! inputs and emits a machine-readable report.
//!
//! Every configuration runs `trials` times; the report carries the raw rows,
//! per-configuration medians, and wall-time improvement percentages of each
//! parallel configuration against the serial median on the same input.
//! Answer counts are cross-checked across all modes of one input before any
//! aggregation: a mismatch aborts the report, because disagreeing modes are
//! a correctness bug and their timings are meaningless.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{
    run_pointsto, solve_parallel, solve_serial, EvalConfig, EvalError, QueryResult,
};
use crate::generators::{EdgeList, PointstoGen, TcFlavor};
use crate::lang::{ConstId, LangError};
use crate::tables::{AnswerTable, MergeStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Tc,
    Pointsto,
    Merge,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Suite::Tc => write!(f, "tc"),
            Suite::Pointsto => write!(f, "pointsto"),
            Suite::Merge => write!(f, "merge"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub suite: Suite,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub workers: Vec<usize>,
    pub merges: Vec<MergeStrategy>,
    pub seed: u64,
    pub flavor: TcFlavor,
}

impl BenchParams {
    pub fn new(suite: Suite) -> Self {
        BenchParams {
            suite,
            sizes: match suite {
                Suite::Tc => vec![100, 500],
                Suite::Pointsto => vec![1000],
                Suite::Merge => vec![100, 10_000, 1_000_000],
            },
            trials: 5,
            workers: vec![1, 2],
            merges: vec![MergeStrategy::Link],
            seed: 42,
            flavor: TcFlavor::Left,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub input: String,
    pub size: usize,
    pub mode: String,
    pub workers: usize,
    pub merge: Option<String>,
    pub trial: usize,
    pub answer_count: usize,
    pub plan_ms: f64,
    pub worker_ms: Vec<f64>,
    pub merge_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub input: String,
    pub mode: String,
    pub workers: usize,
    pub merge: Option<String>,
    pub trials: usize,
    pub median_total_ms: f64,
    pub mean_total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Improvement {
    pub input: String,
    pub workers: usize,
    pub merge: Option<String>,
    pub serial_median_ms: f64,
    pub parallel_median_ms: f64,
    /// `100 * (serial_median - parallel_median) / serial_median`.
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub suite: String,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub workers: Vec<usize>,
    pub merges: Vec<String>,
    pub seed: u64,
    pub flavor: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub machine: String,
    pub config: ConfigEcho,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
    pub improvements: Vec<Improvement>,
}

#[derive(Debug)]
pub enum BenchError {
    Params(String),
    Lang(LangError),
    Eval(EvalError),
    /// Two modes disagreed on the answer set size for the same input.
    Mismatch { input: String, detail: String },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Params(msg) => write!(f, "invalid benchmark parameters: {msg}"),
            BenchError::Lang(e) => e.fmt(f),
            BenchError::Eval(e) => e.fmt(f),
            BenchError::Mismatch { input, detail } => write!(
                f,
                "answer sets disagree across modes on {input}: {detail}; \
                 refusing to report timings for inconsistent runs"
            ),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<LangError> for BenchError {
    fn from(e: LangError) -> Self {
        BenchError::Lang(e)
    }
}

impl From<EvalError> for BenchError {
    fn from(e: EvalError) -> Self {
        BenchError::Eval(e)
    }
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

fn machine_note() -> String {
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{} {}; {} hardware threads",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cores
    )
}

fn merge_label(m: MergeStrategy) -> &'static str {
    match m {
        MergeStrategy::Link => "link",
        MergeStrategy::Copy => "copy",
    }
}

fn row_from_result(
    input: &str,
    size: usize,
    mode: &str,
    workers: usize,
    merge: Option<MergeStrategy>,
    trial: usize,
    result: &QueryResult,
) -> BenchRow {
    BenchRow {
        input: input.to_string(),
        size,
        mode: mode.to_string(),
        workers,
        merge: merge.map(|m| merge_label(m).to_string()),
        trial,
        answer_count: result.count(),
        plan_ms: result.stats.plan_ms,
        worker_ms: result.stats.worker_ms.clone(),
        merge_ms: result.stats.merge_ms,
        total_ms: result.stats.total_ms,
    }
}

fn check_counts(input: &str, rows: &[BenchRow]) -> Result<(), BenchError> {
    let mut iter = rows.iter().filter(|r| r.input == input);
    let first = match iter.next() {
        Some(r) => r,
        None => return Ok(()),
    };
    for row in iter {
        if row.answer_count != first.answer_count {
            return Err(BenchError::Mismatch {
                input: input.to_string(),
                detail: format!(
                    "{} (workers={}) found {} answers but {} (workers={}) found {}",
                    first.mode,
                    first.workers,
                    first.answer_count,
                    row.mode,
                    row.workers,
                    row.answer_count
                ),
            });
        }
    }
    Ok(())
}

/// Runs one query-based input (TC or points-to) under every requested
/// worker/merge configuration.
fn run_query_configs(
    params: &BenchParams,
    input: &str,
    size: usize,
    rows: &mut Vec<BenchRow>,
    mut eval: impl FnMut(&EvalConfig) -> Result<QueryResult, BenchError>,
) -> Result<(), BenchError> {
    for &w in &params.workers {
        if w <= 1 {
            for trial in 0..params.trials {
                let result = eval(&EvalConfig::serial())?;
                rows.push(row_from_result(input, size, "serial", 1, None, trial, &result));
            }
        } else {
            for &merge in &params.merges {
                for trial in 0..params.trials {
                    let mut cfg = EvalConfig::parallel(w);
                    cfg.merge_strategy = merge;
                    let result = eval(&cfg)?;
                    rows.push(row_from_result(
                        input,
                        size,
                        "parallel",
                        w,
                        Some(merge),
                        trial,
                        &result,
                    ));
                }
            }
        }
    }
    check_counts(input, rows)
}

fn bench_tc(params: &BenchParams, rows: &mut Vec<BenchRow>) -> Result<(), BenchError> {
    for &size in &params.sizes {
        let graph = EdgeList::complete(size as u32);
        let mut program = graph.to_program(params.flavor)?;
        let query = EdgeList::reach_query(&mut program, params.flavor, 0)?;
        let input = format!("complete({size})");
        run_query_configs(params, &input, size, rows, |cfg| {
            let result = match cfg.mode {
                crate::engine::EvalMode::Serial => solve_serial(&program, &query, cfg)?,
                _ => solve_parallel(&program, &query, cfg)?,
            };
            Ok(result)
        })?;
    }
    Ok(())
}

fn bench_pointsto(params: &BenchParams, rows: &mut Vec<BenchRow>) -> Result<(), BenchError> {
    for &size in &params.sizes {
        let gen = PointstoGen::generate(size as u32, params.seed);
        let facts = gen.to_facts();
        let root = gen.root_var();
        let input = format!("pointsto({size})");
        run_query_configs(params, &input, size, rows, |cfg| {
            Ok(run_pointsto(&facts, &root, cfg)?)
        })?;
    }
    Ok(())
}

/// Merges per trial are batched and the batch time divided out, so the
/// per-merge figure stays readable at nanosecond scale.
const MERGES_PER_TRIAL: usize = 8;

fn synthetic_child(size: usize, offset: usize) -> AnswerTable {
    let mut table = AnswerTable::new(2);
    for i in 0..size {
        let x = (offset + i) as u32;
        table
            .insert(&[ConstId(x / 1000), ConstId(x % 1000 + 1_000_000)])
            .expect("fresh tables accept inserts");
    }
    table.seal().expect("fresh tables seal");
    table
}

fn bench_merge(params: &BenchParams, rows: &mut Vec<BenchRow>) -> Result<(), BenchError> {
    for &size in &params.sizes {
        let input = format!("table({size})");
        for strategy in [MergeStrategy::Link, MergeStrategy::Copy] {
            for trial in 0..params.trials {
                let mut children: Vec<AnswerTable> = (0..MERGES_PER_TRIAL)
                    .map(|c| synthetic_child(size, c * size))
                    .collect();
                let mut parent = AnswerTable::new(2);
                parent.reserve_segments(MERGES_PER_TRIAL);
                // Touch each child's table header so the timed section sees
                // the operation cost, not the cache miss of reaching a table
                // built megabytes ago.
                for child in &children {
                    std::hint::black_box(child.total_count());
                    let chain_len: usize = child.segments().map(|s| s.count()).sum();
                    std::hint::black_box(chain_len);
                }
                let started = Instant::now();
                for child in children.iter_mut() {
                    parent.merge(child, strategy).map_err(EvalError::from)?;
                }
                let per_merge_ms =
                    started.elapsed().as_secs_f64() * 1e3 / MERGES_PER_TRIAL as f64;
                rows.push(BenchRow {
                    input: input.clone(),
                    size,
                    mode: "merge".to_string(),
                    workers: 1,
                    merge: Some(merge_label(strategy).to_string()),
                    trial,
                    answer_count: parent.total_count(),
                    plan_ms: 0.0,
                    worker_ms: Vec::new(),
                    merge_ms: per_merge_ms,
                    total_ms: per_merge_ms,
                });
            }
        }
        check_counts(&input, rows)?;
    }
    Ok(())
}

fn aggregate(rows: &[BenchRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(String, String, usize, Option<String>)> = rows
        .iter()
        .map(|r| (r.input.clone(), r.mode.clone(), r.workers, r.merge.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(input, mode, workers, merge)| {
            let totals: Vec<f64> = rows
                .iter()
                .filter(|r| {
                    r.input == input && r.mode == mode && r.workers == workers && r.merge == merge
                })
                .map(|r| r.total_ms)
                .collect();
            Aggregate {
                input,
                mode,
                workers,
                merge,
                trials: totals.len(),
                median_total_ms: median(&totals),
                mean_total_ms: mean(&totals),
            }
        })
        .collect()
}

fn improvements(aggregates: &[Aggregate]) -> Vec<Improvement> {
    let mut out = Vec::new();
    for agg in aggregates {
        if agg.mode != "parallel" {
            continue;
        }
        let serial = aggregates
            .iter()
            .find(|a| a.input == agg.input && a.mode == "serial");
        if let Some(serial) = serial {
            let s = serial.median_total_ms;
            let p = agg.median_total_ms;
            out.push(Improvement {
                input: agg.input.clone(),
                workers: agg.workers,
                merge: agg.merge.clone(),
                serial_median_ms: s,
                parallel_median_ms: p,
                improvement_pct: if s > 0.0 { 100.0 * (s - p) / s } else { 0.0 },
            });
        }
    }
    out
}

pub fn run_bench(params: &BenchParams) -> Result<BenchReport, BenchError> {
    if params.sizes.is_empty() {
        return Err(BenchError::Params("at least one size is required".into()));
    }
    if params.trials == 0 {
        return Err(BenchError::Params("trials must be at least 1".into()));
    }
    if params.suite != Suite::Merge {
        if params.workers.is_empty() {
            return Err(BenchError::Params("at least one worker count required".into()));
        }
        if params.merges.is_empty() {
            return Err(BenchError::Params("at least one merge strategy required".into()));
        }
    }
    let mut rows = Vec::new();
    match params.suite {
        Suite::Tc => bench_tc(params, &mut rows)?,
        Suite::Pointsto => bench_pointsto(params, &mut rows)?,
        Suite::Merge => bench_merge(params, &mut rows)?,
    }
    let aggregates = aggregate(&rows);
    let improvements = improvements(&aggregates);
    Ok(BenchReport {
        machine: machine_note(),
        config: ConfigEcho {
            suite: params.suite.to_string(),
            sizes: params.sizes.clone(),
            trials: params.trials,
            workers: params.workers.clone(),
            merges: params.merges.iter().map(|&m| merge_label(m).to_string()).collect(),
            seed: params.seed,
            flavor: match params.flavor {
                TcFlavor::Right => "right".to_string(),
                TcFlavor::Left => "left".to_string(),
            },
        },
        rows,
        aggregates,
        improvements,
    })
}

/// Flattens the report rows as CSV; `worker_ms` samples are joined with `;`.
pub fn report_to_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "input,size,mode,workers,merge,trial,answer_count,plan_ms,worker_ms,merge_ms,total_ms\n",
    );
    for r in &report.rows {
        let worker_ms = r
            .worker_ms
            .iter()
            .map(|ms| format!("{ms:.6}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{},{:.6},{:.6}\n",
            r.input,
            r.size,
            r.mode,
            r.workers,
            r.merge.as_deref().unwrap_or("-"),
            r.trial,
            r.answer_count,
            r.plan_ms,
            worker_ms,
            r.merge_ms,
            r.total_ms
        ));
    }
    out
}
