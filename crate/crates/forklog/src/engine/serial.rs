//! Serial tabled evaluation.
//!
//! Subgoals (predicate calls with a concrete bound-argument pattern) are
//! memoized in a subgoal table: the first call evaluates the defining
//! clauses, later calls read the stored answers. Recursion reaches its
//! fixpoint by answer propagation: whenever a tabled call occurs in a rule
//! body, the evaluation suspends into a consumer record holding the bindings
//! made so far plus a cursor into the callee's insertion log; every new
//! answer re-schedules the consumer to resume the remaining body. The agenda
//! drains when no table can grow, so each distinct subgoal is evaluated
//! exactly once regardless of how many call sites hit it.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use crate::lang::{Atom, Clause, ConstId, PredId, Program, Query, Term, Tuple};
use crate::tables::{AnswerTable, InsertOutcome};

use super::{EvalConfig, EvalError, EvalStats, QueryResult};

type SubgoalId = usize;
type Env<'p> = Vec<(&'p str, ConstId)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SubgoalKey {
    pred: PredId,
    bound: Vec<Option<ConstId>>,
}

/// A rule-body continuation suspended on a tabled call.
struct Consumer<'p> {
    /// Subgoal whose table receives head tuples derived by this continuation.
    owner: SubgoalId,
    clause: &'p Clause,
    /// Body position of the consumed atom.
    pos: usize,
    /// Bindings established before `pos`.
    env: Env<'p>,
    /// Rows of the supplier's log consumed so far.
    cursor: usize,
    scheduled: bool,
}

struct Subgoal<'p> {
    key: SubgoalKey,
    answers: AnswerTable,
    consumers: Vec<Consumer<'p>>,
}

enum Task {
    Start(SubgoalId),
    Drain { supplier: SubgoalId, consumer: usize },
}

struct Engine<'p> {
    program: &'p Program,
    subgoals: Vec<Subgoal<'p>>,
    ids: HashMap<SubgoalKey, SubgoalId>,
    agenda: VecDeque<Task>,
    derived: usize,
    limit: usize,
    starts_run: usize,
}

fn env_get(env: &Env<'_>, var: &str) -> Option<ConstId> {
    env.iter().rev().find(|(v, _)| *v == var).map(|&(_, c)| c)
}

fn unify<'p>(atom: &'p Atom, tuple: &[ConstId], env: &mut Env<'p>) -> bool {
    for (term, &value) in atom.args.iter().zip(tuple) {
        match term {
            Term::Const(c) => {
                if *c != value {
                    return false;
                }
            }
            Term::Var(v) => match env_get(env, v) {
                Some(bound) => {
                    if bound != value {
                        return false;
                    }
                }
                None => env.push((v, value)),
            },
        }
    }
    true
}

impl<'p> Engine<'p> {
    fn new(program: &'p Program, limit: usize) -> Self {
        Engine {
            program,
            subgoals: Vec::new(),
            ids: HashMap::new(),
            agenda: VecDeque::new(),
            derived: 0,
            limit,
            starts_run: 0,
        }
    }

    /// Looks up or registers a subgoal; new subgoals are queued for their
    /// one-time evaluation.
    fn subgoal(&mut self, key: SubgoalKey) -> SubgoalId {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.subgoals.len();
        let arity = self.program.pred_arity(key.pred);
        self.subgoals.push(Subgoal {
            key: key.clone(),
            answers: AnswerTable::new(arity),
            consumers: Vec::new(),
        });
        self.ids.insert(key, id);
        self.agenda.push_back(Task::Start(id));
        id
    }

    fn insert_answer(&mut self, subgoal: SubgoalId, tuple: &[ConstId]) -> Result<(), EvalError> {
        let sub = &mut self.subgoals[subgoal];
        if sub.answers.insert(tuple)? == InsertOutcome::Duplicate {
            return Ok(());
        }
        self.derived += 1;
        if self.derived > self.limit {
            return Err(EvalError::Resource {
                derived: self.derived,
                limit: self.limit,
            });
        }
        for (idx, consumer) in self.subgoals[subgoal].consumers.iter_mut().enumerate() {
            if !consumer.scheduled {
                consumer.scheduled = true;
                self.agenda.push_back(Task::Drain {
                    supplier: subgoal,
                    consumer: idx,
                });
            }
        }
        Ok(())
    }

    /// Continues a clause body at `pos` under `env`. Extensional atoms are
    /// enumerated inline; a rule-defined atom suspends into a consumer on its
    /// subgoal. Recursion depth is bounded by the body length.
    fn eval_body(
        &mut self,
        owner: SubgoalId,
        clause: &'p Clause,
        pos: usize,
        env: &mut Env<'p>,
    ) -> Result<(), EvalError> {
        if pos == clause.body.len() {
            let tuple: Tuple = clause
                .head
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => *c,
                    Term::Var(v) => {
                        env_get(env, v).expect("head variables are bound (range restriction)")
                    }
                })
                .collect();
            return self.insert_answer(owner, &tuple);
        }
        let atom = &clause.body[pos];
        let rule_defined = self.program.rules_for(atom.pred).next().is_some();
        if rule_defined {
            let bound: Vec<Option<ConstId>> = atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Some(*c),
                    Term::Var(v) => env_get(env, v),
                })
                .collect();
            let callee = self.subgoal(SubgoalKey {
                pred: atom.pred,
                bound,
            });
            let consumer = Consumer {
                owner,
                clause,
                pos,
                env: env.clone(),
                cursor: 0,
                scheduled: true,
            };
            self.subgoals[callee].consumers.push(consumer);
            let idx = self.subgoals[callee].consumers.len() - 1;
            self.agenda.push_back(Task::Drain {
                supplier: callee,
                consumer: idx,
            });
            return Ok(());
        }
        // Fact-defined (or empty) predicate: enumerate matching facts.
        let program = self.program;
        let facts = match program.facts_for(atom.pred) {
            Some(f) => f,
            None => return Ok(()),
        };
        let first = match &atom.args[0] {
            Term::Const(c) => Some(*c),
            Term::Var(v) => env_get(env, v),
        };
        let checkpoint = env.len();
        match first {
            Some(c) if program.is_edb(atom.pred) => {
                let rows: Vec<&[ConstId]> = facts.rows_with_first(c).collect();
                for tuple in rows {
                    if unify(atom, tuple, env) {
                        self.eval_body(owner, clause, pos + 1, env)?;
                    }
                    env.truncate(checkpoint);
                }
            }
            _ => {
                for tuple in facts.iter() {
                    if unify(atom, tuple, env) {
                        self.eval_body(owner, clause, pos + 1, env)?;
                    }
                    env.truncate(checkpoint);
                }
            }
        }
        Ok(())
    }

    /// One-time evaluation of a subgoal: seed any stored facts of its
    /// predicate, then run each defining clause against the call pattern.
    fn start(&mut self, id: SubgoalId) -> Result<(), EvalError> {
        self.starts_run += 1;
        let key = self.subgoals[id].key.clone();
        let program = self.program;
        if let Some(facts) = program.facts_for(key.pred) {
            let matching: Vec<Tuple> = facts
                .iter()
                .filter(|t| {
                    key.bound
                        .iter()
                        .zip(t.iter())
                        .all(|(b, &c)| b.map_or(true, |k| k == c))
                })
                .map(|t| t.to_vec())
                .collect();
            for tuple in matching {
                self.insert_answer(id, &tuple)?;
            }
        }
        let clauses: Vec<&'p Clause> = program.rules_for(key.pred).collect();
        for clause in clauses {
            let mut env: Env<'p> = Vec::new();
            let mut applicable = true;
            for (term, bound) in clause.head.args.iter().zip(&key.bound) {
                if let Some(k) = bound {
                    match term {
                        Term::Const(c) => {
                            if c != k {
                                applicable = false;
                                break;
                            }
                        }
                        Term::Var(v) => match env_get(&env, v) {
                            Some(existing) => {
                                if existing != *k {
                                    applicable = false;
                                    break;
                                }
                            }
                            None => env.push((v, *k)),
                        },
                    }
                }
            }
            if applicable {
                self.eval_body(id, clause, 0, &mut env)?;
            }
        }
        Ok(())
    }

    fn drain(&mut self, supplier: SubgoalId, consumer_idx: usize) -> Result<(), EvalError> {
        let (rows, owner, clause, pos, env_base) = {
            let sub = &mut self.subgoals[supplier];
            let answers = &sub.answers;
            let segment = answers.segments().next().expect("tables have a segment");
            let consumer = &mut sub.consumers[consumer_idx];
            consumer.scheduled = false;
            let from = consumer.cursor;
            let rows: Vec<Tuple> = segment.iter_from(from).map(|r| r.to_vec()).collect();
            consumer.cursor = from + rows.len();
            (
                rows,
                consumer.owner,
                consumer.clause,
                consumer.pos,
                consumer.env.clone(),
            )
        };
        let atom = &clause.body[pos];
        let mut env = env_base;
        let checkpoint = env.len();
        for row in &rows {
            if unify(atom, row, &mut env) {
                self.eval_body(owner, clause, pos + 1, &mut env)?;
            }
            env.truncate(checkpoint);
        }
        Ok(())
    }

    fn run(&mut self) -> Result<(), EvalError> {
        while let Some(task) = self.agenda.pop_front() {
            match task {
                Task::Start(id) => self.start(id)?,
                Task::Drain { supplier, consumer } => self.drain(supplier, consumer)?,
            }
        }
        debug_assert_eq!(self.starts_run, self.subgoals.len());
        Ok(())
    }
}

/// Evaluates `query` top-down with tabling. Answers equal the oracle's set;
/// queries on extensional predicates are answered by fact lookup alone.
pub fn solve_serial(
    program: &Program,
    query: &Query,
    config: &EvalConfig,
) -> Result<QueryResult, EvalError> {
    let started = Instant::now();
    let arity = program.pred_arity(query.pred);
    if program.is_edb(query.pred) {
        let mut table = AnswerTable::new(arity);
        if let Some(facts) = program.facts_for(query.pred) {
            for tuple in facts.iter() {
                if query.matches(tuple) {
                    table.insert(tuple)?;
                }
            }
        }
        table.seal()?;
        let stats = EvalStats {
            total_ms: started.elapsed().as_secs_f64() * 1e3,
            answer_count: table.total_count(),
            ..EvalStats::default()
        };
        return Ok(QueryResult::new(table, false, stats));
    }
    let mut engine = Engine::new(program, config.max_derived_facts);
    let root = engine.subgoal(SubgoalKey {
        pred: query.pred,
        bound: query.bound_args(),
    });
    engine.run()?;
    let mut answers = std::mem::replace(&mut engine.subgoals[root].answers, AnswerTable::new(arity));
    answers.seal()?;
    let stats = EvalStats {
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        answer_count: answers.total_count(),
        subgoals_evaluated: engine.starts_run,
        ..EvalStats::default()
    };
    Ok(QueryResult::new(answers, false, stats))
}
