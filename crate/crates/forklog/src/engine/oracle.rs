//! Naive bottom-up fixpoint evaluation.
//!
//! Every round re-derives all rule consequences against the full current fact
//! set and stops when nothing new appears. No deltas, no semi-naive
//! bookkeeping: this evaluator trades speed for being obviously correct, and
//! serves as the reference the tabled evaluators are checked against. The
//! only concession to scale is a first-argument hash index, rebuilt from
//! scratch each round.

use std::collections::{HashMap, HashSet};

use crate::lang::{Atom, ConstId, PredId, Program, Query, Term, Tuple};

use super::{EvalError, DEFAULT_FACT_LIMIT};

/// Least-model answers to `query` with the default resource bound.
pub fn solve_oracle(program: &Program, query: &Query) -> Result<HashSet<Tuple>, EvalError> {
    solve_oracle_bounded(program, query, DEFAULT_FACT_LIMIT)
}

struct RoundIndex {
    facts: HashMap<PredId, Vec<Tuple>>,
    by_first: HashMap<(PredId, ConstId), Vec<u32>>,
}

impl RoundIndex {
    fn build(db: &HashMap<PredId, HashSet<Tuple>>) -> RoundIndex {
        let mut facts: HashMap<PredId, Vec<Tuple>> = HashMap::new();
        let mut by_first: HashMap<(PredId, ConstId), Vec<u32>> = HashMap::new();
        for (&pred, tuples) in db {
            let list: Vec<Tuple> = tuples.iter().cloned().collect();
            for (row, t) in list.iter().enumerate() {
                by_first.entry((pred, t[0])).or_default().push(row as u32);
            }
            facts.insert(pred, list);
        }
        RoundIndex { facts, by_first }
    }

    fn candidates(&self, pred: PredId, first: Option<ConstId>) -> &[u32] {
        static EMPTY: &[u32] = &[];
        match first {
            Some(c) => self
                .by_first
                .get(&(pred, c))
                .map(|v| v.as_slice())
                .unwrap_or(EMPTY),
            None => EMPTY,
        }
    }
}

type Env<'a> = Vec<(&'a str, ConstId)>;

fn env_get(env: &Env<'_>, var: &str) -> Option<ConstId> {
    env.iter().rev().find(|(v, _)| *v == var).map(|&(_, c)| c)
}

/// Binds `atom` against `tuple`, extending `env`; on failure the caller
/// truncates back to its checkpoint.
fn unify<'a>(atom: &'a Atom, tuple: &[ConstId], env: &mut Env<'a>) -> bool {
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

fn match_body<'a>(
    body: &'a [Atom],
    pos: usize,
    env: &mut Env<'a>,
    index: &RoundIndex,
    derive: &mut dyn FnMut(&Env<'a>),
) {
    if pos == body.len() {
        derive(env);
        return;
    }
    let atom = &body[pos];
    let first = match &atom.args[0] {
        Term::Const(c) => Some(*c),
        Term::Var(v) => env_get(env, v),
    };
    let checkpoint = env.len();
    match first {
        Some(c) => {
            let rows = index.candidates(atom.pred, Some(c));
            let facts = index.facts.get(&atom.pred);
            for &row in rows {
                let tuple = &facts.unwrap()[row as usize];
                if unify(atom, tuple, env) {
                    match_body(body, pos + 1, env, index, derive);
                }
                env.truncate(checkpoint);
            }
        }
        None => {
            if let Some(facts) = index.facts.get(&atom.pred) {
                for tuple in facts {
                    if unify(atom, tuple, env) {
                        match_body(body, pos + 1, env, index, derive);
                    }
                    env.truncate(checkpoint);
                }
            }
        }
    }
}

/// Least-model answers to `query`, aborting once the database holds more than
/// `max_facts` tuples.
pub fn solve_oracle_bounded(
    program: &Program,
    query: &Query,
    max_facts: usize,
) -> Result<HashSet<Tuple>, EvalError> {
    let mut db: HashMap<PredId, HashSet<Tuple>> = HashMap::new();
    for pred in program.preds() {
        if let Some(facts) = program.facts_for(pred) {
            db.entry(pred)
                .or_default()
                .extend(facts.iter().map(|t| t.to_vec()));
        }
    }
    loop {
        let index = RoundIndex::build(&db);
        let mut fresh: Vec<(PredId, Tuple)> = Vec::new();
        for clause in program.clauses() {
            if clause.is_fact() {
                continue;
            }
            let mut env: Env<'_> = Vec::new();
            match_body(&clause.body, 0, &mut env, &index, &mut |env| {
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
                fresh.push((clause.head.pred, tuple));
            });
        }
        let mut grew = false;
        for (pred, tuple) in fresh {
            if db.entry(pred).or_default().insert(tuple) {
                grew = true;
            }
        }
        let total: usize = db.values().map(|s| s.len()).sum();
        if total > max_facts {
            return Err(EvalError::Resource {
                derived: total,
                limit: max_facts,
            });
        }
        if !grew {
            break;
        }
    }
    let answers = db
        .remove(&query.pred)
        .unwrap_or_default()
        .into_iter()
        .filter(|t| query.matches(t))
        .collect();
    Ok(answers)
}
