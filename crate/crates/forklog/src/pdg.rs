//! Predicate dependency analysis and parallel planning.
//!
//! [`build_pdg`] derives the predicate-level call graph and its cyclic
//! (recursive) predicates. [`classify_shape`] decides whether a program/query
//! pair is in the reachability class the parallel evaluator handles: linear
//! transitive closure over an extensional step relation, queried with the
//! first argument bound. [`plan_split`] walks step facts from the bound start
//! constant until the frontier fans out, producing per-worker branch sets and
//! the answers already discovered along the way.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::lang::{ConstId, PredId, Program, Query, QueryArg, Term, Tuple};

/// Predicate-level call graph with its cyclic node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDependencyGraph {
    /// All predicates, in interning order.
    pub nodes: Vec<PredId>,
    /// Directed edges head-predicate -> body-predicate, sorted and deduped.
    pub edges: Vec<(PredId, PredId)>,
    /// Predicates that reach themselves via at least one edge, sorted.
    pub cyclic: Vec<PredId>,
}

impl PredicateDependencyGraph {
    pub fn is_cyclic(&self, pred: PredId) -> bool {
        self.cyclic.binary_search(&pred).is_ok()
    }

    pub fn successors(&self, pred: PredId) -> impl Iterator<Item = PredId> + '_ {
        self.edges
            .iter()
            .filter(move |(from, _)| *from == pred)
            .map(|&(_, to)| to)
    }
}

/// Builds the predicate dependency graph of a validated program.
pub fn build_pdg(program: &Program) -> PredicateDependencyGraph {
    let nodes: Vec<PredId> = program.preds().collect();
    let mut edges: BTreeSet<(PredId, PredId)> = BTreeSet::new();
    for clause in program.clauses() {
        for body_atom in &clause.body {
            edges.insert((clause.head.pred, body_atom.pred));
        }
    }
    let edges: Vec<(PredId, PredId)> = edges.into_iter().collect();
    // p is cyclic iff p reaches itself by one or more edges.
    let mut cyclic = Vec::new();
    for &p in &nodes {
        let mut stack: Vec<PredId> = vec![p];
        let mut seen: HashSet<PredId> = HashSet::new();
        let mut found = false;
        while let Some(u) = stack.pop() {
            for (from, to) in &edges {
                if *from != u {
                    continue;
                }
                if *to == p {
                    found = true;
                    break;
                }
                if seen.insert(*to) {
                    stack.push(*to);
                }
            }
            if found {
                break;
            }
        }
        if found {
            cyclic.push(p);
        }
    }
    PredicateDependencyGraph {
        nodes,
        edges,
        cyclic,
    }
}

/// The predicates of a reachability-class program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeParts {
    /// The tabled recursive predicate.
    pub recursive: PredId,
    /// EDB predicate supplying step edges.
    pub step: PredId,
    /// EDB predicate supplying base answers; equals `step` for plain
    /// transitive closure.
    pub base: PredId,
}

/// Outcome of shape classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachabilityShape {
    /// `r(X,Y) :- b(X,Y).  r(X,Y) :- e(X,Z), r(Z,Y).`
    RightLinear(ShapeParts),
    /// `r(X,Y) :- b(X,Y).  r(X,Y) :- r(X,Z), e(Z,Y).`
    LeftLinear(ShapeParts),
    NotReachability,
}

impl ReachabilityShape {
    pub fn parts(&self) -> Option<&ShapeParts> {
        match self {
            ReachabilityShape::RightLinear(p) | ReachabilityShape::LeftLinear(p) => Some(p),
            ReachabilityShape::NotReachability => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ReachabilityShape::RightLinear(_) => "right_linear",
            ReachabilityShape::LeftLinear(_) => "left_linear",
            ReachabilityShape::NotReachability => "not_reachability",
        }
    }
}

fn as_var(term: &Term) -> Option<&str> {
    match term {
        Term::Var(v) => Some(v.as_str()),
        Term::Const(_) => None,
    }
}

enum ClauseForm {
    Base(PredId),
    RightStep(PredId),
    LeftStep(PredId),
    Other,
}

/// Matches one clause of `r` against the base and step patterns, up to
/// variable renaming.
fn clause_form(program: &Program, clause: &crate::lang::Clause, r: PredId) -> ClauseForm {
    let head = &clause.head;
    let (x, y) = match (as_var(&head.args[0]), as_var(&head.args[1])) {
        (Some(x), Some(y)) if x != y => (x, y),
        _ => return ClauseForm::Other,
    };
    match clause.body.as_slice() {
        [only] => {
            if program.is_edb(only.pred)
                && program.pred_arity(only.pred) == 2
                && as_var(&only.args[0]) == Some(x)
                && as_var(&only.args[1]) == Some(y)
            {
                ClauseForm::Base(only.pred)
            } else {
                ClauseForm::Other
            }
        }
        [first, second] => {
            // Right-linear: e(X,Z), r(Z,Y) with Z fresh.
            if first.pred != r
                && program.is_edb(first.pred)
                && program.pred_arity(first.pred) == 2
                && second.pred == r
            {
                if let (Some(fx), Some(z1), Some(z2), Some(sy)) = (
                    as_var(&first.args[0]),
                    as_var(&first.args[1]),
                    as_var(&second.args[0]),
                    as_var(&second.args[1]),
                ) {
                    if fx == x && sy == y && z1 == z2 && z1 != x && z1 != y {
                        return ClauseForm::RightStep(first.pred);
                    }
                }
            }
            // Left-linear: r(X,Z), e(Z,Y) with Z fresh.
            if first.pred == r
                && second.pred != r
                && program.is_edb(second.pred)
                && program.pred_arity(second.pred) == 2
            {
                if let (Some(fx), Some(z1), Some(z2), Some(sy)) = (
                    as_var(&first.args[0]),
                    as_var(&first.args[1]),
                    as_var(&second.args[0]),
                    as_var(&second.args[1]),
                ) {
                    if fx == x && sy == y && z1 == z2 && z1 != x && z1 != y {
                        return ClauseForm::LeftStep(second.pred);
                    }
                }
            }
            ClauseForm::Other
        }
        _ => ClauseForm::Other,
    }
}

/// Classifies the program/query pair. Queries outside the class (wrong
/// binding pattern, untabled predicate, clauses not matching the linear
/// patterns) yield `NotReachability`; that is a value, not an error.
pub fn classify_shape(program: &Program, query: &Query) -> ReachabilityShape {
    let r = query.pred;
    if !program.is_tabled(r)
        || program.pred_arity(r) != 2
        || query.mask() != [true, false]
        || program.facts_for(r).is_some()
    {
        return ReachabilityShape::NotReachability;
    }
    let clauses: Vec<&crate::lang::Clause> = program.rules_for(r).collect();
    if clauses.len() != 2 {
        return ReachabilityShape::NotReachability;
    }
    let forms = (
        clause_form(program, clauses[0], r),
        clause_form(program, clauses[1], r),
    );
    let (base, step) = match forms {
        (ClauseForm::Base(b), ClauseForm::RightStep(e))
        | (ClauseForm::RightStep(e), ClauseForm::Base(b)) => {
            return ReachabilityShape::RightLinear(ShapeParts {
                recursive: r,
                step: e,
                base: b,
            })
        }
        (ClauseForm::Base(b), ClauseForm::LeftStep(e))
        | (ClauseForm::LeftStep(e), ClauseForm::Base(b)) => (b, e),
        _ => return ReachabilityShape::NotReachability,
    };
    ReachabilityShape::LeftLinear(ShapeParts {
        recursive: r,
        step,
        base,
    })
}

/// Frontier partition and pre-discovered answers, produced before workers
/// launch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPlan {
    pub shape: ReachabilityShape,
    /// The bound query constant.
    pub start: ConstId,
    /// Disjoint non-empty frontier sets, one per worker.
    pub branches: Vec<Vec<ConstId>>,
    /// Constants visited (and therefore claimed by the parent) during
    /// planning, in visit order; always begins with `start`.
    pub pre_claimed: Vec<ConstId>,
    /// Ground answers discovered during planning, owned by the parent table.
    pub pre_answers: Vec<Tuple>,
    /// True when planning saw a step edge back into `start` (the start is
    /// then itself an answer for transitive-closure shapes).
    pub start_is_answer: bool,
}

/// Outcome of [`plan_split`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanOutcome {
    Split(ParallelPlan),
    /// The reachable set was exhausted before any fan-out of two or more;
    /// evaluate serially.
    NoSplit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    NotReachability,
    /// Parallel planning needs at least two workers.
    NotEnoughWorkers(usize),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::NotReachability => {
                write!(f, "query is not in the parallelizable reachability class")
            }
            PlanError::NotEnoughWorkers(k) => {
                write!(f, "parallel planning requires at least 2 workers, got {k}")
            }
        }
    }
}

impl std::error::Error for PlanError {}

/// Splits the initial query frontier across up to `workers` branches.
///
/// Expansion follows step facts from the start constant, absorbing
/// single-successor layers into the parent's claimed set, and stops at the
/// first layer with two or more distinct unvisited successors. Successors are
/// assigned to branches round-robin in interning order. A fan-out `f` with
/// `2 <= f < workers` yields `f` single-constant branches.
pub fn plan_split(
    program: &Program,
    query: &Query,
    workers: usize,
) -> Result<PlanOutcome, PlanError> {
    let shape = classify_shape(program, query);
    let parts = match shape.parts() {
        Some(p) => *p,
        None => return Err(PlanError::NotReachability),
    };
    if workers < 2 {
        return Err(PlanError::NotEnoughWorkers(workers));
    }
    let start = match query.args.first() {
        Some(QueryArg::Bound(c)) => *c,
        _ => return Err(PlanError::NotReachability),
    };
    let step_facts = program.facts_for(parts.step);
    let base_facts = program.facts_for(parts.base);
    let tc = parts.base == parts.step;

    let mut visited: HashSet<ConstId> = HashSet::new();
    let mut pre_claimed: Vec<ConstId> = Vec::new();
    let mut pre_answers: Vec<Tuple> = Vec::new();
    let mut start_is_answer = false;

    let visit = |node: ConstId,
                     visited: &mut HashSet<ConstId>,
                     pre_claimed: &mut Vec<ConstId>,
                     pre_answers: &mut Vec<Tuple>| {
        visited.insert(node);
        pre_claimed.push(node);
        if tc {
            if node != start {
                pre_answers.push(vec![start, node]);
            }
        } else if let Some(base) = base_facts {
            for row in base.rows_with_first(node) {
                pre_answers.push(vec![start, row[1]]);
            }
        }
    };

    visit(start, &mut visited, &mut pre_claimed, &mut pre_answers);
    let mut current = start;
    loop {
        let mut succs: BTreeSet<ConstId> = BTreeSet::new();
        if let Some(facts) = step_facts {
            for row in facts.rows_with_first(current) {
                let next = row[1];
                if next == start {
                    start_is_answer = true;
                }
                if !visited.contains(&next) {
                    succs.insert(next);
                }
            }
        }
        match succs.len() {
            0 => return Ok(PlanOutcome::NoSplit),
            1 => {
                let only = *succs.iter().next().unwrap();
                visit(only, &mut visited, &mut pre_claimed, &mut pre_answers);
                current = only;
            }
            f => {
                let branch_count = f.min(workers);
                let mut branches: Vec<Vec<ConstId>> = vec![Vec::new(); branch_count];
                for (i, node) in succs.into_iter().enumerate() {
                    branches[i % branch_count].push(node);
                }
                if tc && start_is_answer {
                    pre_answers.push(vec![start, start]);
                }
                return Ok(PlanOutcome::Split(ParallelPlan {
                    shape,
                    start,
                    branches,
                    pre_claimed,
                    pre_answers,
                    start_is_answer,
                }));
            }
        }
    }
}

impl ParallelPlan {
    /// JSON view with interned ids resolved to their text, for `explain-plan`.
    pub fn to_json(&self, program: &Program) -> serde_json::Value {
        let text = |c: &ConstId| program.const_text(*c).to_string();
        let parts = self.shape.parts().expect("split plans carry a shape");
        serde_json::json!({
            "shape": self.shape.label(),
            "recursive": program.pred_label(parts.recursive),
            "step": program.pred_label(parts.step),
            "base": program.pred_label(parts.base),
            "start": text(&self.start),
            "workers": self.branches.len(),
            "branches": self.branches.iter()
                .map(|b| b.iter().map(text).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "pre_claimed": self.pre_claimed.iter().map(text).collect::<Vec<_>>(),
            "pre_answers": self.pre_answers.iter()
                .map(|t| t.iter().map(text).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "start_is_answer": self.start_is_answer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ProgramBuilder;
    use proptest::prelude::*;

    fn tc_program(edges: &[(&str, &str)]) -> Program {
        let mut text = String::from(
            ":- table reachr/2.\n\
             reachr(X,Y) :- edge(X,Y).\n\
             reachr(X,Y) :- edge(X,Z), reachr(Z,Y).\n",
        );
        for (a, b) in edges {
            text.push_str(&format!("edge({a},{b}).\n"));
        }
        Program::parse(&text).unwrap()
    }

    fn consts(p: &Program, names: &[&str]) -> Vec<ConstId> {
        names.iter().map(|n| p.lookup_const(n).unwrap()).collect()
    }

    #[test]
    fn pdg_of_transitive_closure() {
        let p = tc_program(&[("a", "b")]);
        let g = build_pdg(&p);
        let reachr = p.pred("reachr").unwrap();
        let edge = p.pred("edge").unwrap();
        assert_eq!(g.nodes, vec![reachr, edge]);
        let mut expected = vec![(reachr, edge), (reachr, reachr)];
        expected.sort();
        assert_eq!(g.edges, expected);
        assert_eq!(g.cyclic, vec![reachr]);
        assert!(g.is_cyclic(reachr));
        assert!(!g.is_cyclic(edge));
    }

    #[test]
    fn pdg_of_facts_only() {
        let p = Program::parse("edge(a,b).\nedge(b,c).").unwrap();
        let g = build_pdg(&p);
        assert!(g.edges.is_empty());
        assert!(g.cyclic.is_empty());
    }

    #[test]
    fn pdg_of_mutual_recursion() {
        let p = Program::parse("p(X) :- q(X).\nq(X) :- p(X).\np(a).").unwrap();
        let g = build_pdg(&p);
        let pp = p.pred("p").unwrap();
        let qq = p.pred("q").unwrap();
        let mut cyc = vec![pp, qq];
        cyc.sort();
        assert_eq!(g.cyclic, cyc);
    }

    #[test]
    fn classify_right_linear() {
        let mut p = tc_program(&[("a", "b")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match classify_shape(&p, &q) {
            ReachabilityShape::RightLinear(parts) => {
                assert_eq!(parts.step, p.pred("edge").unwrap());
                assert_eq!(parts.base, p.pred("edge").unwrap());
                assert_eq!(parts.recursive, p.pred("reachr").unwrap());
            }
            other => panic!("expected RightLinear, got {other:?}"),
        }
    }

    #[test]
    fn classify_left_linear() {
        let mut p = Program::parse(
            ":- table reachl/2.\n\
             reachl(X,Y) :- edge(X,Y).\n\
             reachl(X,Y) :- reachl(X,Z), edge(Z,Y).\n\
             edge(a,b).",
        )
        .unwrap();
        let q = p.parse_query("reachl(a,Y)").unwrap();
        assert!(matches!(
            classify_shape(&p, &q),
            ReachabilityShape::LeftLinear(_)
        ));
    }

    #[test]
    fn classify_nonlinear_as_not_reachability() {
        let mut p = Program::parse(
            ":- table r/2.\n\
             r(X,Y) :- edge(X,Y).\n\
             r(X,Y) :- r(X,Z), r(Z,Y).\n\
             edge(a,b).",
        )
        .unwrap();
        let q = p.parse_query("r(a,Y)").unwrap();
        assert_eq!(classify_shape(&p, &q), ReachabilityShape::NotReachability);
    }

    #[test]
    fn classify_pointsto_with_distinct_base() {
        let mut p = Program::parse(
            ":- table pt/2.\n\
             pt(V,H) :- alloc(V,H).\n\
             pt(V,H) :- assign(V,W), pt(W,H).\n\
             alloc(x,h1).\nassign(y,x).",
        )
        .unwrap();
        let q = p.parse_query("pt(y,H)").unwrap();
        match classify_shape(&p, &q) {
            ReachabilityShape::RightLinear(parts) => {
                assert_eq!(parts.step, p.pred("assign").unwrap());
                assert_eq!(parts.base, p.pred("alloc").unwrap());
            }
            other => panic!("expected RightLinear, got {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_free_first_argument() {
        let mut p = tc_program(&[("a", "b")]);
        let q = p.parse_query("reachr(X,Y)").unwrap();
        assert_eq!(classify_shape(&p, &q), ReachabilityShape::NotReachability);
    }

    #[test]
    fn plan_fan_out_at_start() {
        let mut p = tc_program(&[("a", "b"), ("a", "c")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match plan_split(&p, &q, 2).unwrap() {
            PlanOutcome::Split(plan) => {
                assert_eq!(plan.branches, vec![consts(&p, &["b"]), consts(&p, &["c"])]);
                assert_eq!(plan.pre_claimed, consts(&p, &["a"]));
                assert!(plan.pre_answers.is_empty());
                assert!(!plan.start_is_answer);
            }
            PlanOutcome::NoSplit => panic!("expected a split"),
        }
    }

    #[test]
    fn plan_absorbs_chain_until_fan_out() {
        let mut p = tc_program(&[("a", "b"), ("b", "c"), ("c", "d"), ("c", "e")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match plan_split(&p, &q, 2).unwrap() {
            PlanOutcome::Split(plan) => {
                assert_eq!(plan.branches, vec![consts(&p, &["d"]), consts(&p, &["e"])]);
                assert_eq!(plan.pre_claimed, consts(&p, &["a", "b", "c"]));
                let expected: Vec<Tuple> = vec![consts(&p, &["a", "b"]), consts(&p, &["a", "c"])];
                assert_eq!(plan.pre_answers, expected);
            }
            PlanOutcome::NoSplit => panic!("expected a split"),
        }
    }

    #[test]
    fn plan_no_split_on_exhausted_chain() {
        let mut p = tc_program(&[("a", "b")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        assert_eq!(plan_split(&p, &q, 2).unwrap(), PlanOutcome::NoSplit);
    }

    #[test]
    fn plan_small_fan_out_uses_fewer_branches() {
        // Fan-out of two with four requested workers: two singleton branches.
        let mut p = tc_program(&[("a", "b"), ("a", "c")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match plan_split(&p, &q, 4).unwrap() {
            PlanOutcome::Split(plan) => {
                assert_eq!(plan.branches.len(), 2);
                assert!(plan.branches.iter().all(|b| b.len() == 1));
            }
            PlanOutcome::NoSplit => panic!("expected a split"),
        }
    }

    #[test]
    fn plan_round_robin_assignment() {
        let mut p = tc_program(&[("a", "b"), ("a", "c"), ("a", "d"), ("a", "e"), ("a", "f")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match plan_split(&p, &q, 2).unwrap() {
            PlanOutcome::Split(plan) => {
                assert_eq!(
                    plan.branches,
                    vec![consts(&p, &["b", "d", "f"]), consts(&p, &["c", "e"])]
                );
            }
            PlanOutcome::NoSplit => panic!("expected a split"),
        }
    }

    #[test]
    fn plan_detects_edge_back_into_start() {
        let mut p = tc_program(&[("a", "b"), ("b", "a"), ("b", "c"), ("b", "d")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        match plan_split(&p, &q, 2).unwrap() {
            PlanOutcome::Split(plan) => {
                assert!(plan.start_is_answer);
                let a = p.lookup_const("a").unwrap();
                assert!(plan.pre_answers.contains(&vec![a, a]));
            }
            PlanOutcome::NoSplit => panic!("expected a split"),
        }
    }

    #[test]
    fn plan_requires_two_workers() {
        let mut p = tc_program(&[("a", "b"), ("a", "c")]);
        let q = p.parse_query("reachr(a,Y)").unwrap();
        assert_eq!(
            plan_split(&p, &q, 1).unwrap_err(),
            PlanError::NotEnoughWorkers(1)
        );
    }

    #[test]
    fn plan_is_deterministic() {
        let edges = [("a", "b"), ("b", "c"), ("c", "d"), ("c", "e"), ("d", "a")];
        let mut p1 = tc_program(&edges);
        let q1 = p1.parse_query("reachr(a,Y)").unwrap();
        let mut p2 = tc_program(&edges);
        let q2 = p2.parse_query("reachr(a,Y)").unwrap();
        assert_eq!(plan_split(&p1, &q1, 3).unwrap(), plan_split(&p2, &q2, 3).unwrap());
    }

    /// Brute-force cycle oracle: enumerate all simple paths from each node and
    /// check whether any returns to its origin.
    fn brute_force_cyclic(nodes: usize, edges: &[(usize, usize)]) -> Vec<usize> {
        fn dfs(
            origin: usize,
            at: usize,
            edges: &[(usize, usize)],
            on_path: &mut Vec<usize>,
        ) -> bool {
            for &(f, t) in edges {
                if f != at {
                    continue;
                }
                if t == origin {
                    return true;
                }
                if !on_path.contains(&t) {
                    on_path.push(t);
                    if dfs(origin, t, edges, on_path) {
                        return true;
                    }
                    on_path.pop();
                }
            }
            false
        }
        (0..nodes)
            .filter(|&n| dfs(n, n, edges, &mut vec![n]))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// Cycle detection agrees with brute-force simple-path enumeration on
        /// random programs over at most six predicates.
        #[test]
        fn cycles_match_brute_force(
            edges in prop::collection::btree_set((0usize..6, 0usize..6), 0..14)
        ) {
            let mut b = ProgramBuilder::new();
            for i in 0..6 {
                b.table(&format!("p{i}"), 1).unwrap();
            }
            for &(f, t) in &edges {
                b.rule((&format!("p{f}"), &["X"]), &[(&format!("p{t}"), &["X"])])
                    .unwrap();
            }
            let program = b.build().unwrap();
            let g = build_pdg(&program);
            let edge_list: Vec<(usize, usize)> = edges.iter().copied().collect();
            let expected: Vec<PredId> = brute_force_cyclic(6, &edge_list)
                .into_iter()
                .map(|n| program.pred(&format!("p{n}")).unwrap())
                .collect();
            prop_assert_eq!(g.cyclic, expected);
        }
    }
}
