use super::*;
use proptest::prelude::*;

const TC_RIGHT: &str = "\
:- table reachr/2.
reachr(X,Y) :- edge(X,Y).
reachr(X,Y) :- edge(X,Z), reachr(Z,Y).
edge(a,b).
edge(b,c).
";

#[test]
fn single_ground_fact() {
    let p = Program::parse("edge(a,b).").unwrap();
    let edge = p.pred("edge").unwrap();
    assert_eq!(p.facts_for(edge).unwrap().len(), 1);
    assert!(p.is_edb(edge));
    assert_eq!(p.edb_preds().count(), 1);
    assert!(p.tabled_preds().next().is_none());
}

#[test]
fn right_recursive_tc_program() {
    let p = Program::parse(TC_RIGHT).unwrap();
    let reachr = p.pred("reachr").unwrap();
    assert!(p.is_tabled(reachr));
    assert_eq!(p.rules_for(reachr).count(), 2);
    assert_eq!(p.clauses().iter().filter(|c| !c.is_fact()).count(), 2);
    let edge = p.pred("edge").unwrap();
    assert!(p.is_edb(edge));
    assert_eq!(p.facts_for(edge).unwrap().len(), 2);
}

#[test]
fn non_ground_fact_rejected() {
    match Program::parse("p(X).") {
        Err(LangError::Validation(e)) => assert!(e.message.contains("non-ground")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn unsafe_head_variable_rejected() {
    let text = "p(X,Y) :- q(X).\nq(a).";
    match Program::parse(text) {
        Err(LangError::Validation(e)) => assert!(e.message.contains("unsafe variable `Y`")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn arity_conflict_rejected() {
    let text = "edge(a,b).\nedge(a,b,c).";
    match Program::parse(text) {
        Err(LangError::Validation(e)) => assert!(e.message.contains("arity")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn undefined_body_predicate_rejected() {
    let text = "p(X) :- q(X).";
    match Program::parse(text) {
        Err(LangError::Validation(e)) => assert!(e.message.contains("not defined")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn tabled_declaration_counts_as_defined() {
    // A table directive with no clauses behaves as an empty predicate.
    let text = ":- table q/1.\np(X) :- q(X).\nq(a).";
    assert!(Program::parse(text).is_ok());
    let empty = ":- table q/1.\np(X) :- q(X).\nr(a).";
    assert!(Program::parse(empty).is_ok());
}

#[test]
fn parse_error_carries_position() {
    let err = Program::parse("edge(a,\n   ?b).").unwrap_err();
    match err {
        LangError::Parse(e) => {
            assert_eq!(e.line, 2);
            assert_eq!(e.col, 4);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn comments_and_whitespace_ignored() {
    let text = "% a comment\nedge( a , b ). % trailing\n";
    let p = Program::parse(text).unwrap();
    assert_eq!(p.facts_for(p.pred("edge").unwrap()).unwrap().len(), 1);
}

#[test]
fn query_binding_patterns() {
    let mut p = Program::parse(TC_RIGHT).unwrap();
    let q = p.parse_query("reachr(a,Y)").unwrap();
    assert_eq!(q.mask(), vec![true, false]);
    let q = p.parse_query("edge(X,Y)").unwrap();
    assert_eq!(q.mask(), vec![false, false]);
    match p.parse_query("reachr(a,b,c)") {
        Err(LangError::Validation(e)) => assert!(e.message.contains("arity")),
        other => panic!("expected arity validation error, got {other:?}"),
    }
    match p.parse_query("nosuch(a,Y)") {
        Err(LangError::Validation(e)) => assert!(e.message.contains("unknown predicate")),
        other => panic!("expected unknown-predicate error, got {other:?}"),
    }
    match p.parse_query("reachr(X,X)") {
        Err(LangError::Validation(_)) => {}
        other => panic!("expected distinct-variable error, got {other:?}"),
    }
}

#[test]
fn query_interns_unknown_constants() {
    let mut p = Program::parse(TC_RIGHT).unwrap();
    let q = p.parse_query("reachr(zzz,Y)").unwrap();
    match &q.args[0] {
        QueryArg::Bound(c) => assert_eq!(p.const_text(*c), "zzz"),
        other => panic!("expected bound arg, got {other:?}"),
    }
}

#[test]
fn integer_constants_share_id_space() {
    let p = Program::parse("edge(1,b).\nedge(b,1).").unwrap();
    let one = p.lookup_const("1").unwrap();
    let b = p.lookup_const("b").unwrap();
    assert_ne!(one, b);
    // First occurrence order: 1 before b.
    assert!(one < b);
}

#[test]
fn interning_is_injective() {
    let p = Program::parse("p(a,b).\np(b,a).\np(a,a).").unwrap();
    let a1 = p.lookup_const("a").unwrap();
    let b1 = p.lookup_const("b").unwrap();
    assert_ne!(a1, b1);
    assert_eq!(p.const_count(), 2);
}

#[test]
fn fact_index_matches_linear_scan() {
    let text = "edge(a,b).\nedge(a,c).\nedge(b,c).\nedge(c,a).\nedge(a,b).";
    let p = Program::parse(text).unwrap();
    let edge = p.pred("edge").unwrap();
    let facts = p.facts_for(edge).unwrap();
    for key in ["a", "b", "c"] {
        let k = p.lookup_const(key).unwrap();
        let via_index: Vec<Vec<ConstId>> =
            facts.rows_with_first(k).map(|r| r.to_vec()).collect();
        let via_scan: Vec<Vec<ConstId>> = facts
            .iter()
            .filter(|r| r[0] == k)
            .map(|r| r.to_vec())
            .collect();
        assert_eq!(via_index, via_scan);
    }
}

// ---------------------------------------------------------------------------
// Property tests
// ---------------------------------------------------------------------------

/// Generates small valid programs as source text.
fn arb_program_text() -> impl Strategy<Value = String> {
    let consts = prop::sample::select(vec!["a", "b", "c", "d", "7", "42"]);
    let vars = prop::sample::select(vec!["X", "Y", "Z"]);
    let fact = (0usize..3, prop::collection::vec(consts.clone(), 1..4)).prop_map(
        |(p, args)| {
            format!("p{}({}).", p, args.join(","))
        },
    );
    // Rules over binary predicates; head variables always occur in the body.
    let rule = (0usize..3, 0usize..3, vars.clone(), vars)
        .prop_filter("distinct vars", |(_, _, x, y)| x != y)
        .prop_map(|(h, b, x, y)| {
            format!("r{h}({x},{y}) :- e{b}({x},{y}).")
        });
    let edge_fact = (0usize..3, prop::collection::vec(consts, 2..3))
        .prop_map(|(b, args)| format!("e{}({},{}).", b, args[0], args[1]));
    prop::collection::vec(prop_oneof![fact, rule, edge_fact.clone()], 1..12).prop_flat_map(
        move |lines| {
            // Ensure every eN used in a rule is defined by at least one fact.
            edge_fact.clone().prop_map(move |extra| {
                let mut all = vec![
                    "e0(a,b).".to_string(),
                    "e1(b,c).".to_string(),
                    "e2(c,a).".to_string(),
                    extra,
                ];
                all.extend(lines.iter().cloned());
                all.join("\n")
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Pretty-printing a parsed program and re-parsing yields a structurally
    /// equal program (same normal form, same predicate sets, same fact counts).
    #[test]
    fn pretty_print_round_trip(text in arb_program_text()) {
        let p1 = match Program::parse(&text) {
            Ok(p) => p,
            // Generator may collide predicate names at different arities; those
            // rejections are the validator working as intended.
            Err(LangError::Validation(_)) => return Ok(()),
            Err(e) => panic!("unexpected parse failure: {e}\n{text}"),
        };
        let printed = p1.to_text();
        let p2 = Program::parse(&printed).expect("printed program must re-parse");
        prop_assert_eq!(&printed, &p2.to_text());
        let labels = |p: &Program| {
            let mut v: Vec<String> = p.preds().map(|id| p.pred_label(id)).collect();
            v.sort();
            v
        };
        prop_assert_eq!(labels(&p1), labels(&p2));
        for pred in p1.preds() {
            let other = p2.pred(p1.pred_name(pred)).unwrap();
            prop_assert_eq!(
                p1.facts_for(pred).map(|f| f.len()).unwrap_or(0),
                p2.facts_for(other).map(|f| f.len()).unwrap_or(0)
            );
        }
    }

    /// id(c1) == id(c2) iff text(c1) == text(c2).
    #[test]
    fn interning_bijection(names in prop::collection::vec("[a-d][a-d0-9]{0,2}", 1..20)) {
        let mut interner = Interner::default();
        let ids: Vec<ConstId> = names.iter().map(|n| interner.intern(n)).collect();
        for (i, a) in ids.iter().enumerate() {
            for (j, b) in ids.iter().enumerate() {
                prop_assert_eq!(a == b, names[i] == names[j]);
            }
        }
    }

    /// Index lookup equals brute-force filter on the first argument.
    #[test]
    fn index_soundness_completeness(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 1..40)
    ) {
        let mut b = ProgramBuilder::new();
        for (x, y) in &pairs {
            b.fact("edge", &[&format!("n{x}"), &format!("n{y}")]).unwrap();
        }
        b.fact("seed", &["n0"]).unwrap();
        let p = b.build().unwrap();
        let edge = p.pred("edge").unwrap();
        let facts = p.facts_for(edge).unwrap();
        for key in 0u8..6 {
            if let Some(k) = p.lookup_const(&format!("n{key}")) {
                let via_index: Vec<Vec<ConstId>> =
                    facts.rows_with_first(k).map(|r| r.to_vec()).collect();
                let via_scan: Vec<Vec<ConstId>> = facts
                    .iter()
                    .filter(|r| r[0] == k)
                    .map(|r| r.to_vec())
                    .collect();
                prop_assert_eq!(via_index, via_scan);
            }
        }
    }
}
