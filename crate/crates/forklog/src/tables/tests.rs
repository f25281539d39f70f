use super::*;
use proptest::prelude::*;
use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

fn c(n: u32) -> ConstId {
    ConstId(n)
}

fn table_from(tuples: &[(u32, u32)]) -> AnswerTable {
    let mut t = AnswerTable::new(2);
    for &(a, b) in tuples {
        t.insert(&[c(a), c(b)]).unwrap();
    }
    t
}

fn set_of(table: &AnswerTable, dedup: bool) -> HashSet<Vec<ConstId>> {
    table
        .iterate(dedup)
        .unwrap()
        .map(|t| t.to_vec())
        .collect()
}

#[test]
fn insert_then_duplicate() {
    let mut t = AnswerTable::new(2);
    assert_eq!(t.insert(&[c(0), c(1)]).unwrap(), InsertOutcome::Inserted);
    assert_eq!(t.total_count(), 1);
    assert_eq!(t.insert(&[c(0), c(1)]).unwrap(), InsertOutcome::Duplicate);
    assert_eq!(t.total_count(), 1);
    assert!(t.contains(&[c(0), c(1)]));
    assert!(!t.contains(&[c(1), c(0)]));
}

#[test]
fn thousand_distinct_tuples_match_reference_set() {
    let mut t = AnswerTable::new(2);
    let mut reference = HashSet::new();
    for i in 0u32..1000 {
        let tuple = [c(i / 40), c(i % 40)];
        t.insert(&tuple).unwrap();
        reference.insert(tuple.to_vec());
    }
    assert_eq!(t.total_count(), 1000);
    let iterated: HashSet<Vec<ConstId>> = set_of(&t, false);
    assert_eq!(iterated, reference);
    assert_eq!(t.iterate(false).unwrap().count(), 1000);
}

#[test]
fn insert_respects_state_and_arity() {
    let mut t = AnswerTable::new(2);
    assert!(matches!(
        t.insert(&[c(0)]),
        Err(TableError::Arity { expected: 2, got: 1 })
    ));
    t.seal().unwrap();
    assert!(matches!(
        t.insert(&[c(0), c(1)]),
        Err(TableError::State { op: "insert", .. })
    ));
}

#[test]
fn iteration_preserves_first_insertion_order() {
    let mut t = AnswerTable::new(1);
    for n in [5u32, 3, 9, 3, 5, 1] {
        t.insert(&[c(n)]).unwrap();
    }
    let order: Vec<u32> = t.iterate(false).unwrap().map(|t| t[0].0).collect();
    assert_eq!(order, vec![5, 3, 9, 1]);
}

#[test]
fn merge_link_appends_segments() {
    let mut parent = table_from(&[(0, 1)]);
    let mut child = table_from(&[(0, 2)]);
    child.seal().unwrap();
    parent.merge_link(&mut child).unwrap();
    assert_eq!(parent.total_count(), 2);
    assert_eq!(parent.segment_count(), 2);
    assert_eq!(child.state(), TableState::Consumed);
    let tuples: Vec<Vec<ConstId>> = parent
        .iterate(false)
        .unwrap()
        .map(|t| t.to_vec())
        .collect();
    assert_eq!(tuples, vec![vec![c(0), c(1)], vec![c(0), c(2)]]);
}

#[test]
fn merge_link_empty_tables() {
    let mut parent = AnswerTable::new(2);
    let mut child = AnswerTable::new(2);
    child.seal().unwrap();
    parent.merge_link(&mut child).unwrap();
    assert_eq!(parent.total_count(), 0);
    assert_eq!(parent.iterate(false).unwrap().count(), 0);
}

#[test]
fn merge_link_four_children_equals_set_union() {
    // Union oracle built alongside from the same tuples.
    let mut parent = table_from(&[(9, 0)]);
    let mut oracle: HashSet<Vec<ConstId>> = set_of(&parent, false);
    let sizes = [3u32, 17, 8, 29];
    let mut base = 100u32;
    for n in sizes {
        let tuples: Vec<(u32, u32)> = (0..n).map(|i| (base + i, base + i + 1)).collect();
        let mut child = table_from(&tuples);
        oracle.extend(child.iterate(false).unwrap().map(|t| t.to_vec()));
        child.seal().unwrap();
        parent.merge_link(&mut child).unwrap();
        base += 1000;
    }
    assert_eq!(parent.total_count(), 1 + 3 + 17 + 8 + 29);
    assert_eq!(set_of(&parent, false), oracle);
}

#[test]
fn merge_copy_equals_merge_link_answer_set() {
    let cases: Vec<(Vec<(u32, u32)>, Vec<(u32, u32)>)> = vec![
        (vec![(0, 1)], vec![(0, 2)]),
        (vec![], vec![]),
        (vec![(1, 1), (2, 2)], vec![(3, 3), (4, 4), (5, 5)]),
    ];
    for (parent_tuples, child_tuples) in cases {
        let mut linked = table_from(&parent_tuples);
        let mut copied = table_from(&parent_tuples);
        let mut child_a = table_from(&child_tuples);
        let mut child_b = table_from(&child_tuples);
        child_a.seal().unwrap();
        child_b.seal().unwrap();
        linked.merge_link(&mut child_a).unwrap();
        copied.merge_copy(&mut child_b).unwrap();
        assert_eq!(set_of(&linked, false), set_of(&copied, false));
        // Copy keeps a single segment; link grows the chain.
        assert_eq!(copied.segment_count(), 1);
    }
}

#[test]
fn merging_consumed_child_is_an_error() {
    let mut parent = table_from(&[(0, 1)]);
    let mut child = table_from(&[(0, 2)]);
    child.seal().unwrap();
    parent.merge_copy(&mut child).unwrap();
    assert!(matches!(
        parent.merge_copy(&mut child),
        Err(TableError::State { .. })
    ));
    assert!(matches!(
        parent.merge_link(&mut child),
        Err(TableError::State { .. })
    ));
}

#[test]
fn merging_unsealed_child_is_an_error() {
    let mut parent = table_from(&[(0, 1)]);
    let mut child = table_from(&[(0, 2)]);
    assert!(matches!(
        parent.merge_link(&mut child),
        Err(TableError::State { .. })
    ));
}

#[test]
fn iterate_two_segments_in_chain_order() {
    let mut parent = table_from(&[(0, 1), (0, 2)]);
    let mut child = table_from(&[(1, 0), (1, 2), (1, 3)]);
    child.seal().unwrap();
    parent.merge_link(&mut child).unwrap();
    let tuples: Vec<(u32, u32)> = parent
        .iterate(false)
        .unwrap()
        .map(|t| (t[0].0, t[1].0))
        .collect();
    assert_eq!(tuples, vec![(0, 1), (0, 2), (1, 0), (1, 2), (1, 3)]);
}

#[test]
fn iterate_dedup_suppresses_cross_segment_repeats() {
    let mut parent = table_from(&[(0, 1)]);
    let mut child = table_from(&[(0, 1), (0, 2)]);
    child.seal().unwrap();
    parent.merge_link(&mut child).unwrap();
    let tuples: Vec<(u32, u32)> = parent
        .iterate(true)
        .unwrap()
        .map(|t| (t[0].0, t[1].0))
        .collect();
    assert_eq!(tuples, vec![(0, 1), (0, 2)]);
    assert_eq!(parent.answer_count(true).unwrap(), 2);
    assert_eq!(parent.answer_count(false).unwrap(), 3);
    assert!(!parent.segments_disjoint());
}

#[test]
fn iterate_consumed_is_an_error() {
    let mut parent = table_from(&[(0, 1)]);
    let mut child = table_from(&[(0, 2)]);
    child.seal().unwrap();
    parent.merge_link(&mut child).unwrap();
    assert!(matches!(
        child.iterate(false),
        Err(TableError::State { op: "iterate", .. })
    ));
}

#[test]
fn first_claim_wins_single_threaded() {
    let cs = ClaimSet::new();
    assert_eq!(cs.try_claim(ClaimKey::Node(c(7))), ClaimOutcome::Claimed);
    assert_eq!(
        cs.try_claim(ClaimKey::Node(c(7))),
        ClaimOutcome::AlreadyClaimed
    );
    assert_eq!(cs.try_claim(ClaimKey::Node(c(8))), ClaimOutcome::Claimed);
    assert_eq!(cs.len(), 2);
    assert!(cs.is_claimed(&ClaimKey::Node(c(7))));
    assert!(!cs.is_claimed(&ClaimKey::Node(c(9))));
}

#[test]
fn subgoal_keys_are_distinct_from_node_keys() {
    let cs = ClaimSet::new();
    let node = ClaimKey::Node(c(1));
    let subgoal = ClaimKey::Subgoal(PredId(0), vec![c(1)].into_boxed_slice());
    assert_eq!(cs.try_claim(node), ClaimOutcome::Claimed);
    assert_eq!(cs.try_claim(subgoal), ClaimOutcome::Claimed);
}

#[test]
fn concurrent_claims_are_exactly_once() {
    // Scaled-down version of the acceptance stress: 4 workers x 40_000
    // attempts over 1_000 keys.
    let cs = ClaimSet::new();
    let wins = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for w in 0..4 {
            let cs = &cs;
            let wins = &wins;
            scope.spawn(move || {
                for i in 0..40_000u32 {
                    let key = ClaimKey::Node(c((i.wrapping_mul(31).wrapping_add(w)) % 1_000));
                    if cs.try_claim(key) == ClaimOutcome::Claimed {
                        wins.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
        }
    });
    assert_eq!(wins.load(Ordering::Relaxed), 1_000);
    assert_eq!(cs.len(), 1_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// merge_link and merge_copy always agree on the final answer set.
    #[test]
    fn strategy_equivalence(
        parent in prop::collection::vec((0u32..50, 0u32..50), 0..30),
        children in prop::collection::vec(
            prop::collection::vec((0u32..50, 0u32..50), 0..30), 0..4),
    ) {
        let mut linked = table_from(&parent);
        let mut copied = table_from(&parent);
        for tuples in &children {
            let mut a = table_from(tuples);
            let mut b = table_from(tuples);
            a.seal().unwrap();
            b.seal().unwrap();
            linked.merge_link(&mut a).unwrap();
            copied.merge_copy(&mut b).unwrap();
        }
        prop_assert_eq!(set_of(&linked, true), set_of(&copied, true));
    }

    /// Without dedup, iteration yields exactly the concatenation of the
    /// per-segment insertion logs.
    #[test]
    fn iteration_exactness(
        parent in prop::collection::vec((0u32..20, 0u32..20), 0..20),
        children in prop::collection::vec(
            prop::collection::vec((0u32..20, 0u32..20), 0..20), 0..4),
    ) {
        let mut table = table_from(&parent);
        let mut expected: Vec<Vec<ConstId>> =
            table.iterate(false).unwrap().map(|t| t.to_vec()).collect();
        for tuples in &children {
            let mut child = table_from(tuples);
            expected.extend(child.iterate(false).unwrap().map(|t| t.to_vec()));
            child.seal().unwrap();
            table.merge_link(&mut child).unwrap();
        }
        let got: Vec<Vec<ConstId>> =
            table.iterate(false).unwrap().map(|t| t.to_vec()).collect();
        prop_assert_eq!(got, expected);
    }

    /// A single-threaded claim sequence behaves as a plain set.
    #[test]
    fn claims_behave_as_plain_set(keys in prop::collection::vec(0u32..40, 0..120)) {
        let cs = ClaimSet::with_shards(8);
        let mut reference = HashSet::new();
        for k in keys {
            let expected = if reference.insert(k) {
                ClaimOutcome::Claimed
            } else {
                ClaimOutcome::AlreadyClaimed
            };
            prop_assert_eq!(cs.try_claim(ClaimKey::Node(c(k))), expected);
        }
        prop_assert_eq!(cs.len(), reference.len());
    }
}
