//! Answer storage and claim tracking.
//!
//! An [`AnswerTable`] holds ground answer tuples as a chain of trie segments.
//! Each worker builds its own segment privately; at join time a child table is
//! merged into the parent either by linking its segment chain onto the
//! parent's ([`AnswerTable::merge_link`], constant-time in the tuple count) or
//! by re-inserting every tuple ([`AnswerTable::merge_copy`], the baseline that
//! pays per tuple). The [`ClaimSet`] is the shared first-claim set that keeps
//! worker answer sets disjoint.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use crate::lang::{ConstId, PredId};

/// Lifecycle of an answer table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableState {
    /// Accepting inserts into the first segment.
    Open,
    /// Frozen; readable and mergeable into a parent.
    Sealed,
    /// Merged away; no further operations permitted.
    Consumed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimOutcome {
    Claimed,
    AlreadyClaimed,
}

/// How child answer tables are combined into the parent at join time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeStrategy {
    Link,
    Copy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableError {
    State {
        op: &'static str,
        state: TableState,
    },
    Arity {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::State { op, state } => {
                write!(f, "table operation `{op}` not permitted in state {state:?}")
            }
            TableError::Arity { expected, got } => {
                write!(f, "tuple arity {got} does not match table arity {expected}")
            }
        }
    }
}

impl std::error::Error for TableError {}

/// One trie segment: a prefix tree over interned constant ids with depth equal
/// to the tuple arity, plus a flat insertion log for ordered iteration.
#[derive(Debug, Clone)]
pub struct AnswerTrie {
    arity: usize,
    /// Interior nodes; index 0 is the root. The final trie level lives in the
    /// parent node's child map, so an arity-1 trie has only the root.
    nodes: Vec<TrieNode>,
    /// Tuples in first-insertion order, flat and strided by arity.
    log: Vec<ConstId>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<ConstId, u32>,
}

const LEAF: u32 = u32::MAX;

impl AnswerTrie {
    pub fn new(arity: usize) -> Self {
        assert!(arity >= 1, "answer arity must be at least 1");
        AnswerTrie {
            arity,
            nodes: vec![TrieNode::default()],
            log: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of distinct tuples stored.
    pub fn count(&self) -> usize {
        self.log.len() / self.arity
    }

    pub fn insert(&mut self, tuple: &[ConstId]) -> InsertOutcome {
        debug_assert_eq!(tuple.len(), self.arity);
        let mut node = 0usize;
        for &c in &tuple[..self.arity - 1] {
            let next = self.nodes.len() as u32;
            let slot = self.nodes[node].children.entry(c).or_insert(next);
            if *slot == next {
                node = next as usize;
                self.nodes.push(TrieNode::default());
            } else {
                node = *slot as usize;
            }
        }
        let last = tuple[self.arity - 1];
        match self.nodes[node].children.entry(last) {
            std::collections::hash_map::Entry::Occupied(_) => InsertOutcome::Duplicate,
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(LEAF);
                self.log.extend_from_slice(tuple);
                InsertOutcome::Inserted
            }
        }
    }

    pub fn contains(&self, tuple: &[ConstId]) -> bool {
        debug_assert_eq!(tuple.len(), self.arity);
        let mut node = 0usize;
        for &c in &tuple[..self.arity - 1] {
            match self.nodes[node].children.get(&c) {
                Some(&n) => node = n as usize,
                None => return false,
            }
        }
        self.nodes[node].children.contains_key(&tuple[self.arity - 1])
    }

    /// Tuples in first-insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &[ConstId]> {
        self.log.chunks_exact(self.arity)
    }

    /// Tuples from insertion position `from` onward; the cursor for
    /// incremental consumers.
    pub fn iter_from(&self, from: usize) -> impl Iterator<Item = &[ConstId]> {
        self.log[from * self.arity..].chunks_exact(self.arity)
    }
}

/// A chain of trie segments with single-writer discipline.
///
/// While `Open`, only the first segment accepts inserts. Merged children are
/// chained after the parent's own segment, so iteration yields the parent's
/// tuples first, then each child's in merge order.
#[derive(Debug, Clone)]
pub struct AnswerTable {
    arity: usize,
    state: TableState,
    segments: Vec<AnswerTrie>,
    total: usize,
}

impl AnswerTable {
    pub fn new(arity: usize) -> Self {
        AnswerTable {
            arity,
            state: TableState::Open,
            segments: vec![AnswerTrie::new(arity)],
            total: 0,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn state(&self) -> TableState {
        self.state
    }

    /// Total tuples across all segments (counting duplicates across segments).
    pub fn total_count(&self) -> usize {
        self.total
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Capacity hint for a parent expecting to link-merge `children` tables.
    pub fn reserve_segments(&mut self, children: usize) {
        self.segments.reserve(children);
    }

    pub fn insert(&mut self, tuple: &[ConstId]) -> Result<InsertOutcome, TableError> {
        if self.state != TableState::Open {
            return Err(TableError::State {
                op: "insert",
                state: self.state,
            });
        }
        if tuple.len() != self.arity {
            return Err(TableError::Arity {
                expected: self.arity,
                got: tuple.len(),
            });
        }
        let outcome = self.segments[0].insert(tuple);
        if outcome == InsertOutcome::Inserted {
            self.total += 1;
        }
        Ok(outcome)
    }

    pub fn contains(&self, tuple: &[ConstId]) -> bool {
        self.segments.iter().any(|s| s.contains(tuple))
    }

    /// Freezes the table. Sealing an already-sealed table is a no-op.
    pub fn seal(&mut self) -> Result<(), TableError> {
        match self.state {
            TableState::Open | TableState::Sealed => {
                self.state = TableState::Sealed;
                Ok(())
            }
            TableState::Consumed => Err(TableError::State {
                op: "seal",
                state: self.state,
            }),
        }
    }

    fn check_merge(&self, child: &AnswerTable, op: &'static str) -> Result<(), TableError> {
        if self.state == TableState::Consumed {
            return Err(TableError::State {
                op,
                state: self.state,
            });
        }
        if child.state != TableState::Sealed {
            return Err(TableError::State {
                op,
                state: child.state,
            });
        }
        if child.arity != self.arity {
            return Err(TableError::Arity {
                expected: self.arity,
                got: child.arity,
            });
        }
        Ok(())
    }

    /// Appends the child's segment chain onto this table's chain. The work is
    /// a fixed number of link updates regardless of how many tuples either
    /// table holds. The caller asserts the child's tuples are disjoint from
    /// this table's (the claim discipline guarantees it in reachability runs).
    pub fn merge_link(&mut self, child: &mut AnswerTable) -> Result<(), TableError> {
        self.check_merge(child, "merge_link")?;
        self.segments.append(&mut child.segments);
        self.total += child.total;
        child.total = 0;
        child.state = TableState::Consumed;
        Ok(())
    }

    /// Re-inserts every child tuple into this table's writable segment; the
    /// per-tuple baseline that `merge_link` replaces.
    pub fn merge_copy(&mut self, child: &mut AnswerTable) -> Result<(), TableError> {
        self.check_merge(child, "merge_copy")?;
        let mut inserted = 0usize;
        {
            let (own, _) = self.segments.split_at_mut(1);
            let own = &mut own[0];
            for seg in &child.segments {
                for tuple in seg.iter() {
                    if own.insert(tuple) == InsertOutcome::Inserted {
                        inserted += 1;
                    }
                }
            }
        }
        self.total += inserted;
        child.segments.clear();
        child.total = 0;
        child.state = TableState::Consumed;
        Ok(())
    }

    pub fn merge(
        &mut self,
        child: &mut AnswerTable,
        strategy: MergeStrategy,
    ) -> Result<(), TableError> {
        match strategy {
            MergeStrategy::Link => self.merge_link(child),
            MergeStrategy::Copy => self.merge_copy(child),
        }
    }

    /// Streams tuples segment by segment in chain order, each segment in its
    /// insertion order. With `dedup` on, a tuple already seen in an earlier
    /// segment is suppressed.
    pub fn iterate(&self, dedup: bool) -> Result<AnswerIter<'_>, TableError> {
        if self.state == TableState::Consumed {
            return Err(TableError::State {
                op: "iterate",
                state: self.state,
            });
        }
        Ok(AnswerIter {
            table: self,
            seg: 0,
            row: 0,
            seen: if dedup { Some(HashSet::new()) } else { None },
        })
    }

    /// Number of distinct tuples under the given dedup mode.
    pub fn answer_count(&self, dedup: bool) -> Result<usize, TableError> {
        if dedup {
            Ok(self.iterate(true)?.count())
        } else {
            if self.state == TableState::Consumed {
                return Err(TableError::State {
                    op: "answer_count",
                    state: self.state,
                });
            }
            Ok(self.total)
        }
    }

    /// True when no tuple appears in more than one segment.
    pub fn segments_disjoint(&self) -> bool {
        let mut seen: HashSet<&[ConstId]> = HashSet::with_capacity(self.total);
        for seg in &self.segments {
            for tuple in seg.iter() {
                if !seen.insert(tuple) {
                    return false;
                }
            }
        }
        true
    }

    pub fn segments(&self) -> impl Iterator<Item = &AnswerTrie> {
        self.segments.iter()
    }
}

/// Iterator over an answer table's segment chain.
pub struct AnswerIter<'a> {
    table: &'a AnswerTable,
    seg: usize,
    row: usize,
    seen: Option<HashSet<&'a [ConstId]>>,
}

impl<'a> Iterator for AnswerIter<'a> {
    type Item = &'a [ConstId];

    fn next(&mut self) -> Option<&'a [ConstId]> {
        loop {
            let seg = self.table.segments.get(self.seg)?;
            if self.row >= seg.count() {
                self.seg += 1;
                self.row = 0;
                continue;
            }
            let tuple = &seg.log[self.row * seg.arity..(self.row + 1) * seg.arity];
            self.row += 1;
            match &mut self.seen {
                Some(seen) => {
                    if seen.insert(tuple) {
                        return Some(tuple);
                    }
                }
                None => return Some(tuple),
            }
        }
    }
}

/// Key claimed in the [`ClaimSet`]: a single node constant for reachability
/// runs, or a full ground subgoal for anything finer-grained.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClaimKey {
    Node(ConstId),
    Subgoal(PredId, Box<[ConstId]>),
}

/// Concurrent first-claim set: `try_claim` returns `Claimed` exactly once per
/// key across all callers. Sharded by key hash to bound lock contention.
#[derive(Debug)]
pub struct ClaimSet {
    shards: Vec<Mutex<HashSet<ClaimKey>>>,
}

pub const DEFAULT_CLAIM_SHARDS: usize = 64;

impl Default for ClaimSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ClaimSet {
    pub fn new() -> Self {
        Self::with_shards(DEFAULT_CLAIM_SHARDS)
    }

    pub fn with_shards(shards: usize) -> Self {
        assert!(shards >= 1);
        ClaimSet {
            shards: (0..shards).map(|_| Mutex::new(HashSet::new())).collect(),
        }
    }

    fn shard(&self, key: &ClaimKey) -> &Mutex<HashSet<ClaimKey>> {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        key.hash(&mut hasher);
        let idx = (hasher.finish() as usize) % self.shards.len();
        &self.shards[idx]
    }

    pub fn try_claim(&self, key: ClaimKey) -> ClaimOutcome {
        let mut shard = self.shard(&key).lock().unwrap();
        if shard.insert(key) {
            ClaimOutcome::Claimed
        } else {
            ClaimOutcome::AlreadyClaimed
        }
    }

    pub fn is_claimed(&self, key: &ClaimKey) -> bool {
        self.shard(key).lock().unwrap().contains(key)
    }

    /// Total keys claimed so far.
    pub fn len(&self) -> usize {
        self.shards.iter().map(|s| s.lock().unwrap().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests;
