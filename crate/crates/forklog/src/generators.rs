//! Deterministic benchmark input generators.
//!
//! Graphs are emitted over nodes `n1..nN`; points-to inputs over variables
//! `v1..vN` and heap objects `h1..hM`. For a given kind, parameters, and
//! seed the generated fact text is byte-identical across runs.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::PointstoFacts;
use crate::lang::{LangError, Program, ProgramBuilder, Query};

/// Which transitive-closure formulation a generated graph is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TcFlavor {
    /// `reachr(X,Y) :- edge(X,Z), reachr(Z,Y).`
    Right,
    /// `reachl(X,Y) :- reachl(X,Z), edge(Z,Y).`
    Left,
}

impl TcFlavor {
    pub fn pred_name(&self) -> &'static str {
        match self {
            TcFlavor::Right => "reachr",
            TcFlavor::Left => "reachl",
        }
    }
}

/// An edge relation over nodes `0..n`, named `n1..nN` in fact output.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub nodes: u32,
    pub edges: Vec<(u32, u32)>,
}

pub fn node_name(index: u32) -> String {
    format!("n{}", index + 1)
}

impl EdgeList {
    /// All ordered pairs of distinct nodes: n(n-1) edges.
    pub fn complete(n: u32) -> EdgeList {
        let mut edges = Vec::with_capacity((n as usize) * (n as usize - 1).max(0));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        EdgeList { nodes: n, edges }
    }

    /// A path n1 -> n2 -> ... -> nN: n-1 edges.
    pub fn chain(n: u32) -> EdgeList {
        EdgeList {
            nodes: n,
            edges: (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
        }
    }

    /// Bernoulli(p) over each ordered pair of distinct nodes.
    pub fn random(n: u32, p: f64, seed: u64) -> EdgeList {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        EdgeList { nodes: n, edges }
    }

    /// Writes `edge(ni,nj).` facts.
    pub fn write_facts(&self, out: &mut impl Write) -> io::Result<()> {
        for &(i, j) in &self.edges {
            writeln!(out, "edge({},{}).", node_name(i), node_name(j))?;
        }
        Ok(())
    }

    /// Builds the transitive-closure program of the given flavor over this
    /// edge relation.
    pub fn to_program(&self, flavor: TcFlavor) -> Result<Program, LangError> {
        let mut b = ProgramBuilder::new();
        let reach = flavor.pred_name();
        b.table(reach, 2)?;
        b.edb("edge", 2)?;
        b.rule((reach, &["X", "Y"]), &[("edge", &["X", "Y"])])?;
        match flavor {
            TcFlavor::Right => b.rule(
                (reach, &["X", "Y"]),
                &[("edge", &["X", "Z"]), (reach, &["Z", "Y"])],
            )?,
            TcFlavor::Left => b.rule(
                (reach, &["X", "Y"]),
                &[(reach, &["X", "Z"]), ("edge", &["Z", "Y"])],
            )?,
        }
        let ids: Vec<_> = (0..self.nodes).map(|i| b.intern_const(&node_name(i))).collect();
        let edge = b.pred("edge", 2)?;
        for &(i, j) in &self.edges {
            b.fact_ids(edge, &[ids[i as usize], ids[j as usize]])?;
        }
        b.build()
    }

    /// The query `reach(nFrom, Y)` against a program built by `to_program`.
    pub fn reach_query(
        program: &mut Program,
        flavor: TcFlavor,
        from: u32,
    ) -> Result<Query, LangError> {
        program.parse_query(&format!("{}({},Y)", flavor.pred_name(), node_name(from)))
    }
}

/// Synthetic points-to input: a connected assignment graph (a random tree
/// rooted at `v1` plus a few cross edges) with heap allocations sprinkled
/// over the variables.
#[derive(Debug, Clone)]
pub struct PointstoGen {
    pub vars: u32,
    pub heaps: u32,
    /// `(var, heap)` pairs.
    pub alloc: Vec<(u32, u32)>,
    /// `(to, from)` pairs; `to` reaches `from` in step traversal.
    pub assign: Vec<(u32, u32)>,
}

pub fn var_name(index: u32) -> String {
    format!("v{}", index + 1)
}

pub fn heap_name(index: u32) -> String {
    format!("h{}", index + 1)
}

impl PointstoGen {
    pub fn generate(n: u32, seed: u64) -> PointstoGen {
        assert!(n >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heaps = n;
        let mut assign = Vec::new();
        for child in 1..n {
            // The first two children attach to the root so the planner always
            // finds a fan-out there; the rest attach uniformly at random.
            let parent = if child <= 2 { 0 } else { rng.gen_range(0..child) };
            assign.push((parent, child));
        }
        let extra = (n / 20).max(1);
        for _ in 0..extra {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                assign.push((a, b));
            }
        }
        let mut alloc = Vec::new();
        for v in 0..n {
            if rng.gen::<f64>() < 0.9 {
                alloc.push((v, rng.gen_range(0..heaps)));
            }
            if rng.gen::<f64>() < 0.35 {
                alloc.push((v, rng.gen_range(0..heaps)));
            }
        }
        PointstoGen {
            vars: n,
            heaps,
            alloc,
            assign,
        }
    }

    /// Writes `alloc(vi,hj).` and `assign(vi,vj).` facts.
    pub fn write_facts(&self, out: &mut impl Write) -> io::Result<()> {
        for &(v, h) in &self.alloc {
            writeln!(out, "alloc({},{}).", var_name(v), heap_name(h))?;
        }
        for &(to, from) in &self.assign {
            writeln!(out, "assign({},{}).", var_name(to), var_name(from))?;
        }
        Ok(())
    }

    pub fn to_facts(&self) -> PointstoFacts {
        PointstoFacts {
            alloc: self
                .alloc
                .iter()
                .map(|&(v, h)| (var_name(v), heap_name(h)))
                .collect(),
            assign: self
                .assign
                .iter()
                .map(|&(to, from)| (var_name(to), var_name(from)))
                .collect(),
        }
    }

    /// The variable the benchmark queries: the tree root, which reaches the
    /// whole assignment graph.
    pub fn root_var(&self) -> String {
        var_name(0)
    }
}
