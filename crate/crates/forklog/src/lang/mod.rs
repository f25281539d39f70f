//! The Datalog language: terms, atoms, clauses, and validated programs.
//!
//! A [`Program`] is an immutable in-memory model built either from source
//! text via [`Program::parse`] or programmatically via [`ProgramBuilder`].
//! Constants are interned into a single id space shared by symbolic and
//! integer literals; extensional (fact-only) predicates carry a first-argument
//! index used by the evaluators.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

mod parser;

pub use parser::ParseError;

/// Interned constant identifier. Ids are assigned in first-occurrence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ConstId(pub u32);

/// Interned predicate identifier (name plus arity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct PredId(pub u32);

/// A ground tuple of interned constants.
pub type Tuple = Vec<ConstId>;

/// Term of the language: a variable or an interned constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// Uppercase or underscore-initial identifier.
    Var(String),
    /// Lowercase identifier or integer literal, interned.
    Const(ConstId),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

/// A predicate applied to terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub pred: PredId,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }
}

/// A fact (empty body) or rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Source line of the clause head, when parsed from text; 0 for built programs.
    pub line: u32,
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

/// Validation failure, naming the offending clause where one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation error: {}", self.message)
    }
}

impl std::error::Error for ValidationError {}

/// Either kind of failure while loading a program or query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LangError {
    Parse(ParseError),
    Validation(ValidationError),
}

impl fmt::Display for LangError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangError::Parse(e) => e.fmt(f),
            LangError::Validation(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for LangError {}

impl From<ParseError> for LangError {
    fn from(e: ParseError) -> Self {
        LangError::Parse(e)
    }
}

impl From<ValidationError> for LangError {
    fn from(e: ValidationError) -> Self {
        LangError::Validation(e)
    }
}

fn validation(msg: impl Into<String>) -> LangError {
    LangError::Validation(ValidationError {
        message: msg.into(),
    })
}

/// String interner; injective and total over one program's constants.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, text: &str) -> ConstId {
        if let Some(&id) = self.ids.get(text) {
            return ConstId(id);
        }
        let id = self.names.len() as u32;
        self.names.push(text.to_string());
        self.ids.insert(text.to_string(), id);
        ConstId(id)
    }

    pub fn lookup(&self, text: &str) -> Option<ConstId> {
        self.ids.get(text).map(|&id| ConstId(id))
    }

    pub fn text(&self, id: ConstId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Fact storage for one predicate: flat tuples plus a first-argument index
/// for extensional predicates.
#[derive(Debug, Default, Clone)]
pub struct FactSet {
    arity: usize,
    /// Tuples laid out flat, strided by arity, in insertion order.
    flat: Vec<ConstId>,
    /// First argument -> row indices. Built only for EDB predicates.
    index: HashMap<ConstId, Vec<u32>>,
}

impl FactSet {
    fn from_flat(arity: usize, flat: Vec<ConstId>) -> Self {
        debug_assert_eq!(flat.len() % arity.max(1), 0);
        FactSet {
            arity,
            flat,
            index: HashMap::new(),
        }
    }

    fn build_index(&mut self) {
        self.index.clear();
        if self.arity == 0 {
            return;
        }
        for row in 0..self.len() {
            let key = self.flat[row * self.arity];
            self.index.entry(key).or_default().push(row as u32);
        }
    }

    pub fn len(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.flat.len() / self.arity
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn row(&self, i: usize) -> &[ConstId] {
        &self.flat[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[ConstId]> {
        self.flat.chunks_exact(self.arity.max(1))
    }

    /// Rows whose first argument equals `key`, via the index.
    pub fn rows_with_first(&self, key: ConstId) -> impl Iterator<Item = &[ConstId]> + '_ {
        self.index
            .get(&key)
            .into_iter()
            .flatten()
            .map(move |&r| self.row(r as usize))
    }

    pub fn has_index(&self) -> bool {
        !self.index.is_empty() || self.flat.is_empty()
    }
}

/// A validated Datalog program. Immutable after construction and safe to
/// share read-only across worker threads.
#[derive(Debug, Default, Clone)]
pub struct Program {
    consts: Interner,
    pred_names: Vec<(String, usize)>,
    pred_ids: HashMap<String, u32>,
    /// Rule clauses in source order. Facts live in the per-predicate fact
    /// stores rather than as bodyless clauses.
    clauses: Vec<Clause>,
    /// Rule clause indices grouped by head predicate.
    rules_by_pred: HashMap<PredId, Vec<u32>>,
    tabled: BTreeSet<PredId>,
    edb: BTreeSet<PredId>,
    facts: HashMap<PredId, FactSet>,
}

impl Program {
    /// Parses and validates program text. See the crate README for the grammar.
    pub fn parse(text: &str) -> Result<Program, LangError> {
        let parsed = parser::parse_program(text)?;
        let mut builder = ProgramBuilder::new();
        for directive in parsed.directives {
            builder.table_checked(&directive.name, directive.arity, directive.line)?;
        }
        for clause in parsed.clauses {
            builder.clause_checked(clause)?;
        }
        builder.build()
    }

    /// Parses a query atom against this program. Bound arguments are constants,
    /// free arguments are distinct variables. Unknown constants are interned.
    pub fn parse_query(&mut self, text: &str) -> Result<Query, LangError> {
        let atom = parser::parse_query_atom(text)?;
        let pred = match self.pred_ids.get(&atom.name) {
            Some(&id) => PredId(id),
            None => {
                return Err(validation(format!(
                    "unknown predicate `{}/{}` in query",
                    atom.name,
                    atom.args.len()
                )))
            }
        };
        let arity = self.pred_names[pred.0 as usize].1;
        if atom.args.len() != arity {
            return Err(validation(format!(
                "query `{}` has arity {}, but `{}` is declared with arity {}",
                text.trim(),
                atom.args.len(),
                atom.name,
                arity
            )));
        }
        let mut args = Vec::with_capacity(atom.args.len());
        let mut seen_vars: Vec<&str> = Vec::new();
        for t in &atom.args {
            match t {
                parser::RawTerm::Var(v) => {
                    if seen_vars.contains(&v.as_str()) {
                        return Err(validation(format!(
                            "query variable `{v}` repeats; query variables must be distinct"
                        )));
                    }
                    seen_vars.push(v);
                    args.push(QueryArg::Free(v.clone()));
                }
                parser::RawTerm::Const(c) => args.push(QueryArg::Bound(self.consts.intern(c))),
            }
        }
        Ok(Query { pred, args })
    }

    pub fn const_text(&self, id: ConstId) -> &str {
        self.consts.text(id)
    }

    pub fn lookup_const(&self, text: &str) -> Option<ConstId> {
        self.consts.lookup(text)
    }

    pub fn intern_const(&mut self, text: &str) -> ConstId {
        self.consts.intern(text)
    }

    pub fn const_count(&self) -> usize {
        self.consts.len()
    }

    pub fn pred(&self, name: &str) -> Option<PredId> {
        self.pred_ids.get(name).map(|&id| PredId(id))
    }

    pub fn pred_name(&self, id: PredId) -> &str {
        &self.pred_names[id.0 as usize].0
    }

    pub fn pred_arity(&self, id: PredId) -> usize {
        self.pred_names[id.0 as usize].1
    }

    /// `name/arity` display form.
    pub fn pred_label(&self, id: PredId) -> String {
        format!("{}/{}", self.pred_name(id), self.pred_arity(id))
    }

    /// All predicates in interning order.
    pub fn preds(&self) -> impl Iterator<Item = PredId> {
        (0..self.pred_names.len() as u32).map(PredId)
    }

    /// Rule clauses in source order.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Rule clauses (non-fact) whose head predicate is `pred`.
    pub fn rules_for(&self, pred: PredId) -> impl Iterator<Item = &Clause> {
        self.rules_by_pred
            .get(&pred)
            .into_iter()
            .flatten()
            .map(|&i| &self.clauses[i as usize])
    }

    pub fn facts_for(&self, pred: PredId) -> Option<&FactSet> {
        self.facts.get(&pred)
    }

    pub fn is_edb(&self, pred: PredId) -> bool {
        self.edb.contains(&pred)
    }

    pub fn is_tabled(&self, pred: PredId) -> bool {
        self.tabled.contains(&pred)
    }

    pub fn tabled_preds(&self) -> impl Iterator<Item = PredId> + '_ {
        self.tabled.iter().copied()
    }

    pub fn edb_preds(&self) -> impl Iterator<Item = PredId> + '_ {
        self.edb.iter().copied()
    }

    /// A predicate is defined if it has at least one clause or fact, a table
    /// declaration, or an extensional declaration.
    pub fn is_defined(&self, pred: PredId) -> bool {
        self.rules_by_pred.contains_key(&pred)
            || self.facts.contains_key(&pred)
            || self.tabled.contains(&pred)
            || self.edb.contains(&pred)
    }

    pub fn format_atom(&self, atom: &Atom) -> String {
        let args: Vec<String> = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => v.clone(),
                Term::Const(c) => self.const_text(*c).to_string(),
            })
            .collect();
        format!("{}({})", self.pred_name(atom.pred), args.join(","))
    }

    pub fn format_clause(&self, clause: &Clause) -> String {
        if clause.is_fact() {
            format!("{}.", self.format_atom(&clause.head))
        } else {
            let body: Vec<String> = clause.body.iter().map(|a| self.format_atom(a)).collect();
            format!("{} :- {}.", self.format_atom(&clause.head), body.join(", "))
        }
    }

    /// Formats a ground tuple as an atom of `pred`.
    pub fn format_tuple(&self, pred: PredId, tuple: &[ConstId]) -> String {
        let args: Vec<&str> = tuple.iter().map(|&c| self.const_text(c)).collect();
        format!("{}({})", self.pred_name(pred), args.join(","))
    }

    /// Pretty-prints the program: table directives, then rules in source
    /// order, then facts grouped by predicate in interning order. The output
    /// re-parses to a structurally equal program.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &p in &self.tabled {
            out.push_str(&format!(
                ":- table {}/{}.\n",
                self.pred_name(p),
                self.pred_arity(p)
            ));
        }
        for clause in &self.clauses {
            out.push_str(&self.format_clause(clause));
            out.push('\n');
        }
        let mut fact_preds: Vec<PredId> = self.facts.keys().copied().collect();
        fact_preds.sort_by(|a, b| self.pred_name(*a).cmp(self.pred_name(*b)));
        for pred in fact_preds {
            for tuple in self.facts[&pred].iter() {
                out.push_str(&self.format_tuple(pred, tuple));
                out.push_str(".\n");
            }
        }
        out
    }
}

/// One argument of a parsed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryArg {
    Bound(ConstId),
    Free(String),
}

/// A query atom with its binding pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub pred: PredId,
    pub args: Vec<QueryArg>,
}

impl Query {
    /// Bound/free mask, true where the argument is bound.
    pub fn mask(&self) -> Vec<bool> {
        self.args
            .iter()
            .map(|a| matches!(a, QueryArg::Bound(_)))
            .collect()
    }

    pub fn bound_args(&self) -> Vec<Option<ConstId>> {
        self.args
            .iter()
            .map(|a| match a {
                QueryArg::Bound(c) => Some(*c),
                QueryArg::Free(_) => None,
            })
            .collect()
    }

    /// True when the tuple agrees with the query's bound positions.
    pub fn matches(&self, tuple: &[ConstId]) -> bool {
        self.args.iter().zip(tuple).all(|(a, &c)| match a {
            QueryArg::Bound(b) => *b == c,
            QueryArg::Free(_) => true,
        })
    }
}

/// Incremental program construction with the same validation as [`Program::parse`].
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    program: Program,
    fact_rows: HashMap<PredId, Vec<ConstId>>,
    declared_edb: Vec<PredId>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_const(&mut self, text: &str) -> ConstId {
        self.program.consts.intern(text)
    }

    fn intern_pred(
        &mut self,
        name: &str,
        arity: usize,
        context: &str,
    ) -> Result<PredId, LangError> {
        if let Some(&id) = self.program.pred_ids.get(name) {
            let declared = self.program.pred_names[id as usize].1;
            if declared != arity {
                return Err(validation(format!(
                    "predicate `{name}` used with arity {arity} in {context}, \
                     but previously used with arity {declared}"
                )));
            }
            return Ok(PredId(id));
        }
        if arity == 0 {
            return Err(validation(format!(
                "predicate `{name}` has arity 0 in {context}; arity must be at least 1"
            )));
        }
        let id = self.program.pred_names.len() as u32;
        self.program.pred_names.push((name.to_string(), arity));
        self.program.pred_ids.insert(name.to_string(), id);
        Ok(PredId(id))
    }

    /// Declares `name/arity` as tabled.
    pub fn table(&mut self, name: &str, arity: usize) -> Result<PredId, LangError> {
        self.table_checked(name, arity, 0)
    }

    fn table_checked(&mut self, name: &str, arity: usize, line: u32) -> Result<PredId, LangError> {
        let context = if line > 0 {
            format!("table directive at line {line}")
        } else {
            "table directive".to_string()
        };
        let pred = self.intern_pred(name, arity, &context)?;
        self.program.tabled.insert(pred);
        Ok(pred)
    }

    /// Adds a ground fact given constant names.
    pub fn fact(&mut self, pred: &str, args: &[&str]) -> Result<(), LangError> {
        let tuple: Tuple = args.iter().map(|a| self.program.consts.intern(a)).collect();
        let pred = self.intern_pred(pred, args.len(), "fact")?;
        self.fact_rows.entry(pred).or_default().extend(tuple);
        Ok(())
    }

    /// Adds a ground fact with already-interned constants.
    pub fn fact_ids(&mut self, pred: PredId, tuple: &[ConstId]) -> Result<(), LangError> {
        let arity = self.program.pred_names[pred.0 as usize].1;
        if tuple.len() != arity {
            return Err(validation(format!(
                "fact for `{}` has {} arguments, expected {arity}",
                self.program.pred_name(pred),
                tuple.len()
            )));
        }
        self.fact_rows.entry(pred).or_default().extend_from_slice(tuple);
        Ok(())
    }

    pub fn pred(&mut self, name: &str, arity: usize) -> Result<PredId, LangError> {
        self.intern_pred(name, arity, "declaration")
    }

    /// Declares `name/arity` extensional, possibly with zero facts.
    pub fn edb(&mut self, name: &str, arity: usize) -> Result<PredId, LangError> {
        let pred = self.intern_pred(name, arity, "edb declaration")?;
        self.declared_edb.push(pred);
        Ok(pred)
    }

    /// Adds a rule given `(pred, args)` pairs; uppercase/underscore-initial
    /// argument strings become variables.
    pub fn rule(&mut self, head: (&str, &[&str]), body: &[(&str, &[&str])]) -> Result<(), LangError> {
        let mk_atom = |b: &mut Self, (name, args): (&str, &[&str])| -> Result<Atom, LangError> {
            let terms: Vec<Term> = args
                .iter()
                .map(|a| {
                    if a.starts_with(|c: char| c.is_ascii_uppercase() || c == '_') {
                        Term::Var(a.to_string())
                    } else {
                        Term::Const(b.program.consts.intern(a))
                    }
                })
                .collect();
            let pred = b.intern_pred(name, terms.len(), "rule")?;
            Ok(Atom { pred, args: terms })
        };
        let head = mk_atom(self, head)?;
        let body = body
            .iter()
            .map(|&a| mk_atom(self, a))
            .collect::<Result<Vec<_>, _>>()?;
        self.clause_validated(Clause {
            head,
            body,
            line: 0,
        })
    }

    fn clause_checked(&mut self, raw: parser::RawClause) -> Result<(), LangError> {
        let context = format!("clause at line {}", raw.line);
        let mut atoms = Vec::with_capacity(1 + raw.body.len());
        for raw_atom in std::iter::once(&raw.head).chain(raw.body.iter()) {
            let args: Vec<Term> = raw_atom
                .args
                .iter()
                .map(|t| match t {
                    parser::RawTerm::Var(v) => Term::Var(v.clone()),
                    parser::RawTerm::Const(c) => Term::Const(self.program.consts.intern(c)),
                })
                .collect();
            let pred = self.intern_pred(&raw_atom.name, args.len(), &context)?;
            atoms.push(Atom { pred, args });
        }
        let head = atoms.remove(0);
        self.clause_validated(Clause {
            head,
            body: atoms,
            line: raw.line,
        })
    }

    fn clause_validated(&mut self, clause: Clause) -> Result<(), LangError> {
        let describe = |p: &Program, c: &Clause| {
            if c.line > 0 {
                format!("`{}` (line {})", p.format_clause(c), c.line)
            } else {
                format!("`{}`", p.format_clause(c))
            }
        };
        if clause.is_fact() {
            if !clause.head.is_ground() {
                return Err(validation(format!(
                    "non-ground fact {}",
                    describe(&self.program, &clause)
                )));
            }
            let rows = self.fact_rows.entry(clause.head.pred).or_default();
            for t in &clause.head.args {
                match t {
                    Term::Const(c) => rows.push(*c),
                    Term::Var(_) => unreachable!(),
                }
            }
            return Ok(());
        }
        // Range restriction: every head variable occurs in the body.
        for term in &clause.head.args {
            if let Term::Var(v) = term {
                let in_body = clause
                    .body
                    .iter()
                    .any(|a| a.args.iter().any(|t| matches!(t, Term::Var(b) if b == v)));
                if !in_body {
                    return Err(validation(format!(
                        "unsafe variable `{v}` in rule {}: head variables must occur in the body",
                        describe(&self.program, &clause)
                    )));
                }
            }
        }
        let idx = self.program.clauses.len() as u32;
        self.program
            .rules_by_pred
            .entry(clause.head.pred)
            .or_default()
            .push(idx);
        self.program.clauses.push(clause);
        Ok(())
    }

    /// Finishes validation: checks body predicates are defined, classifies
    /// EDB predicates, and builds fact stores and indexes.
    pub fn build(mut self) -> Result<Program, LangError> {
        for (pred, flat) in self.fact_rows.drain() {
            let arity = self.program.pred_names[pred.0 as usize].1;
            self.program.facts.insert(pred, FactSet::from_flat(arity, flat));
        }
        for &p in &self.declared_edb {
            if self.program.rules_by_pred.contains_key(&p) {
                return Err(validation(format!(
                    "predicate `{}` is declared extensional but defined by rules",
                    self.program.pred_label(p)
                )));
            }
            self.program.edb.insert(p);
        }
        for clause in &self.program.clauses {
            for atom in &clause.body {
                if !self.program.is_defined(atom.pred) && !self.program.edb.contains(&atom.pred) {
                    return Err(validation(format!(
                        "predicate `{}` in body of `{}` is not defined by any clause, \
                         fact, or table directive",
                        self.program.pred_label(atom.pred),
                        self.program.format_clause(clause)
                    )));
                }
            }
        }
        // EDB: predicates defined only by facts. Index them on the first argument.
        let edb: Vec<PredId> = self
            .program
            .facts
            .keys()
            .copied()
            .filter(|p| !self.program.rules_by_pred.contains_key(p))
            .collect();
        for p in edb {
            self.program.edb.insert(p);
        }
        for (&p, facts) in self.program.facts.iter_mut() {
            if self.program.edb.contains(&p) {
                facts.build_index();
            }
        }
        Ok(self.program)
    }
}

#[cfg(test)]
mod tests;
