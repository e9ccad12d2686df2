//! A store plus the name table, rule tables and trace sink used when
//! posting symbolic constraints.

use std::sync::{Arc, OnceLock};

use indexmap::IndexMap;
use thiserror::Error;

use crate::domain::Domain;
use crate::engine::{EngineError, Failure, Store, VarId};
use crate::expr::{Expr, ReifConstraint, Rel};
use crate::matcher::{self, Dispatcher};
use crate::model::Statement;
use crate::reify::{self, ParseRules};

/// Rematch chains deeper than this are rejected.
pub const MAX_REMATCH_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("inconsistent")]
    Inconsistent,
    #[error("no parse rule applies to `{0}`")]
    NoParseRule(String),
    #[error("rematch nested deeper than {MAX_REMATCH_DEPTH}")]
    RematchDepth,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl From<Failure> for SolveError {
    fn from(_: Failure) -> Self {
        SolveError::Inconsistent
    }
}

fn shipped_dispatcher() -> Arc<Dispatcher> {
    static CELL: OnceLock<Arc<Dispatcher>> = OnceLock::new();
    CELL.get_or_init(|| {
        Arc::new(matcher::compile_rules(&matcher::default_rule_table()).expect("shipped rule table compiles"))
    })
    .clone()
}

fn shipped_parse_rules() -> Arc<ParseRules> {
    static CELL: OnceLock<Arc<ParseRules>> = OnceLock::new();
    CELL.get_or_init(|| Arc::new(reify::default_parse_rules())).clone()
}

pub struct Solver {
    pub store: Store,
    names: IndexMap<String, VarId>,
    dispatcher: Arc<Dispatcher>,
    parse_rules: Arc<ParseRules>,
    trace: Option<Vec<String>>,
    dispatches: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Self::with_rules(shipped_dispatcher(), shipped_parse_rules())
    }

    pub fn with_rules(dispatcher: Arc<Dispatcher>, parse_rules: Arc<ParseRules>) -> Self {
        Solver { store: Store::new(), names: IndexMap::new(), dispatcher, parse_rules, trace: None, dispatches: 0 }
    }

    /// The user variable called `name`, created with domain `inf..sup` on
    /// first use.
    pub fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.names.get(name) {
            return v;
        }
        let v = self.store.new_var(Domain::full(), false).expect("full domain is non-empty");
        self.names.insert(name.to_string(), v);
        v
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    /// User variables in order of first occurrence.
    pub fn names(&self) -> impl Iterator<Item = (&str, VarId)> {
        self.names.iter().map(|(n, &v)| (n.as_str(), v))
    }

    pub fn dispatcher(&self) -> &Arc<Dispatcher> {
        &self.dispatcher
    }

    pub fn parse_rules(&self) -> &Arc<ParseRules> {
        &self.parse_rules
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn tracing(&self) -> bool {
        self.trace.is_some()
    }

    pub(crate) fn emit(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            t.push(line());
        }
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn dispatches(&self) -> u64 {
        self.dispatches
    }

    pub(crate) fn count_dispatch(&mut self) {
        self.dispatches += 1;
    }

    /// Restricts the named variable to `domain`.
    pub fn declare(&mut self, name: &str, domain: &Domain) -> Result<(), SolveError> {
        let v = self.var(name);
        self.store.tighten(v, domain)?;
        self.store.propagate()?;
        Ok(())
    }

    /// Posts `lhs rel rhs` through the rule dispatcher.
    pub fn post(&mut self, rel: Rel, lhs: &Expr, rhs: &Expr) -> Result<(), SolveError> {
        let d = self.dispatcher.clone();
        d.dispatch(self, rel, lhs, rhs)
    }

    pub fn post_reified(&mut self, c: &ReifConstraint) -> Result<reify::ReifiedPost, SolveError> {
        reify::post_reified(self, c)
    }

    /// Posts a model statement. Returns the variables to label for a
    /// `label/1` statement.
    pub fn post_statement(&mut self, st: &Statement) -> Result<Option<Vec<VarId>>, SolveError> {
        match st {
            Statement::In(name, d) => self.declare(name, d).map(|_| None),
            Statement::Constraint(rel, a, b) => self.post(*rel, a, b).map(|_| None),
            Statement::Reified(c) => self.post_reified(c).map(|_| None),
            Statement::Label(names) => Ok(Some(names.iter().map(|n| self.var(n)).collect())),
        }
    }
}
