//! Variable store, propagation agenda and trail.
//!
//! Every mutation of a variable or propagator record is logged on the trail
//! so that [`Store::undo_to`] restores the exact earlier state. Aliasing is
//! a union-find forest without path compression.

mod search;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::domain::Domain;
use crate::propagators::{Propagator, Status};

pub use search::Solutions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropId(u32);

impl PropId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A propagator argument: a store variable or an integer constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    Const(i64),
}

impl From<VarId> for Term {
    fn from(v: VarId) -> Self {
        Term::Var(v)
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Const(v)
    }
}

/// Propagation wiped out a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
#[error("inconsistency")]
pub struct Failure;

pub type PropResult<T> = Result<T, Failure>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("a variable cannot start with an empty domain")]
    EmptyDomain,
    #[error("unbounded labeling: variable {0:?} has an infinite domain")]
    UnboundedLabeling(VarId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarRecord {
    pub domain: Domain,
    pub is_auxiliary: bool,
    pub visible: bool,
    pub watchers: Vec<PropId>,
    pub parent: Option<VarId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropState {
    Active,
    Entailed,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PropagatorRecord {
    pub propagator: Propagator,
    pub state: PropState,
}

#[derive(Debug, Clone)]
enum TrailEntry {
    NewVar,
    NewProp,
    Domain(VarId, Domain),
    Parent(VarId, Option<VarId>),
    Auxiliary(VarId, bool),
    Visible(VarId, bool),
    Watchers(VarId, Vec<PropId>),
    State(PropId, PropState),
    Propagator(PropId, Propagator),
}

/// A position on the trail returned by [`Store::push_choice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark(usize);

/// Diagnostic counters. Not trailed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub propagator_runs: u64,
    pub posts: u64,
}

#[derive(Debug, Default)]
pub struct Store {
    vars: Vec<VarRecord>,
    props: Vec<PropagatorRecord>,
    queue: VecDeque<PropId>,
    queued: Vec<bool>,
    trail: Vec<TrailEntry>,
    stats: Stats,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self, domain: Domain, auxiliary: bool) -> Result<VarId, EngineError> {
        if domain.is_empty() {
            return Err(EngineError::EmptyDomain);
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarRecord {
            domain,
            is_auxiliary: auxiliary,
            visible: true,
            watchers: Vec::new(),
            parent: None,
        });
        self.trail.push(TrailEntry::NewVar);
        Ok(id)
    }

    /// Fresh auxiliary variable; `domain` must be non-empty.
    pub(crate) fn new_aux(&mut self, domain: Domain) -> VarId {
        self.new_var(domain, true).expect("auxiliary domain is non-empty")
    }

    pub fn find(&self, mut v: VarId) -> VarId {
        while let Some(p) = self.vars[v.index()].parent {
            v = p;
        }
        v
    }

    pub fn record(&self, v: VarId) -> &VarRecord {
        &self.vars[v.index()]
    }

    pub fn domain(&self, v: VarId) -> &Domain {
        &self.vars[self.find(v).index()].domain
    }

    pub fn dom(&self, t: Term) -> Domain {
        match t {
            Term::Var(v) => self.domain(v).clone(),
            Term::Const(k) => Domain::singleton(k),
        }
    }

    pub fn value(&self, t: Term) -> Option<i64> {
        match t {
            Term::Var(v) => self.domain(v).as_singleton(),
            Term::Const(k) => Some(k),
        }
    }

    /// Widened bounds of a non-empty term domain.
    pub(crate) fn wide_bounds(&self, t: Term) -> (i128, i128) {
        match t {
            Term::Var(v) => self.domain(v).wide_bounds().expect("root domain is non-empty"),
            Term::Const(k) => (k as i128, k as i128),
        }
    }

    pub fn is_auxiliary(&self, v: VarId) -> bool {
        self.vars[self.find(v).index()].is_auxiliary
    }

    pub fn same(&self, a: Term, b: Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => self.find(x) == self.find(y),
            (Term::Const(x), Term::Const(y)) => x == y,
            _ => false,
        }
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn propagator_count(&self) -> usize {
        self.props.len()
    }

    /// Visible variables that are not aliased into another one.
    pub fn live_var_count(&self) -> usize {
        self.vars.iter().filter(|r| r.visible && r.parent.is_none()).count()
    }

    pub fn active_propagator_count(&self) -> usize {
        self.props.iter().filter(|p| p.state == PropState::Active).count()
    }

    pub fn propagators(&self) -> impl Iterator<Item = (PropId, &PropagatorRecord)> {
        self.props.iter().enumerate().map(|(i, p)| (PropId(i as u32), p))
    }

    pub fn propagator(&self, pid: PropId) -> &PropagatorRecord {
        &self.props[pid.index()]
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn set_domain(&mut self, root: VarId, d: Domain) {
        let rec = &mut self.vars[root.index()];
        let old = std::mem::replace(&mut rec.domain, d);
        self.trail.push(TrailEntry::Domain(root, old));
        self.wake(root);
    }

    fn wake(&mut self, root: VarId) {
        let watchers = std::mem::take(&mut self.vars[root.index()].watchers);
        for &pid in &watchers {
            self.enqueue(pid);
        }
        self.vars[root.index()].watchers = watchers;
    }

    fn enqueue(&mut self, pid: PropId) {
        let i = pid.index();
        if !self.queued[i] && self.props[i].state == PropState::Active {
            self.queued[i] = true;
            self.queue.push_back(pid);
        }
    }

    /// Intersects the variable's domain with `d`. Reports whether anything
    /// was removed.
    pub fn tighten(&mut self, v: VarId, d: &Domain) -> PropResult<bool> {
        let root = self.find(v);
        let old = &self.vars[root.index()].domain;
        let new = old.intersect(d);
        if new.is_empty() {
            return Err(Failure);
        }
        if new == *old {
            return Ok(false);
        }
        self.set_domain(root, new);
        Ok(true)
    }

    /// `tighten` for terms: a constant only checks membership.
    pub fn tighten_term(&mut self, t: Term, d: &Domain) -> PropResult<bool> {
        match t {
            Term::Var(v) => self.tighten(v, d),
            Term::Const(k) if d.contains(k) => Ok(false),
            Term::Const(_) => Err(Failure),
        }
    }

    pub(crate) fn tighten_range(&mut self, t: Term, lo: i128, hi: i128) -> PropResult<bool> {
        self.tighten_term(t, &Domain::range_wide(lo, hi))
    }

    pub fn fix(&mut self, t: Term, value: i64) -> PropResult<bool> {
        self.tighten_term(t, &Domain::singleton(value))
    }

    pub fn remove_value(&mut self, t: Term, value: i64) -> PropResult<bool> {
        match t {
            Term::Var(v) => {
                let root = self.find(v);
                let old = &self.vars[root.index()].domain;
                if !old.contains(value) {
                    return Ok(false);
                }
                let new = old.remove_value(value);
                if new.is_empty() {
                    return Err(Failure);
                }
                self.set_domain(root, new);
                Ok(true)
            }
            Term::Const(k) if k == value => Err(Failure),
            Term::Const(_) => Ok(false),
        }
    }

    /// Aliases `x` and `y`. The merged root keeps the intersection of both
    /// domains and is auxiliary only if both sides were.
    pub fn unify(&mut self, x: VarId, y: VarId) -> PropResult<()> {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return Ok(());
        }
        let merged = self.vars[rx.index()].domain.intersect(&self.vars[ry.index()].domain);
        if merged.is_empty() {
            return Err(Failure);
        }
        // keep a user variable as the root whenever there is one
        let (root, child) = if self.vars[rx.index()].is_auxiliary && !self.vars[ry.index()].is_auxiliary {
            (ry, rx)
        } else {
            (rx, ry)
        };
        self.trail.push(TrailEntry::Parent(child, None));
        self.vars[child.index()].parent = Some(root);

        let aux = self.vars[root.index()].is_auxiliary && self.vars[child.index()].is_auxiliary;
        if aux != self.vars[root.index()].is_auxiliary {
            self.trail.push(TrailEntry::Auxiliary(root, self.vars[root.index()].is_auxiliary));
            self.vars[root.index()].is_auxiliary = aux;
        }

        let extra: Vec<PropId> = self.vars[child.index()]
            .watchers
            .iter()
            .copied()
            .filter(|p| !self.vars[root.index()].watchers.contains(p))
            .collect();
        if !extra.is_empty() {
            let old = self.vars[root.index()].watchers.clone();
            self.trail.push(TrailEntry::Watchers(root, old));
            self.vars[root.index()].watchers.extend(extra);
        }
        if merged != self.vars[root.index()].domain {
            let old = std::mem::replace(&mut self.vars[root.index()].domain, merged);
            self.trail.push(TrailEntry::Domain(root, old));
        }
        // every watcher now sees a different variable graph
        self.wake(root);
        Ok(())
    }

    /// Equates two terms: aliasing for two variables, fixing otherwise.
    pub fn unify_terms(&mut self, a: Term, b: Term) -> PropResult<()> {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => self.unify(x, y),
            (Term::Var(x), Term::Const(k)) | (Term::Const(k), Term::Var(x)) => {
                self.fix(Term::Var(x), k).map(drop)
            }
            (Term::Const(x), Term::Const(y)) if x == y => Ok(()),
            _ => Err(Failure),
        }
    }

    /// Registers `p` and schedules it without running the agenda.
    pub fn add_propagator(&mut self, p: Propagator) -> PropId {
        let pid = PropId(self.props.len() as u32);
        for v in p.vars() {
            let root = self.find(v);
            let watchers = &self.vars[root.index()].watchers;
            if !watchers.contains(&pid) {
                self.trail.push(TrailEntry::Watchers(root, watchers.clone()));
                self.vars[root.index()].watchers.push(pid);
            }
        }
        self.props.push(PropagatorRecord { propagator: p, state: PropState::Active });
        self.queued.push(false);
        self.trail.push(TrailEntry::NewProp);
        self.stats.posts += 1;
        self.enqueue(pid);
        pid
    }

    /// Adds `p`, runs it and propagates to a fixpoint.
    pub fn post(&mut self, p: Propagator) -> PropResult<PropId> {
        let pid = self.add_propagator(p);
        self.propagate()?;
        Ok(pid)
    }

    /// Replaces the stored form of a propagator (for propagators that carry
    /// state of their own).
    pub(crate) fn update_propagator(&mut self, pid: PropId, p: Propagator) {
        let old = std::mem::replace(&mut self.props[pid.index()].propagator, p);
        self.trail.push(TrailEntry::Propagator(pid, old));
    }

    fn retire(&mut self, pid: PropId, state: PropState) {
        let old = self.props[pid.index()].state;
        if old == state {
            return;
        }
        self.trail.push(TrailEntry::State(pid, old));
        self.props[pid.index()].state = state;
        for v in self.props[pid.index()].propagator.vars() {
            let root = self.find(v);
            let watchers = &self.vars[root.index()].watchers;
            if let Some(pos) = watchers.iter().position(|&w| w == pid) {
                self.trail.push(TrailEntry::Watchers(root, watchers.clone()));
                self.vars[root.index()].watchers.remove(pos);
            }
        }
    }

    /// Runs scheduled propagators until none can prune further.
    pub fn propagate(&mut self) -> PropResult<()> {
        while let Some(pid) = self.queue.pop_front() {
            self.queued[pid.index()] = false;
            if self.props[pid.index()].state != PropState::Active {
                continue;
            }
            self.stats.propagator_runs += 1;
            let p = self.props[pid.index()].propagator.clone();
            match p.run(pid, self) {
                Ok(Status::Active) => {}
                Ok(Status::Entailed) => self.retire(pid, PropState::Entailed),
                Err(f) => {
                    self.clear_queue();
                    return Err(f);
                }
            }
        }
        Ok(())
    }

    fn clear_queue(&mut self) {
        for pid in self.queue.drain(..) {
            self.queued[pid.index()] = false;
        }
    }

    /// Kills the given propagators (and whatever they spawned) and hides
    /// each listed variable whose root is still auxiliary.
    pub fn discard(&mut self, pids: &[PropId], aux: &[VarId]) {
        let mut pending: Vec<PropId> = pids.to_vec();
        while let Some(pid) = pending.pop() {
            if self.props[pid.index()].state == PropState::Dead {
                continue;
            }
            pending.extend(self.props[pid.index()].propagator.spawned());
            self.retire(pid, PropState::Dead);
        }
        for &v in aux {
            let root = self.find(v);
            if self.vars[root.index()].is_auxiliary && self.vars[v.index()].visible {
                self.trail.push(TrailEntry::Visible(v, true));
                self.vars[v.index()].visible = false;
            }
        }
    }

    pub fn push_choice(&mut self) -> Mark {
        Mark(self.trail.len())
    }

    /// Restores the state at `mark`. Marks must be undone innermost first.
    pub fn undo_to(&mut self, mark: Mark) {
        assert!(mark.0 <= self.trail.len(), "undo to a mark that was already undone");
        self.clear_queue();
        while self.trail.len() > mark.0 {
            match self.trail.pop().expect("trail length checked") {
                TrailEntry::NewVar => {
                    self.vars.pop();
                }
                TrailEntry::NewProp => {
                    self.props.pop();
                    self.queued.pop();
                }
                TrailEntry::Domain(v, d) => self.vars[v.index()].domain = d,
                TrailEntry::Parent(v, p) => self.vars[v.index()].parent = p,
                TrailEntry::Auxiliary(v, a) => self.vars[v.index()].is_auxiliary = a,
                TrailEntry::Visible(v, b) => self.vars[v.index()].visible = b,
                TrailEntry::Watchers(v, w) => self.vars[v.index()].watchers = w,
                TrailEntry::State(p, s) => self.props[p.index()].state = s,
                TrailEntry::Propagator(p, q) => self.props[p.index()].propagator = q,
            }
        }
    }

    /// Hash of every variable and propagator record.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.vars.hash(&mut h);
        self.props.hash(&mut h);
        h.finish()
    }

    /// Depth-first enumeration of ground assignments to `vars`; values
    /// ascending, leftmost unassigned variable first.
    pub fn label(&mut self, vars: &[VarId], limit: Option<usize>) -> Result<Solutions<'_>, EngineError> {
        for &v in vars {
            if !self.domain(v).is_finite() {
                return Err(EngineError::UnboundedLabeling(v));
            }
        }
        Ok(Solutions::new(self, vars.to_vec(), limit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Rel;

    fn var(s: &mut Store, lo: i64, hi: i64) -> VarId {
        s.new_var(Domain::interval(lo, hi), false).unwrap()
    }

    #[test]
    fn new_var_basics() {
        let mut s = Store::new();
        let x = var(&mut s, 1, 9);
        let t = s.new_var(Domain::full(), true).unwrap();
        assert_ne!(x, t);
        assert_eq!(s.domain(x).min(), crate::domain::Bound::Finite(1));
        assert!(s.is_auxiliary(t));
        assert_eq!(s.new_var(Domain::empty(), false), Err(EngineError::EmptyDomain));
    }

    #[test]
    fn unify_examples() {
        let mut s = Store::new();
        let x = var(&mut s, 0, 5);
        let t = s.new_var(Domain::interval(3, 9), true).unwrap();
        s.unify(x, t).unwrap();
        assert_eq!(s.find(x), s.find(t));
        assert_eq!(*s.domain(t), Domain::interval(3, 5));
        assert!(!s.is_auxiliary(t));

        let a = var(&mut s, 0, 2);
        let b = var(&mut s, 5, 7);
        assert_eq!(s.unify(a, b), Err(Failure));
        assert_ne!(s.find(a), s.find(b));
    }

    #[test]
    fn tighten_examples() {
        let mut s = Store::new();
        let x = var(&mut s, 1, 9);
        assert_eq!(s.tighten(x, &Domain::interval(5, 12)), Ok(true));
        assert_eq!(*s.domain(x), Domain::interval(5, 9));
        assert_eq!(s.tighten(x, &Domain::interval(0, 100)), Ok(false));
        let z = var(&mut s, 0, 0);
        assert_eq!(s.tighten(z, &Domain::singleton(1)), Err(Failure));
    }

    #[test]
    fn post_examples() {
        let mut s = Store::new();
        let (x, y, z) = (var(&mut s, 1, 2), var(&mut s, 1, 2), var(&mut s, 0, 10));
        s.post(Propagator::Plus(x.into(), y.into(), z.into())).unwrap();
        // pairs (1,1) (1,2) (2,1) (2,2) give sums 2..4
        assert_eq!(*s.domain(z), Domain::interval(2, 4));

        let y0 = var(&mut s, 0, 0);
        assert_eq!(s.post(Propagator::NeqConst(y0.into(), 0)), Err(Failure));

        let mut s = Store::new();
        let x = var(&mut s, 1, 3);
        let pid = s.post(Propagator::relation(Rel::Eq, x.into(), x.into())).unwrap();
        assert_eq!(s.propagator(pid).state, PropState::Entailed);
    }

    #[test]
    fn fixpoint_chain_and_idempotence() {
        let mut s = Store::new();
        let (x, y, z) = (var(&mut s, 0, 9), var(&mut s, 0, 9), var(&mut s, 0, 9));
        s.post(Propagator::relation(Rel::Le, x.into(), y.into())).unwrap();
        s.post(Propagator::relation(Rel::Le, y.into(), z.into())).unwrap();
        s.tighten(x, &Domain::singleton(3)).unwrap();
        s.propagate().unwrap();
        assert_eq!(*s.domain(z), Domain::interval(3, 9));
        let h = s.state_hash();
        s.propagate().unwrap();
        assert_eq!(s.state_hash(), h);
        assert!(s.propagate().is_ok());
    }

    #[test]
    fn undo_restores_exactly() {
        let mut s = Store::new();
        let x = var(&mut s, 0, 9);
        let t = s.new_var(Domain::full(), true).unwrap();
        let h = s.state_hash();
        let m = s.push_choice();
        s.tighten(x, &Domain::interval(2, 3)).unwrap();
        s.unify(x, t).unwrap();
        s.undo_to(m);
        assert_eq!(s.state_hash(), h);
        assert_ne!(s.find(x), s.find(t));
        assert!(s.is_auxiliary(t));

        let n = s.propagator_count();
        let m = s.push_choice();
        let _ = s.post(Propagator::NeqConst(x.into(), 0));
        s.tighten(x, &Domain::singleton(0)).ok();
        let _ = s.propagate();
        s.undo_to(m);
        assert_eq!(s.propagator_count(), n);
        assert_eq!(s.state_hash(), h);
    }

    #[test]
    fn discard_respects_aliasing() {
        let mut s = Store::new();
        let t = s.new_var(Domain::full(), true).unwrap();
        let base = s.live_var_count();
        s.discard(&[], &[t]);
        assert_eq!(s.live_var_count(), base - 1);
        s.discard(&[], &[t]);
        assert_eq!(s.live_var_count(), base - 1);

        let mut s = Store::new();
        let x = s.new_var(Domain::full(), false).unwrap();
        let t = s.new_var(Domain::full(), true).unwrap();
        s.unify(x, t).unwrap();
        s.discard(&[], &[t]);
        let root = s.find(t);
        assert!(s.record(root).visible);
        assert!(!s.record(root).is_auxiliary);
        assert!(s.record(x).visible);
    }

    #[test]
    fn entailed_propagators_leave_watch_lists() {
        let mut s = Store::new();
        let x = var(&mut s, 0, 3);
        let y = var(&mut s, 5, 9);
        let pid = s.post(Propagator::relation(Rel::Lt, x.into(), y.into())).unwrap();
        assert_eq!(s.propagator(pid).state, PropState::Entailed);
        assert!(s.record(x).watchers.is_empty() && s.record(y).watchers.is_empty());
    }
}
