use crate::domain::Domain;

use super::{Mark, Store, VarId};

struct Frame {
    mark: Mark,
    var: VarId,
    untried: Domain,
}

/// Lazy stream of labeling solutions. Between calls to `next` the store
/// holds the state of the last solution; dropping the stream restores the
/// state it started from.
pub struct Solutions<'s> {
    store: &'s mut Store,
    vars: Vec<VarId>,
    limit: Option<usize>,
    found: usize,
    stack: Vec<Frame>,
    start: Mark,
    started: bool,
    done: bool,
}

impl<'s> Solutions<'s> {
    pub(super) fn new(store: &'s mut Store, vars: Vec<VarId>, limit: Option<usize>) -> Self {
        let start = store.push_choice();
        Solutions { store, vars, limit, found: 0, stack: Vec::new(), start, started: false, done: false }
    }

    pub fn store(&self) -> &Store {
        self.store
    }

    fn first_unassigned(&self) -> Option<VarId> {
        self.vars
            .iter()
            .copied()
            .find(|&v| self.store.domain(v).as_singleton().is_none())
    }

    /// Tries the next value of the top frame; pops exhausted frames.
    fn advance(&mut self) -> bool {
        while let Some(frame) = self.stack.last_mut() {
            let (mark, var) = (frame.mark, frame.var);
            match frame.untried.bounds().and_then(|(lo, _)| lo.finite()) {
                Some(v) => {
                    frame.untried = frame.untried.remove_value(v);
                    self.store.undo_to(mark);
                    let ok = self
                        .store
                        .tighten(var, &Domain::singleton(v))
                        .and_then(|_| self.store.propagate())
                        .is_ok();
                    if ok {
                        return true;
                    }
                }
                None => {
                    self.store.undo_to(mark);
                    self.stack.pop();
                }
            }
        }
        false
    }
}

impl Iterator for Solutions<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done || self.limit.is_some_and(|n| self.found >= n) {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.store.propagate().is_err() {
                self.done = true;
                return None;
            }
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        loop {
            match self.first_unassigned() {
                None => {
                    self.found += 1;
                    return Some(
                        self.vars
                            .iter()
                            .map(|&v| self.store.domain(v).as_singleton().expect("assigned"))
                            .collect(),
                    );
                }
                Some(var) => {
                    let mark = self.store.push_choice();
                    let untried = self.store.domain(var).clone();
                    self.stack.push(Frame { mark, var, untried });
                    if !self.advance() {
                        self.done = true;
                        return None;
                    }
                }
            }
        }
    }
}

impl Drop for Solutions<'_> {
    fn drop(&mut self) {
        self.store.undo_to(self.start);
    }
}
