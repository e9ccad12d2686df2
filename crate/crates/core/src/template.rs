//! Propagator templates: a propagator kind with named argument slots,
//! instantiated once the slots are resolved to terms.

use std::fmt;

use crate::engine::Term;
use crate::expr::Rel;
use crate::propagators::Propagator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateKind {
    /// `a rel b`
    Rel(Rel),
    /// `a + b = r`
    Plus,
    /// `a * b = r`
    Times,
    /// `a / b = r`
    Div,
    /// `a mod b = r`
    Mod,
    /// `a rem b = r`
    Rem,
    /// `|a| = r`
    Abs,
    /// `|a - b| = r`
    AbsDiff,
    /// `min(a, b) = r`
    Min,
    /// `max(a, b) = r`
    Max,
}

impl TemplateKind {
    pub fn arity(self) -> usize {
        match self {
            TemplateKind::Rel(_) | TemplateKind::Abs => 2,
            _ => 3,
        }
    }

    /// Panics if `args.len() != self.arity()`; templates are arity-checked
    /// when their rule table is built.
    pub fn build(self, args: &[Term]) -> Propagator {
        assert_eq!(args.len(), self.arity(), "template arity");
        let (a, b) = (args[0], args[1]);
        let r = || args[2];
        match self {
            TemplateKind::Rel(rel) => Propagator::relation(rel, a, b),
            TemplateKind::Plus => Propagator::Plus(a, b, r()),
            TemplateKind::Times => Propagator::Times(a, b, r()),
            TemplateKind::Div => Propagator::Div(a, b, r()),
            TemplateKind::Mod => Propagator::Mod(a, b, r()),
            TemplateKind::Rem => Propagator::Rem(a, b, r()),
            TemplateKind::Abs => Propagator::Abs(a, b),
            TemplateKind::AbsDiff => Propagator::AbsDiff(a, b, r()),
            TemplateKind::Min => Propagator::Min(a, b, r()),
            TemplateKind::Max => Propagator::Max(a, b, r()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PropTemplate<A> {
    pub kind: TemplateKind,
    pub args: Vec<A>,
}

impl<A> PropTemplate<A> {
    pub fn new(kind: TemplateKind, args: impl IntoIterator<Item = A>) -> Self {
        PropTemplate { kind, args: args.into_iter().collect() }
    }
}

impl<A: fmt::Display> fmt::Display for PropTemplate<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(", self.kind)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}
