//! Committed-choice rules that pick a propagator for `lhs rel rhs`.
//!
//! A rule is a guarded pattern over the constraint plus an ordered list of
//! actions. The first rule whose pattern matches and whose guard holds
//! fires; no other rule is tried. Tables are lowered once by
//! [`compile_rules`] into a [`Dispatcher`]; [`interpret`] walks the
//! declarative table directly and serves as the reference semantics.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::Term;
use crate::expr::{BinOp, Expr, Rel};
use crate::propagators::Propagator;
use crate::reify::parse_plain;
use crate::solver::{SolveError, Solver, MAX_REMATCH_DEPTH};
use crate::template::{PropTemplate, TemplateKind};

/// Rule id reported when no rule applies.
pub const FALLBACK_RULE: &str = "fallback";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ctor {
    Bin(BinOp),
    Abs,
    Rel(Rel),
}

impl Ctor {
    pub fn arity(self) -> usize {
        match self {
            Ctor::Abs => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Any subexpression.
    Any(String),
    /// A variable or an integer.
    VarOrInt(String),
    /// An integer.
    Int(String),
    Node(Ctor, Vec<Pattern>),
}

impl Pattern {
    pub fn any(name: &str) -> Pattern {
        Pattern::Any(name.to_string())
    }

    pub fn leaf(name: &str) -> Pattern {
        Pattern::VarOrInt(name.to_string())
    }

    pub fn int(name: &str) -> Pattern {
        Pattern::Int(name.to_string())
    }

    pub fn bin(op: BinOp, a: Pattern, b: Pattern) -> Pattern {
        Pattern::Node(Ctor::Bin(op), vec![a, b])
    }

    pub fn abs(a: Pattern) -> Pattern {
        Pattern::Node(Ctor::Abs, vec![a])
    }

    pub fn rel(rel: Rel, a: Pattern, b: Pattern) -> Pattern {
        Pattern::Node(Ctor::Rel(rel), vec![a, b])
    }

    /// Hole names in left-to-right order.
    pub fn holes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pattern::Any(n) | Pattern::VarOrInt(n) | Pattern::Int(n) => out.push(n),
            Pattern::Node(_, cs) => cs.iter().for_each(|c| c.collect_holes(out)),
        }
    }

    /// Whether everything `other` matches is also matched by `self`.
    pub fn subsumes(&self, other: &Pattern) -> bool {
        match (self, other) {
            (Pattern::Any(_), _) => true,
            (Pattern::VarOrInt(_), Pattern::VarOrInt(_) | Pattern::Int(_)) => true,
            (Pattern::Int(_), Pattern::Int(_)) => true,
            (Pattern::Node(c, xs), Pattern::Node(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.subsumes(y))
            }
            _ => false,
        }
    }

    pub fn match_expr(&self, e: &Expr) -> Option<Bindings> {
        let mut b = Bindings::default();
        self.bind(e, &mut b).then_some(b)
    }

    /// Matches the constraint `lhs rel rhs`.
    pub fn match_relation(&self, rel: Rel, lhs: &Expr, rhs: &Expr) -> Option<Bindings> {
        match self {
            Pattern::Node(Ctor::Rel(r), cs) if *r == rel && cs.len() == 2 => {
                let mut b = Bindings::default();
                (cs[0].bind(lhs, &mut b) && cs[1].bind(rhs, &mut b)).then_some(b)
            }
            _ => None,
        }
    }

    fn bind(&self, e: &Expr, out: &mut Bindings) -> bool {
        let hit = |n: &String, out: &mut Bindings| {
            out.insert(n, Bound::Expr(e.clone()));
            true
        };
        match (self, e) {
            (Pattern::Any(n), _) => hit(n, out),
            (Pattern::VarOrInt(n), Expr::Int(_) | Expr::Var(_)) => hit(n, out),
            (Pattern::Int(n), Expr::Int(_)) => hit(n, out),
            (Pattern::Node(Ctor::Bin(op), cs), Expr::Binary(o, a, b)) if op == o && cs.len() == 2 => {
                cs[0].bind(a, out) && cs[1].bind(b, out)
            }
            (Pattern::Node(Ctor::Abs, cs), Expr::Abs(a)) if cs.len() == 1 => cs[0].bind(a, out),
            _ => false,
        }
    }

    /// Shapes of expressions this pattern can match at its root.
    fn shapes(&self) -> ShapeSet {
        match self {
            Pattern::Any(_) => ShapeSet::ALL,
            Pattern::VarOrInt(_) => ShapeSet::of(SHAPE_INT).with(SHAPE_VAR),
            Pattern::Int(_) => ShapeSet::of(SHAPE_INT),
            Pattern::Node(Ctor::Bin(op), _) => ShapeSet::of(bin_shape(*op)),
            Pattern::Node(Ctor::Abs, _) => ShapeSet::of(SHAPE_ABS),
            Pattern::Node(Ctor::Rel(_), _) => ShapeSet(0),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any(n) => write!(f, "any({n})"),
            Pattern::VarOrInt(n) => write!(f, "leaf({n})"),
            Pattern::Int(n) => write!(f, "int({n})"),
            Pattern::Node(Ctor::Abs, cs) => write!(f, "abs({})", cs[0]),
            Pattern::Node(Ctor::Bin(op), cs) if op.is_functional() => {
                write!(f, "{}({}, {})", op.symbol(), cs[0], cs[1])
            }
            Pattern::Node(Ctor::Bin(op), cs) => write!(f, "({} {} {})", cs[0], op.symbol(), cs[1]),
            Pattern::Node(Ctor::Rel(r), cs) => write!(f, "{} {} {}", cs[0], r.symbol(), cs[1]),
        }
    }
}

/// What a hole or action target is bound to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Expr(Expr),
    Term(Term),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(Vec<(String, Bound)>);

impl Bindings {
    pub fn get(&self, name: &str) -> Option<&Bound> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    pub fn expr(&self, name: &str) -> Option<&Expr> {
        match self.get(name) {
            Some(Bound::Expr(e)) => Some(e),
            _ => None,
        }
    }

    pub fn insert(&mut self, name: &str, value: Bound) {
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Bound)> {
        self.0.iter().map(|(n, b)| (n.as_str(), b))
    }
}

pub type GuardFn = Arc<dyn Fn(&Bindings) -> bool + Send + Sync>;
pub type GoalFn = Arc<dyn Fn(&mut Solver, &mut Bindings) -> Result<(), SolveError> + Send + Sync>;

#[derive(Clone)]
pub enum Guard {
    Always,
    Hook { name: String, test: GuardFn },
}

impl Guard {
    pub fn holds(&self, b: &Bindings) -> bool {
        match self {
            Guard::Always => true,
            Guard::Hook { test, .. } => test(b),
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Guard::Always)
    }
}

impl fmt::Debug for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Always => f.write_str("Always"),
            Guard::Hook { name, .. } => write!(f, "Hook({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Matcher {
    pub pattern: Pattern,
    pub guard: Guard,
}

#[derive(Clone)]
pub enum Action {
    /// Runs a host goal over the bindings.
    Call { name: String, goal: GoalFn },
    /// Binds `into` to the decomposed result of the subexpression in `expr`.
    Decompose { expr: String, into: String },
    Post(PropTemplate<String>),
    /// Dispatches the rule's own relation again on two bound subexpressions.
    Rematch { lhs: String, rhs: String },
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Call { name, .. } => write!(f, "g({name})"),
            Action::Decompose { expr, into } => write!(f, "d({expr}, {into})"),
            Action::Post(t) => write!(f, "p({t})"),
            Action::Rematch { lhs, rhs } => write!(f, "r({lhs}, {rhs})"),
        }
    }
}

impl Action {
    pub fn decompose(expr: &str, into: &str) -> Action {
        Action::Decompose { expr: expr.to_string(), into: into.to_string() }
    }

    pub fn post(kind: TemplateKind, args: &[&str]) -> Action {
        Action::Post(PropTemplate::new(kind, args.iter().map(|a| a.to_string())))
    }

    pub fn rematch(lhs: &str, rhs: &str) -> Action {
        Action::Rematch { lhs: lhs.to_string(), rhs: rhs.to_string() }
    }

    pub fn call(
        name: &str,
        goal: impl Fn(&mut Solver, &mut Bindings) -> Result<(), SolveError> + Send + Sync + 'static,
    ) -> Action {
        Action::Call { name: name.to_string(), goal: Arc::new(goal) }
    }
}

#[derive(Debug, Clone)]
pub struct MatchRule {
    pub id: String,
    pub matcher: Matcher,
    pub actions: Vec<Action>,
}

impl MatchRule {
    /// `m(P) -> actions`
    pub fn new(id: &str, pattern: Pattern, actions: Vec<Action>) -> Self {
        MatchRule { id: id.to_string(), matcher: Matcher { pattern, guard: Guard::Always }, actions }
    }

    /// `m_c(P, C) -> actions`
    pub fn guarded(
        id: &str,
        pattern: Pattern,
        guard_name: &str,
        guard: impl Fn(&Bindings) -> bool + Send + Sync + 'static,
        actions: Vec<Action>,
    ) -> Self {
        let guard = Guard::Hook { name: guard_name.to_string(), test: Arc::new(guard) };
        MatchRule { id: id.to_string(), matcher: Matcher { pattern, guard }, actions }
    }

    /// The relation at the root of the pattern.
    pub fn relation(&self) -> Option<Rel> {
        match &self.matcher.pattern {
            Pattern::Node(Ctor::Rel(r), _) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleTable {
    pub rules: Vec<MatchRule>,
}

impl RuleTable {
    pub fn new(rules: Vec<MatchRule>) -> Self {
        RuleTable { rules }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Rules for `rel`, in dispatch order.
    pub fn rules_for(&self, rel: Rel) -> impl Iterator<Item = &MatchRule> {
        self.rules.iter().filter(move |r| r.relation() == Some(rel))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule `{rule}`: hole `{hole}` occurs more than once")]
    DuplicateHole { rule: String, hole: String },
    #[error("rule `{rule}`: empty action list")]
    EmptyActions { rule: String },
    #[error("rule `{rule}`: pattern root is not a relation")]
    RootNotRelation { rule: String },
    #[error("rule `{rule}`: `{name}` is not bound where it is used")]
    UnboundHole { rule: String, name: String },
    #[error("rule `{rule}`: wrong number of arguments")]
    Arity { rule: String },
}

/// Checks the well-formedness conditions that [`compile_rules`] relies on.
pub fn validate(table: &RuleTable) -> Result<(), RuleError> {
    for rule in &table.rules {
        let id = || rule.id.clone();
        let p = &rule.matcher.pattern;
        if rule.relation().is_none() {
            return Err(RuleError::RootNotRelation { rule: id() });
        }
        if !arities_ok(p) {
            return Err(RuleError::Arity { rule: id() });
        }
        let holes = p.holes();
        for (i, h) in holes.iter().enumerate() {
            if holes[..i].contains(h) {
                return Err(RuleError::DuplicateHole { rule: id(), hole: h.to_string() });
            }
        }
        if rule.actions.is_empty() {
            return Err(RuleError::EmptyActions { rule: id() });
        }
        let mut known: Vec<&str> = holes.clone();
        let unbound = |name: &str| RuleError::UnboundHole { rule: id(), name: name.to_string() };
        for a in &rule.actions {
            match a {
                Action::Call { .. } => {}
                Action::Decompose { expr, into } => {
                    if !holes.contains(&expr.as_str()) {
                        return Err(unbound(expr));
                    }
                    known.push(into);
                }
                Action::Post(t) => {
                    if t.args.len() != t.kind.arity() {
                        return Err(RuleError::Arity { rule: id() });
                    }
                    if let Some(a) = t.args.iter().find(|a| !known.contains(&a.as_str())) {
                        return Err(unbound(a));
                    }
                }
                Action::Rematch { lhs, rhs } => {
                    if let Some(h) = [lhs, rhs].into_iter().find(|h| !holes.contains(&h.as_str())) {
                        return Err(unbound(h));
                    }
                }
            }
        }
    }
    Ok(())
}

fn arities_ok(p: &Pattern) -> bool {
    match p {
        Pattern::Node(c, cs) => cs.len() == c.arity() && cs.iter().all(arities_ok),
        _ => true,
    }
}

fn term_of(solver: &mut Solver, b: &Bound) -> Result<Term, SolveError> {
    match b {
        Bound::Term(t) => Ok(*t),
        Bound::Expr(e) => parse_plain(solver, e),
    }
}

fn fallback(solver: &mut Solver, rel: Rel, lhs: &Expr, rhs: &Expr) -> Result<(), SolveError> {
    solver.emit(|| format!("DISPATCH {rel} rule={FALLBACK_RULE}"));
    let a = parse_plain(solver, lhs)?;
    let b = parse_plain(solver, rhs)?;
    solver.store.post(Propagator::relation(rel, a, b))?;
    Ok(())
}

/// Reference semantics: scans the declarative table on every call. The
/// table must pass [`validate`].
pub fn interpret(table: &RuleTable, solver: &mut Solver, rel: Rel, lhs: &Expr, rhs: &Expr) -> Result<(), SolveError> {
    interpret_at(table, solver, rel, lhs, rhs, 0)
}

fn interpret_at(
    table: &RuleTable,
    solver: &mut Solver,
    rel: Rel,
    lhs: &Expr,
    rhs: &Expr,
    depth: usize,
) -> Result<(), SolveError> {
    solver.count_dispatch();
    for rule in table.rules_for(rel) {
        let Some(mut b) = rule.matcher.pattern.match_relation(rel, lhs, rhs) else {
            continue;
        };
        if !rule.matcher.guard.holds(&b) {
            continue;
        }
        solver.emit(|| format!("DISPATCH {rel} rule={}", rule.id));
        for action in &rule.actions {
            match action {
                Action::Call { goal, .. } => goal(solver, &mut b)?,
                Action::Decompose { expr, into } => {
                    let src = b.get(expr).expect("validated").clone();
                    let t = term_of(solver, &src)?;
                    b.insert(into, Bound::Term(t));
                }
                Action::Post(t) => {
                    let mut args = Vec::with_capacity(t.args.len());
                    for a in &t.args {
                        let v = b.get(a).expect("validated").clone();
                        args.push(term_of(solver, &v)?);
                    }
                    solver.store.post(t.kind.build(&args))?;
                }
                Action::Rematch { lhs: x, rhs: y } => {
                    if depth + 1 > MAX_REMATCH_DEPTH {
                        return Err(SolveError::RematchDepth);
                    }
                    let (x, y) = (b.expr(x).expect("validated").clone(), b.expr(y).expect("validated").clone());
                    interpret_at(table, solver, rel, &x, &y, depth + 1)?;
                }
            }
        }
        return Ok(());
    }
    fallback(solver, rel, lhs, rhs)
}

const SHAPE_INT: usize = 0;
const SHAPE_VAR: usize = 1;
const SHAPE_ABS: usize = 2;
const SHAPES: usize = 3 + BinOp::ALL.len();

fn bin_shape(op: BinOp) -> usize {
    3 + BinOp::ALL.iter().position(|&o| o == op).expect("listed operator")
}

fn shape(e: &Expr) -> usize {
    match e {
        Expr::Int(_) => SHAPE_INT,
        Expr::Var(_) => SHAPE_VAR,
        Expr::Abs(_) => SHAPE_ABS,
        Expr::Binary(op, ..) => bin_shape(*op),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ShapeSet(u32);

impl ShapeSet {
    const ALL: ShapeSet = ShapeSet((1 << SHAPES) - 1);

    fn of(s: usize) -> Self {
        ShapeSet(1 << s)
    }

    fn with(self, s: usize) -> Self {
        ShapeSet(self.0 | 1 << s)
    }

    fn has(self, s: usize) -> bool {
        self.0 & (1 << s) != 0
    }
}

/// One step of a flattened pattern. Paths start with 0 (lhs) or 1 (rhs)
/// and then give child positions.
#[derive(Debug, Clone)]
enum Check {
    Shape { path: Vec<u8>, allowed: ShapeSet },
    Bind { path: Vec<u8>, slot: usize },
}

#[derive(Clone)]
enum Step {
    Call(GoalFn),
    Decompose { src: usize, dst: usize },
    Post { kind: TemplateKind, args: Vec<usize> },
    Rematch { lhs: usize, rhs: usize },
}

#[derive(Clone)]
struct CompiledRule {
    id: String,
    checks: Vec<Check>,
    names: Vec<String>,
    guard: Guard,
    steps: Vec<Step>,
}

/// A rule table lowered to a shape index and flat match programs.
#[derive(Clone)]
pub struct Dispatcher {
    rules: Vec<CompiledRule>,
    /// Candidate rules per (relation, lhs shape, rhs shape), in table order.
    index: Vec<Vec<u32>>,
}

impl fmt::Debug for Dispatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dispatcher").field("rules", &self.rules.iter().map(|r| &r.id).collect::<Vec<_>>()).finish()
    }
}

fn key(rel: Rel, l: usize, r: usize) -> usize {
    (rel.index() * SHAPES + l) * SHAPES + r
}

fn flatten(p: &Pattern, path: &mut Vec<u8>, names: &mut Vec<String>, out: &mut Vec<Check>) {
    if path.len() > 1 {
        out.push(Check::Shape { path: path.clone(), allowed: p.shapes() });
    }
    match p {
        Pattern::Any(n) | Pattern::VarOrInt(n) | Pattern::Int(n) => {
            out.push(Check::Bind { path: path.clone(), slot: names.len() });
            names.push(n.clone());
        }
        Pattern::Node(_, cs) => {
            for (i, c) in cs.iter().enumerate() {
                path.push(i as u8);
                flatten(c, path, names, out);
                path.pop();
            }
        }
    }
}

pub fn compile_rules(table: &RuleTable) -> Result<Dispatcher, RuleError> {
    validate(table)?;
    let mut rules = Vec::with_capacity(table.rules.len());
    let mut index = vec![Vec::new(); Rel::ALL.len() * SHAPES * SHAPES];
    for (i, rule) in table.rules.iter().enumerate() {
        let Pattern::Node(Ctor::Rel(rel), cs) = &rule.matcher.pattern else {
            unreachable!("validated");
        };
        let (ls, rs) = (cs[0].shapes(), cs[1].shapes());
        for l in (0..SHAPES).filter(|&l| ls.has(l)) {
            for r in (0..SHAPES).filter(|&r| rs.has(r)) {
                index[key(*rel, l, r)].push(i as u32);
            }
        }
        let mut names = Vec::new();
        let mut checks = Vec::new();
        flatten(&rule.matcher.pattern, &mut Vec::new(), &mut names, &mut checks);
        let slot = |names: &Vec<String>, n: &str| names.iter().position(|m| m == n).expect("validated");
        let mut steps = Vec::with_capacity(rule.actions.len());
        for a in &rule.actions {
            steps.push(match a {
                Action::Call { goal, .. } => Step::Call(goal.clone()),
                Action::Decompose { expr, into } => {
                    let src = slot(&names, expr);
                    let dst = match names.iter().position(|m| m == into) {
                        Some(d) => d,
                        None => {
                            names.push(into.clone());
                            names.len() - 1
                        }
                    };
                    Step::Decompose { src, dst }
                }
                Action::Post(t) => Step::Post { kind: t.kind, args: t.args.iter().map(|a| slot(&names, a)).collect() },
                Action::Rematch { lhs, rhs } => Step::Rematch { lhs: slot(&names, lhs), rhs: slot(&names, rhs) },
            });
        }
        rules.push(CompiledRule { id: rule.id.clone(), checks, names, guard: rule.matcher.guard.clone(), steps });
    }
    Ok(Dispatcher { rules, index })
}

fn at<'e>(lhs: &'e Expr, rhs: &'e Expr, path: &[u8]) -> Option<&'e Expr> {
    let mut e = if path[0] == 0 { lhs } else { rhs };
    for &i in &path[1..] {
        e = match (e, i) {
            (Expr::Binary(_, a, _), 0) | (Expr::Abs(a), 0) => a,
            (Expr::Binary(_, _, b), 1) => b,
            _ => return None,
        };
    }
    Some(e)
}

impl CompiledRule {
    fn run_checks(&self, lhs: &Expr, rhs: &Expr, slots: &mut [Option<Bound>]) -> bool {
        for c in &self.checks {
            match c {
                Check::Shape { path, allowed } => match at(lhs, rhs, path) {
                    Some(e) if allowed.has(shape(e)) => {}
                    _ => return false,
                },
                Check::Bind { path, slot } => match at(lhs, rhs, path) {
                    Some(e) => slots[*slot] = Some(Bound::Expr(e.clone())),
                    None => return false,
                },
            }
        }
        true
    }

    fn bindings(&self, slots: &[Option<Bound>]) -> Bindings {
        let mut b = Bindings::default();
        for (n, v) in self.names.iter().zip(slots) {
            if let Some(v) = v {
                b.insert(n, v.clone());
            }
        }
        b
    }
}

impl Dispatcher {
    /// Dispatcher for the empty table: every constraint takes the fallback.
    pub fn empty() -> Self {
        compile_rules(&RuleTable::empty()).expect("empty table is valid")
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.id.as_str())
    }

    /// Posts `lhs rel rhs` using the first applicable rule, or the fallback.
    pub fn dispatch(&self, solver: &mut Solver, rel: Rel, lhs: &Expr, rhs: &Expr) -> Result<(), SolveError> {
        self.dispatch_at(solver, rel, lhs, rhs, 0)
    }

    fn dispatch_at(&self, solver: &mut Solver, rel: Rel, lhs: &Expr, rhs: &Expr, depth: usize) -> Result<(), SolveError> {
        solver.count_dispatch();
        let mut slots: Vec<Option<Bound>> = Vec::new();
        for &i in &self.index[key(rel, shape(lhs), shape(rhs))] {
            let rule = &self.rules[i as usize];
            slots.clear();
            slots.resize(rule.names.len(), None);
            if !rule.run_checks(lhs, rhs, &mut slots) {
                continue;
            }
            if !rule.guard.is_trivial() && !rule.guard.holds(&rule.bindings(&slots)) {
                continue;
            }
            solver.emit(|| format!("DISPATCH {rel} rule={}", rule.id));
            for step in &rule.steps {
                match step {
                    Step::Call(goal) => {
                        let mut b = rule.bindings(&slots);
                        goal(solver, &mut b)?;
                        for (n, v) in b.iter() {
                            if let Some(k) = rule.names.iter().position(|m| m == n) {
                                slots[k] = Some(v.clone());
                            }
                        }
                    }
                    Step::Decompose { src, dst } => {
                        let src = slots[*src].clone().expect("bound by match");
                        slots[*dst] = Some(Bound::Term(term_of(solver, &src)?));
                    }
                    Step::Post { kind, args } => {
                        let mut terms = Vec::with_capacity(args.len());
                        for &a in args {
                            let v = slots[a].clone().expect("bound before use");
                            terms.push(term_of(solver, &v)?);
                        }
                        solver.store.post(kind.build(&terms))?;
                    }
                    Step::Rematch { lhs: x, rhs: y } => {
                        if depth + 1 > MAX_REMATCH_DEPTH {
                            return Err(SolveError::RematchDepth);
                        }
                        let expr = |k: usize| match &slots[k] {
                            Some(Bound::Expr(e)) => e.clone(),
                            _ => unreachable!("rematch arguments are pattern holes"),
                        };
                        let (x, y) = (expr(*x), expr(*y));
                        self.dispatch_at(solver, rel, &x, &y, depth + 1)?;
                    }
                }
            }
            return Ok(());
        }
        fallback(solver, rel, lhs, rhs)
    }
}

/// An earlier rule that makes a later one unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shadowing {
    pub shadowing: String,
    pub shadowed: String,
}

impl fmt::Display for Shadowing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule `{}` shadows rule `{}`", self.shadowing, self.shadowed)
    }
}

/// Pairs `(j, i)` with `j` before `i` where rule `j` has no guard and its
/// pattern subsumes that of rule `i`.
pub fn check_subsumption(table: &RuleTable) -> Vec<Shadowing> {
    let mut out = Vec::new();
    for (i, later) in table.rules.iter().enumerate() {
        for earlier in &table.rules[..i] {
            if earlier.matcher.guard.is_trivial() && earlier.matcher.pattern.subsumes(&later.matcher.pattern) {
                out.push(Shadowing { shadowing: earlier.id.clone(), shadowed: later.id.clone() });
            }
        }
    }
    out
}

fn leaf_rule(id: &str, rel: Rel) -> MatchRule {
    MatchRule::new(
        id,
        Pattern::rel(rel, Pattern::leaf("X"), Pattern::leaf("Y")),
        vec![Action::post(TemplateKind::Rel(rel), &["X", "Y"])],
    )
}

fn eq_op_rule(id: &str, op: BinOp, kind: TemplateKind) -> MatchRule {
    MatchRule::new(
        id,
        Pattern::rel(Rel::Eq, Pattern::leaf("Z"), Pattern::bin(op, Pattern::leaf("X"), Pattern::leaf("Y"))),
        vec![Action::post(kind, &["X", "Y", "Z"])],
    )
}

/// The shipped rule table: a representative reconstruction, not a
/// transcription of any published table.
pub fn default_rule_table() -> RuleTable {
    RuleTable::new(vec![
        MatchRule::new(
            "absdiff_eq",
            Pattern::rel(
                Rel::Eq,
                Pattern::abs(Pattern::bin(BinOp::Sub, Pattern::any("X"), Pattern::any("Y"))),
                Pattern::leaf("C"),
            ),
            vec![
                Action::decompose("X", "RX"),
                Action::decompose("Y", "RY"),
                Action::post(TemplateKind::AbsDiff, &["RX", "RY", "C"]),
            ],
        ),
        leaf_rule("eq_leaf", Rel::Eq),
        eq_op_rule("eq_plus", BinOp::Add, TemplateKind::Plus),
        eq_op_rule("eq_times", BinOp::Mul, TemplateKind::Times),
        eq_op_rule("eq_mod", BinOp::Mod, TemplateKind::Mod),
        MatchRule::guarded(
            "eq_normalize",
            Pattern::rel(Rel::Eq, Pattern::int("K"), Pattern::any("E")),
            "compound(E)",
            |b| b.expr("E").is_some_and(Expr::is_compound),
            vec![Action::rematch("E", "K")],
        ),
        leaf_rule("neq_leaf", Rel::Neq),
        leaf_rule("lt_leaf", Rel::Lt),
        leaf_rule("le_leaf", Rel::Le),
        leaf_rule("gt_leaf", Rel::Gt),
        leaf_rule("ge_leaf", Rel::Ge),
    ])
}

/// A generic equality rule placed before a specific one; the linter
/// reports exactly that pair.
pub fn generic_first_rule_table() -> RuleTable {
    RuleTable::new(vec![
        MatchRule::new(
            "eq_generic",
            Pattern::rel(Rel::Eq, Pattern::any("X"), Pattern::any("Y")),
            vec![
                Action::decompose("X", "RX"),
                Action::decompose("Y", "RY"),
                Action::post(TemplateKind::Rel(Rel::Eq), &["RX", "RY"]),
            ],
        ),
        leaf_rule("eq_leaf", Rel::Eq),
    ])
}
