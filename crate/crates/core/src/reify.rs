//! Parse rules that decompose an expression into a result term `R`, a 0/1
//! definedness term `D` and auxiliary variables, and the posting of
//! reified constraints on top of them.
//!
//! Rules are tried in table order; the first head that matches commits.
//! Subexpressions bound by a `Match` head are parsed before the body runs.
//! Inside a body, names refer to:
//!
//! * `R`, the rule's result;
//! * a pattern hole, meaning that subexpression's result (or its
//!   definedness inside `Defined`);
//! * any other name, a local variable created on first use.

use std::fmt;
use std::sync::Arc;

use crate::domain::Domain;
use crate::engine::{PropId, Term, VarId};
use crate::expr::{BinOp, BoolTerm, Expr, ReifConstraint, Rel};
use crate::matcher::Pattern;
use crate::propagators::{Irrelevant, Propagator};
use crate::solver::{SolveError, Solver};
use crate::template::{PropTemplate, TemplateKind};

pub type ExprTest = Arc<dyn Fn(&Expr) -> bool + Send + Sync>;
pub type ParseHook = Arc<dyn Fn(&mut Solver, &Expr, &mut ParseEnv) -> Result<(), SolveError> + Send + Sync>;

#[derive(Clone)]
pub enum Head {
    Guard { name: String, test: ExprTest },
    Match(Pattern),
}

#[derive(Clone)]
pub enum BodyElem {
    Call { name: String, hook: ParseHook },
    /// `D` is the conjunction of the named definedness terms.
    Defined(Vec<String>),
    Post(PropTemplate<String>),
    /// Lists the variable as auxiliary.
    Aux(String),
    /// Lists `a` as auxiliary unless it is the same variable as `x`.
    AuxUnless1 { x: String, a: String },
    /// Lists `a` as auxiliary unless it is the same variable as `x` or `y`.
    AuxUnless2 { x: String, y: String, a: String },
    /// Guards `goal` on `divisor` being nonzero, with `defined` as its
    /// definedness bit.
    Skeleton { divisor: String, defined: String, goal: PropTemplate<String> },
}

impl fmt::Debug for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Guard { name, .. } => write!(f, "g({name})"),
            Head::Match(p) => write!(f, "m({p})"),
        }
    }
}

impl fmt::Debug for BodyElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyElem::Call { name, .. } => write!(f, "g({name})"),
            BodyElem::Defined(ds) => write!(f, "d({})", ds.join(", ")),
            BodyElem::Post(t) => write!(f, "p({t})"),
            BodyElem::Aux(a) => write!(f, "a({a})"),
            BodyElem::AuxUnless1 { x, a } => write!(f, "a({x}, {a})"),
            BodyElem::AuxUnless2 { x, y, a } => write!(f, "a({x}, {y}, {a})"),
            BodyElem::Skeleton { divisor, defined, goal } => write!(f, "skeleton({divisor}, {defined}, {goal})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseRule {
    pub id: String,
    pub head: Head,
    pub body: Vec<BodyElem>,
}

#[derive(Debug, Clone, Default)]
pub struct ParseRules {
    pub rules: Vec<ParseRule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutcome {
    pub result: Term,
    pub defined: Term,
    pub aux: Vec<VarId>,
    /// Every propagator posted while parsing, subexpressions included.
    pub props: Vec<PropId>,
}

/// Working state of one rule application, visible to `Call` hooks.
pub struct ParseEnv {
    plain: bool,
    holes: Vec<(String, Term, Term)>,
    locals: Vec<(String, Term)>,
    result: Option<Term>,
    defined: Option<Term>,
    aux: Vec<VarId>,
    props: Vec<PropId>,
}

impl ParseEnv {
    pub fn set_result(&mut self, t: Term) {
        self.result = Some(t);
    }

    pub fn set_defined(&mut self, t: Term) {
        self.defined = Some(t);
    }

    pub fn is_plain(&self) -> bool {
        self.plain
    }

    fn list(&mut self, t: Term) {
        if let Term::Var(v) = t {
            if !self.aux.contains(&v) {
                self.aux.push(v);
            }
        }
    }

    /// Result term of a name; unknown names become fresh variables.
    fn term(&mut self, s: &mut Solver, name: &str) -> Term {
        if name == "R" {
            return *self.result.get_or_insert_with(|| s.store.new_aux(Domain::full()).into());
        }
        if let Some((_, r, _)) = self.holes.iter().find(|(n, ..)| n == name) {
            return *r;
        }
        self.local(s, name, Domain::full())
    }

    fn local(&mut self, s: &mut Solver, name: &str, d: Domain) -> Term {
        if let Some((_, t)) = self.locals.iter().find(|(n, _)| n == name) {
            return *t;
        }
        let t: Term = s.store.new_aux(d).into();
        self.locals.push((name.to_string(), t));
        self.list(t);
        t
    }

    fn definedness(&mut self, s: &mut Solver, name: &str) -> Term {
        if let Some((_, _, d)) = self.holes.iter().find(|(n, ..)| n == name) {
            return *d;
        }
        self.local(s, name, Domain::boolean())
    }

    fn post(&mut self, s: &mut Solver, p: Propagator) -> Result<(), SolveError> {
        let pid = s.store.post(p)?;
        self.props.push(pid);
        Ok(())
    }
}

/// `d = t1 and ... and tn`, with constant conjuncts folded away.
fn conjunction(s: &mut Solver, env: &mut ParseEnv, terms: Vec<Term>) -> Result<Term, SolveError> {
    let mut open = Vec::new();
    for t in terms {
        match s.store.value(t) {
            Some(0) if matches!(t, Term::Const(_)) => return Ok(Term::Const(0)),
            Some(1) if matches!(t, Term::Const(_)) => {}
            _ if !open.contains(&t) => open.push(t),
            _ => {}
        }
    }
    let Some(mut acc) = open.pop() else {
        return Ok(Term::Const(1));
    };
    while let Some(t) = open.pop() {
        let d: Term = s.store.new_aux(Domain::boolean()).into();
        env.list(d);
        env.post(s, Propagator::BoolAnd(d, t, acc))?;
        acc = d;
    }
    Ok(acc)
}

fn instantiate(s: &mut Solver, env: &mut ParseEnv, t: &PropTemplate<String>) -> Propagator {
    let args: Vec<Term> = t.args.iter().map(|a| env.term(s, a)).collect();
    t.kind.build(&args)
}

fn parse(s: &mut Solver, rules: &ParseRules, e: &Expr, plain: bool) -> Result<ParseOutcome, SolveError> {
    for rule in &rules.rules {
        let holes = match &rule.head {
            Head::Guard { test, .. } if test(e) => Vec::new(),
            Head::Guard { .. } => continue,
            Head::Match(p) => match p.match_expr(e) {
                Some(b) => p.holes().into_iter().map(|h| (h.to_string(), b.expr(h).expect("hole bound").clone())).collect(),
                None => continue,
            },
        };
        let mut env = ParseEnv {
            plain,
            holes: Vec::new(),
            locals: Vec::new(),
            result: None,
            defined: None,
            aux: Vec::new(),
            props: Vec::new(),
        };
        for (name, sub) in holes {
            let o = parse(s, rules, &sub, plain)?;
            env.holes.push((name, o.result, o.defined));
            env.aux.extend(o.aux);
            env.props.extend(o.props);
        }
        for elem in &rule.body {
            match elem {
                BodyElem::Call { hook, .. } => hook(s, e, &mut env)?,
                BodyElem::Defined(names) => {
                    if !plain {
                        let ds = names.iter().map(|n| env.definedness(s, n)).collect();
                        let d = conjunction(s, &mut env, ds)?;
                        env.defined = Some(d);
                    }
                }
                BodyElem::Post(t) => {
                    let p = instantiate(s, &mut env, t);
                    env.post(s, p)?;
                }
                BodyElem::Aux(a) => {
                    let t = env.term(s, a);
                    env.list(t);
                }
                BodyElem::AuxUnless1 { x, a } => {
                    let (x, a) = (env.term(s, x), env.term(s, a));
                    if !s.store.same(x, a) {
                        env.list(a);
                    }
                }
                BodyElem::AuxUnless2 { x, y, a } => {
                    let (x, y, a) = (env.term(s, x), env.term(s, y), env.term(s, a));
                    if !s.store.same(x, a) && !s.store.same(y, a) {
                        env.list(a);
                    }
                }
                BodyElem::Skeleton { divisor, defined, goal } => {
                    let y = env.term(s, divisor);
                    let goal = instantiate(s, &mut env, goal);
                    if plain {
                        env.post(s, Propagator::NeqConst(y, 0))?;
                        env.post(s, goal)?;
                    } else {
                        let d = env.definedness(s, defined);
                        env.post(s, Propagator::Skeleton { divisor: y, defined: d, goal: Box::new(goal), spawned: None })?;
                    }
                }
            }
        }
        let result = env.term(s, "R");
        let defined = env.defined.unwrap_or(Term::Const(1));
        return Ok(ParseOutcome { result, defined, aux: env.aux, props: env.props });
    }
    Err(SolveError::NoParseRule(e.to_string()))
}

/// Decomposes `e` keeping track of definedness.
pub fn parse_reified(s: &mut Solver, e: &Expr) -> Result<ParseOutcome, SolveError> {
    let rules = s.parse_rules().clone();
    parse(s, &rules, e, false)
}

/// Decomposes `e` with every divisor constrained to be nonzero.
pub fn parse_plain(s: &mut Solver, e: &Expr) -> Result<Term, SolveError> {
    let rules = s.parse_rules().clone();
    parse(s, &rules, e, true).map(|o| o.result)
}

/// One side of a reified connective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReifiedSide {
    pub truth: Term,
    pub rel: Option<Rel>,
    pub parts: Option<(ParseOutcome, ParseOutcome)>,
    pub inner_props: Vec<PropId>,
    pub aux: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReifiedPost {
    pub lhs: ReifiedSide,
    pub rhs: ReifiedSide,
    pub connective: PropId,
}

fn reify_side(s: &mut Solver, b: &BoolTerm) -> Result<ReifiedSide, SolveError> {
    match b {
        BoolTerm::Const(v) => {
            Ok(ReifiedSide { truth: Term::Const(*v as i64), rel: None, parts: None, inner_props: vec![], aux: vec![] })
        }
        BoolTerm::Var(name) => {
            let v = s.var(name);
            s.store.tighten(v, &Domain::boolean())?;
            Ok(ReifiedSide { truth: v.into(), rel: None, parts: None, inner_props: vec![], aux: vec![] })
        }
        BoolTerm::Rel(rel, a, b) => {
            let pa = parse_reified(s, a)?;
            let pb = parse_reified(s, b)?;
            let t = s.store.new_aux(Domain::boolean());
            let reif = Propagator::ReifRel {
                truth: t.into(),
                lhs_defined: pa.defined,
                rhs_defined: pb.defined,
                lhs: pa.result,
                rel: *rel,
                rhs: pb.result,
            };
            let pid = s.store.post(reif)?;
            if s.tracing() {
                let d = match (s.store.value(pa.defined), s.store.value(pb.defined)) {
                    (Some(0), _) | (_, Some(0)) => "0",
                    (Some(1), Some(1)) => "1",
                    _ => "unknown",
                };
                s.emit(|| format!("REIFY {rel} D={d}"));
            }
            let mut inner_props = [pa.props.as_slice(), pb.props.as_slice()].concat();
            inner_props.push(pid);
            let mut aux = [pa.aux.as_slice(), pb.aux.as_slice()].concat();
            aux.push(t);
            Ok(ReifiedSide { truth: t.into(), rel: Some(*rel), parts: Some((pa, pb)), inner_props, aux })
        }
    }
}

/// Posts a reified constraint: each relation side gets a truth variable,
/// and the connective links the two truth terms.
pub fn post_reified(s: &mut Solver, c: &ReifConstraint) -> Result<ReifiedPost, SolveError> {
    let (l, r) = c.sides();
    let lhs = reify_side(s, l)?;
    let rhs = reify_side(s, r)?;
    let p = match c {
        ReifConstraint::Iff(..) => Propagator::BoolIff(lhs.truth, rhs.truth),
        ReifConstraint::Impl(..) => Propagator::BoolImpl {
            lhs: lhs.truth,
            rhs: rhs.truth,
            when_irrelevant: Irrelevant { props: rhs.inner_props.clone(), aux: rhs.aux.clone() },
        },
    };
    let connective = s.store.post(p)?;
    Ok(ReifiedPost { lhs, rhs, connective })
}

fn guard_rule(id: &str, test: fn(&Expr) -> bool) -> ParseRule {
    let leaf: ParseHook = Arc::new(|s, e, env| {
        let t = match e {
            Expr::Int(n) => Term::Const(*n),
            Expr::Var(name) => s.var(name).into(),
            _ => unreachable!("leaf guard"),
        };
        env.set_result(t);
        env.set_defined(Term::Const(1));
        Ok(())
    });
    ParseRule {
        id: id.to_string(),
        head: Head::Guard { name: id.to_string(), test: Arc::new(test) },
        body: vec![BodyElem::Call { name: "leaf".to_string(), hook: leaf }],
    }
}

fn template(kind: TemplateKind, args: &[&str]) -> PropTemplate<String> {
    PropTemplate::new(kind, args.iter().map(|a| a.to_string()))
}

fn binary(op: BinOp) -> Head {
    Head::Match(Pattern::bin(op, Pattern::any("A"), Pattern::any("B")))
}

fn total_rule(id: &str, op: BinOp, kind: TemplateKind, args: &[&str]) -> ParseRule {
    ParseRule {
        id: id.to_string(),
        head: binary(op),
        body: vec![
            BodyElem::Aux("R".into()),
            BodyElem::Post(template(kind, args)),
            BodyElem::Defined(vec!["A".into(), "B".into()]),
        ],
    }
}

fn partial_rule(id: &str, op: BinOp, kind: TemplateKind) -> ParseRule {
    ParseRule {
        id: id.to_string(),
        head: binary(op),
        body: vec![
            BodyElem::Aux("R".into()),
            BodyElem::Skeleton { divisor: "B".into(), defined: "D0".into(), goal: template(kind, &["A", "B", "R"]) },
            BodyElem::Defined(vec!["A".into(), "B".into(), "D0".into()]),
        ],
    }
}

/// The shipped parse rules: a representative reconstruction, not a
/// transcription of any published table.
pub fn default_parse_rules() -> ParseRules {
    use TemplateKind as K;
    ParseRules {
        rules: vec![
            guard_rule("integer", |e| matches!(e, Expr::Int(_))),
            guard_rule("variable", |e| matches!(e, Expr::Var(_))),
            total_rule("plus", BinOp::Add, K::Plus, &["A", "B", "R"]),
            // A - B = R as R + B = A
            total_rule("minus", BinOp::Sub, K::Plus, &["R", "B", "A"]),
            total_rule("times", BinOp::Mul, K::Times, &["A", "B", "R"]),
            total_rule("min", BinOp::Min, K::Min, &["A", "B", "R"]),
            total_rule("max", BinOp::Max, K::Max, &["A", "B", "R"]),
            ParseRule {
                id: "abs".into(),
                head: Head::Match(Pattern::abs(Pattern::any("A"))),
                body: vec![
                    BodyElem::Post(template(K::Abs, &["A", "R"])),
                    BodyElem::AuxUnless1 { x: "A".into(), a: "R".into() },
                    BodyElem::Defined(vec!["A".into()]),
                ],
            },
            partial_rule("div", BinOp::Div, K::Div),
            partial_rule("mod", BinOp::Mod, K::Mod),
            partial_rule("rem", BinOp::Rem, K::Rem),
        ],
    }
}
