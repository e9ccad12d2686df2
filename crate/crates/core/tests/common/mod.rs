#![allow(dead_code)]

use fdsolve::expr::{Assignment, BinOp, BoolTerm, Expr, ReifConstraint, Rel};
use fdsolve::propagators::{Irrelevant, Propagator};
use fdsolve::{Domain, Store, Term, VarId};
use rand::rngs::StdRng;
use rand::Rng;

pub const LO: i64 = -3;
pub const HI: i64 = 3;

/// Every interval `a..b` with `lo <= a <= b <= hi`.
pub fn intervals(lo: i64, hi: i64) -> Vec<Domain> {
    let mut out = Vec::new();
    for a in lo..=hi {
        for b in a..=hi {
            out.push(Domain::interval(a, b));
        }
    }
    out
}

pub fn random_subset(rng: &mut StdRng, lo: i64, hi: i64) -> Domain {
    loop {
        let d = Domain::from_values((lo..=hi).filter(|_| rng.gen_bool(0.5)));
        if !d.is_empty() {
            return d;
        }
    }
}

/// A random non-empty subset of `d`.
pub fn random_subdomain(rng: &mut StdRng, d: &Domain) -> Domain {
    let vals: Vec<i64> = d.values().collect();
    loop {
        let sub = Domain::from_values(vals.iter().copied().filter(|_| rng.gen_bool(0.6)));
        if !sub.is_empty() {
            return sub;
        }
    }
}

pub fn product(doms: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for d in doms {
        out = out.into_iter().flat_map(|t| d.iter().map(move |&v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arg {
    Var(usize),
    Const(i64),
}

pub struct Kind {
    pub name: String,
    pub arity: usize,
    /// Positions that range over 0/1.
    pub bools: Vec<usize>,
    pub build: Box<dyn Fn(&[Term]) -> Propagator>,
}

impl Kind {
    fn new(name: &str, arity: usize, bools: &[usize], build: impl Fn(&[Term]) -> Propagator + 'static) -> Self {
        Kind { name: name.to_string(), arity, bools: bools.to_vec(), build: Box::new(build) }
    }

    /// Argument layouts: all distinct variables, repeated variables, and a
    /// constant in one position.
    pub fn layouts(&self) -> Vec<Vec<Arg>> {
        use Arg::*;
        let distinct: Vec<Arg> = (0..self.arity).map(Var).collect();
        let mut out = vec![distinct.clone()];
        match self.arity {
            1 => {}
            2 => out.push(vec![Var(0), Var(0)]),
            3 => {
                out.extend([
                    vec![Var(0), Var(0), Var(1)],
                    vec![Var(0), Var(1), Var(0)],
                    vec![Var(0), Var(1), Var(1)],
                    vec![Var(0), Var(0), Var(0)],
                ]);
            }
            _ => {}
        }
        if self.arity <= 3 {
            for slot in 0..self.arity {
                let consts: &[i64] = if self.bools.contains(&slot) { &[0, 1] } else { &[-2, 0, 3] };
                for &c in consts {
                    let mut l: Vec<Arg> = Vec::new();
                    let mut next = 0;
                    for i in 0..self.arity {
                        if i == slot {
                            l.push(Const(c));
                        } else {
                            l.push(Var(next));
                            next += 1;
                        }
                    }
                    out.push(l);
                }
            }
        } else if self.name.starts_with("reif_rel") {
            out.push(vec![Var(0), Var(1), Var(2), Var(3), Var(3)]);
            out.push(vec![Var(0), Const(1), Const(1), Var(1), Var(2)]);
            out.push(vec![Var(0), Var(1), Var(2), Const(0), Var(3)]);
        } else if self.name.starts_with("skeleton") {
            out.push(vec![Const(0), Var(0), Var(1), Var(2)]);
            out.push(vec![Const(2), Var(0), Var(1), Var(2)]);
            out.push(vec![Var(0), Var(1), Var(2), Var(0)]);
        }
        out
    }
}

pub fn var_count(layout: &[Arg]) -> usize {
    layout.iter().filter_map(|a| if let Arg::Var(i) = a { Some(i + 1) } else { None }).max().unwrap_or(0)
}

/// Whether variable `v` of `layout` sits in a 0/1 position.
pub fn is_bool_var(kind: &Kind, layout: &[Arg], v: usize) -> bool {
    layout.iter().enumerate().any(|(i, a)| *a == Arg::Var(v) && kind.bools.contains(&i))
}

pub fn kinds() -> Vec<Kind> {
    let mut ks = vec![
        Kind::new("eq", 2, &[], |t| Propagator::Eq(t[0], t[1])),
        Kind::new("neq", 2, &[], |t| Propagator::Neq(t[0], t[1])),
        Kind::new("le", 2, &[], |t| Propagator::Le(t[0], t[1])),
        Kind::new("lt", 2, &[], |t| Propagator::Lt(t[0], t[1])),
        Kind::new("plus", 3, &[], |t| Propagator::Plus(t[0], t[1], t[2])),
        Kind::new("times", 3, &[], |t| Propagator::Times(t[0], t[1], t[2])),
        Kind::new("absval", 2, &[], |t| Propagator::Abs(t[0], t[1])),
        Kind::new("absdiff", 3, &[], |t| Propagator::AbsDiff(t[0], t[1], t[2])),
        Kind::new("divp", 3, &[], |t| Propagator::Div(t[0], t[1], t[2])),
        Kind::new("modp", 3, &[], |t| Propagator::Mod(t[0], t[1], t[2])),
        Kind::new("remp", 3, &[], |t| Propagator::Rem(t[0], t[1], t[2])),
        Kind::new("minp", 3, &[], |t| Propagator::Min(t[0], t[1], t[2])),
        Kind::new("maxp", 3, &[], |t| Propagator::Max(t[0], t[1], t[2])),
        Kind::new("bool_and", 3, &[0, 1, 2], |t| Propagator::BoolAnd(t[0], t[1], t[2])),
        Kind::new("bool_iff", 2, &[0, 1], |t| Propagator::BoolIff(t[0], t[1])),
        Kind::new("bool_impl", 2, &[0, 1], |t| Propagator::BoolImpl {
            lhs: t[0],
            rhs: t[1],
            when_irrelevant: Irrelevant::default(),
        }),
    ];
    for k in [-1, 0, 2] {
        ks.push(Kind::new(&format!("neq_const({k})"), 1, &[], move |t| Propagator::NeqConst(t[0], k)));
    }
    for rel in Rel::ALL {
        ks.push(Kind::new(&format!("reif_rel({rel})"), 5, &[0, 1, 2], move |t| Propagator::ReifRel {
            truth: t[0],
            lhs_defined: t[1],
            rhs_defined: t[2],
            lhs: t[3],
            rel,
            rhs: t[4],
        }));
    }
    type Goal = fn(Term, Term, Term) -> Propagator;
    let goals: [(&str, Goal); 3] = [("div", Propagator::Div), ("mod", Propagator::Mod), ("rem", Propagator::Rem)];
    for (name, goal) in goals {
        ks.push(Kind::new(&format!("skeleton({name})"), 4, &[1], move |t| Propagator::Skeleton {
            divisor: t[0],
            defined: t[1],
            goal: Box::new(goal(t[2], t[0], t[3])),
            spawned: None,
        }));
    }
    ks
}

fn terms(vs: &[VarId], layout: &[Arg]) -> Vec<Term> {
    layout
        .iter()
        .map(|a| match a {
            Arg::Var(i) => vs[*i].into(),
            Arg::Const(k) => Term::Const(*k),
        })
        .collect()
}

/// Domains after posting the propagator, or `None` on failure.
pub fn fixpoint(kind: &Kind, layout: &[Arg], doms: &[Domain]) -> Option<Vec<Domain>> {
    let mut s = Store::new();
    let vs: Vec<VarId> = doms.iter().map(|d| s.new_var(d.clone(), false).unwrap()).collect();
    s.post((kind.build)(&terms(&vs, layout))).ok()?;
    Some(vs.iter().map(|&v| s.domain(v).clone()).collect())
}

pub fn ground_ok(kind: &Kind, layout: &[Arg], tuple: &[i64]) -> bool {
    let mut s = Store::new();
    let vs: Vec<VarId> = tuple.iter().map(|_| s.new_var(Domain::full(), false).unwrap()).collect();
    let p = (kind.build)(&terms(&vs, layout));
    p.ground_check(&|v: VarId| tuple[v.index()])
}

/// Soundness and ground completeness of one kind under one layout over
/// the given domain tuples. Returns a description of each violation.
pub fn check_kind(kind: &Kind, layout: &[Arg], cases: &[Vec<Domain>]) -> Vec<String> {
    let n = var_count(layout);
    let cube = product(&vec![(LO..=HI).collect::<Vec<_>>(); n]);
    let mut bad = Vec::new();
    let sat: Vec<&Vec<i64>> = cube.iter().filter(|t| ground_ok(kind, layout, t)).collect();
    for t in &cube {
        let doms: Vec<Domain> = t.iter().map(|&v| Domain::singleton(v)).collect();
        let accepted = fixpoint(kind, layout, &doms).is_some();
        if accepted != sat.contains(&t) {
            bad.push(format!("{} {:?}: ground {:?} accepted={accepted}", kind.name, layout, t));
        }
    }
    for doms in cases {
        let after = fixpoint(kind, layout, doms);
        for t in sat.iter().filter(|t| t.iter().zip(doms).all(|(v, d)| d.contains(*v))) {
            let kept = after.as_ref().is_some_and(|a| t.iter().zip(a).all(|(v, d)| d.contains(*v)));
            if !kept {
                bad.push(format!("{} {:?}: {:?} pruned solution {:?}", kind.name, layout, doms, t));
                break;
            }
        }
    }
    bad
}

/// Domain tuples for a layout: every interval tuple when there are at
/// most three variables, plus random subsets.
pub fn cases(kind: &Kind, layout: &[Arg], rng: &mut StdRng, random: usize) -> Vec<Vec<Domain>> {
    let n = var_count(layout);
    let mut out = Vec::new();
    if n <= 3 {
        let ivs = intervals(LO, HI);
        out = product(&vec![(0..ivs.len() as i64).collect::<Vec<_>>(); n])
            .into_iter()
            .map(|ix| ix.into_iter().map(|i| ivs[i as usize].clone()).collect())
            .collect();
    }
    for _ in 0..random {
        out.push(
            (0..n)
                .map(|v| {
                    if is_bool_var(kind, layout, v) && rng.gen_bool(0.85) {
                        [Domain::singleton(0), Domain::singleton(1), Domain::boolean()][rng.gen_range(0..3)].clone()
                    } else {
                        random_subset(rng, LO, HI)
                    }
                })
                .collect(),
        );
    }
    out
}

pub fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.6) {
            Expr::var(["X", "Y", "Z"][rng.gen_range(0..3)])
        } else {
            Expr::Int(rng.gen_range(-3..=3))
        };
    }
    match rng.gen_range(0..10) {
        0 => Expr::abs(random_expr(rng, depth - 1)),
        1 => Expr::abs(Expr::bin(BinOp::Sub, random_expr(rng, depth - 1), random_expr(rng, depth - 1))),
        _ => {
            let op = BinOp::ALL[rng.gen_range(0..BinOp::ALL.len())];
            Expr::bin(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
        }
    }
}

pub fn random_constraint(rng: &mut StdRng) -> (Rel, Expr, Expr) {
    let rel = Rel::ALL[rng.gen_range(0..Rel::ALL.len())];
    let lhs = random_expr(rng, 3);
    let rhs = random_expr(rng, 2);
    if rng.gen_bool(0.2) {
        (rel, Expr::Int(rng.gen_range(-3..=3)), lhs)
    } else {
        (rel, lhs, rhs)
    }
}

pub fn assignment(names: &[&str], values: &[i64]) -> Assignment {
    names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect()
}

/// Reified constraint templates over `X`, `Y`, `Z` and the truth variable
/// `B`.
pub fn reified_templates() -> Vec<ReifConstraint> {
    use BinOp::*;
    let (x, y, z) = (Expr::var("X"), Expr::var("Y"), Expr::var("Z"));
    let ops = [Add, Sub, Mul, Div, Mod, Rem];
    let mut sides: Vec<(Expr, Expr)> = Vec::new();
    for op in ops {
        sides.push((Expr::bin(op, x.clone(), y.clone()), z.clone()));
        sides.push((Expr::abs(Expr::bin(op, x.clone(), y.clone())), z.clone()));
        for op2 in ops {
            sides.push((Expr::bin(op2, Expr::bin(op, x.clone(), y.clone()), z.clone()), Expr::Int(0)));
            sides.push((Expr::bin(op, x.clone(), y.clone()), Expr::bin(op2, y.clone(), z.clone())));
        }
    }
    sides.push((Expr::abs(x.clone()), y.clone()));
    sides.push((x.clone(), y.clone()));
    sides.push((x.clone(), x.clone()));
    let b = || BoolTerm::Var("B".into());
    let mut out = Vec::new();
    for (l, r) in sides {
        for rel in Rel::ALL {
            let t = BoolTerm::Rel(rel, l.clone(), r.clone());
            out.push(ReifConstraint::Iff(t.clone(), b()));
            out.push(ReifConstraint::Impl(b(), t.clone()));
            out.push(ReifConstraint::Impl(t, b()));
        }
    }
    out
}
