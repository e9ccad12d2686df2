//! Propagator library.
//!
//! Every propagator is sound (never removes a value that takes part in a
//! solution of its ground relation) and decides ground inputs exactly using
//! the conventions in [`crate::arith`]. Strengths:
//!
//! | kind | pruning |
//! |------|---------|
//! | `Eq` | aliasing (domain intersection) |
//! | `Le`, `Lt` | bounds |
//! | `Neq`, `NeqConst` | value removal once one side is fixed |
//! | `Plus`, `Min`, `Max` | bounds |
//! | `Times` | bounds with sign cases |
//! | `Abs` | full domain image |
//! | `AbsDiff` | domain consistency while every domain has at most 256 values, bounds otherwise |
//! | `Div`, `Mod`, `Rem` | checking, plus result bounds per divisor sign |
//! | Boolean and reified | full consistency on 0/1 |

use crate::arith;
use crate::domain::{Domain, Size};
use crate::engine::{PropId, PropResult, Store, Term, VarId};
use crate::expr::Rel;

/// Above this many values per domain `AbsDiff` falls back to bounds.
pub const ABSDIFF_DOMAIN_CAP: u128 = 256;

/// Propagators and auxiliary variables that become irrelevant together,
/// such as the inside of an implication's consequent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Irrelevant {
    pub props: Vec<PropId>,
    pub aux: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Propagator {
    Eq(Term, Term),
    Neq(Term, Term),
    Le(Term, Term),
    Lt(Term, Term),
    NeqConst(Term, i64),
    /// `x + y = z`
    Plus(Term, Term, Term),
    /// `x * y = z`
    Times(Term, Term, Term),
    /// `|x| = z`
    Abs(Term, Term),
    /// `|x - y| = c`
    AbsDiff(Term, Term, Term),
    /// `x / y = z`, truncating
    Div(Term, Term, Term),
    /// `x mod y = z`, floored
    Mod(Term, Term, Term),
    /// `x rem y = z`, truncated
    Rem(Term, Term, Term),
    /// `min(x, y) = z`
    Min(Term, Term, Term),
    /// `max(x, y) = z`
    Max(Term, Term, Term),
    /// `d = a and b` over 0/1
    BoolAnd(Term, Term, Term),
    BoolIff(Term, Term),
    /// `lhs -> rhs`; once `lhs` is 0 the consequent's internals are discarded.
    BoolImpl { lhs: Term, rhs: Term, when_irrelevant: Irrelevant },
    /// `truth = 1` iff both sides are defined and `lhs rel rhs` holds.
    ReifRel { truth: Term, lhs_defined: Term, rhs_defined: Term, lhs: Term, rel: Rel, rhs: Term },
    /// Guards a partial operation on its divisor: divisor nonzero posts
    /// `goal` and sets `defined = 1`; divisor zero sets `defined = 0`;
    /// `defined = 1` removes 0 from the divisor.
    Skeleton { divisor: Term, defined: Term, goal: Box<Propagator>, spawned: Option<PropId> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Active,
    Entailed,
}

impl Propagator {
    /// Base propagator for `a rel b`; `>` and `>=` are flipped.
    pub fn relation(rel: Rel, a: Term, b: Term) -> Propagator {
        match rel {
            Rel::Eq => Propagator::Eq(a, b),
            Rel::Neq => Propagator::Neq(a, b),
            Rel::Lt => Propagator::Lt(a, b),
            Rel::Le => Propagator::Le(a, b),
            Rel::Gt => Propagator::Lt(b, a),
            Rel::Ge => Propagator::Le(b, a),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Propagator::Eq(..) => "eq",
            Propagator::Neq(..) => "neq",
            Propagator::Le(..) => "le",
            Propagator::Lt(..) => "lt",
            Propagator::NeqConst(..) => "neq_const",
            Propagator::Plus(..) => "plus",
            Propagator::Times(..) => "times",
            Propagator::Abs(..) => "absval",
            Propagator::AbsDiff(..) => "absdiff",
            Propagator::Div(..) => "divp",
            Propagator::Mod(..) => "modp",
            Propagator::Rem(..) => "remp",
            Propagator::Min(..) => "minp",
            Propagator::Max(..) => "maxp",
            Propagator::BoolAnd(..) => "bool_and",
            Propagator::BoolIff(..) => "bool_iff",
            Propagator::BoolImpl { .. } => "bool_impl",
            Propagator::ReifRel { .. } => "reif_rel",
            Propagator::Skeleton { .. } => "skeleton",
        }
    }

    fn terms(&self) -> Vec<Term> {
        use Propagator::*;
        match self {
            Eq(a, b) | Neq(a, b) | Le(a, b) | Lt(a, b) | Abs(a, b) | BoolIff(a, b) => vec![*a, *b],
            NeqConst(a, _) => vec![*a],
            Plus(a, b, c) | Times(a, b, c) | AbsDiff(a, b, c) | Div(a, b, c) | Mod(a, b, c)
            | Rem(a, b, c) | Min(a, b, c) | Max(a, b, c) | BoolAnd(a, b, c) => vec![*a, *b, *c],
            BoolImpl { lhs, rhs, .. } => vec![*lhs, *rhs],
            ReifRel { truth, lhs_defined, rhs_defined, lhs, rhs, .. } => {
                vec![*truth, *lhs_defined, *rhs_defined, *lhs, *rhs]
            }
            Skeleton { divisor, defined, .. } => vec![*divisor, *defined],
        }
    }

    /// Variables whose changes wake this propagator.
    pub fn vars(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn spawned(&self) -> Option<PropId> {
        match self {
            Propagator::Skeleton { spawned, .. } => *spawned,
            _ => None,
        }
    }

    /// Prunes the store toward this propagator's relation.
    pub fn run(&self, pid: PropId, s: &mut Store) -> PropResult<Status> {
        use Propagator::*;
        match self {
            Eq(a, b) => {
                s.unify_terms(*a, *b)?;
                Ok(Status::Entailed)
            }
            Neq(a, b) => relational(s, Rel::Neq, *a, *b),
            Le(a, b) => relational(s, Rel::Le, *a, *b),
            Lt(a, b) => relational(s, Rel::Lt, *a, *b),
            NeqConst(a, k) => {
                s.remove_value(*a, *k)?;
                Ok(Status::Entailed)
            }
            Plus(x, y, z) => plus(s, *x, *y, *z),
            Times(x, y, z) => times(s, *x, *y, *z),
            Abs(x, z) => abs(s, *x, *z),
            AbsDiff(x, y, c) => absdiff(s, *x, *y, *c),
            Div(x, y, z) => div(s, *x, *y, *z),
            Mod(x, y, z) => modulo(s, *x, *y, *z),
            Rem(x, y, z) => rem(s, *x, *y, *z),
            Min(x, y, z) => min_max(s, *x, *y, *z, false),
            Max(x, y, z) => min_max(s, *x, *y, *z, true),
            BoolAnd(d, a, b) => bool_and(s, *d, *a, *b),
            BoolIff(a, b) => {
                booleans(s, &[*a, *b])?;
                if s.same(*a, *b) {
                    return Ok(Status::Entailed);
                }
                match (s.value(*a), s.value(*b)) {
                    (Some(v), _) => s.fix(*b, v)?,
                    (_, Some(v)) => s.fix(*a, v)?,
                    _ => return Ok(Status::Active),
                };
                Ok(Status::Entailed)
            }
            BoolImpl { lhs, rhs, when_irrelevant } => {
                booleans(s, &[*lhs, *rhs])?;
                if s.value(*rhs) == Some(0) {
                    s.fix(*lhs, 0)?;
                }
                match (s.value(*lhs), s.value(*rhs)) {
                    (Some(0), _) => {
                        s.discard(&when_irrelevant.props, &when_irrelevant.aux);
                        Ok(Status::Entailed)
                    }
                    (_, Some(1)) => Ok(Status::Entailed),
                    (Some(1), _) => {
                        s.fix(*rhs, 1)?;
                        Ok(Status::Entailed)
                    }
                    _ => Ok(Status::Active),
                }
            }
            ReifRel { truth, lhs_defined, rhs_defined, lhs, rel, rhs } => {
                reif_rel(s, *truth, *lhs_defined, *rhs_defined, *lhs, *rel, *rhs)
            }
            Skeleton { divisor, defined, goal, spawned } => {
                booleans(s, &[*defined])?;
                if spawned.is_some() {
                    return Ok(Status::Entailed);
                }
                if s.value(*divisor) == Some(0) {
                    s.fix(*defined, 0)?;
                    return Ok(Status::Entailed);
                }
                if s.value(*defined) == Some(1) {
                    s.remove_value(*divisor, 0)?;
                }
                if s.dom(*divisor).contains(0) {
                    return Ok(Status::Active);
                }
                let child = s.add_propagator((**goal).clone());
                s.update_propagator(
                    pid,
                    Skeleton { divisor: *divisor, defined: *defined, goal: goal.clone(), spawned: Some(child) },
                );
                s.fix(*defined, 1)?;
                Ok(Status::Entailed)
            }
        }
    }

    /// Whether a complete assignment satisfies this propagator's relation.
    pub fn ground_check(&self, value: &dyn Fn(VarId) -> i64) -> bool {
        use Propagator::*;
        let v = |t: &Term| match *t {
            Term::Var(x) => value(x),
            Term::Const(k) => k,
        };
        let is_bool = |t: &Term| matches!(v(t), 0 | 1);
        let opt = |r: Result<i64, arith::ArithError>, z: &Term| r.is_ok_and(|q| q == v(z));
        match self {
            Eq(a, b) => v(a) == v(b),
            Neq(a, b) => v(a) != v(b),
            Le(a, b) => v(a) <= v(b),
            Lt(a, b) => v(a) < v(b),
            NeqConst(a, k) => v(a) != *k,
            Plus(x, y, z) => v(x).checked_add(v(y)) == Some(v(z)),
            Times(x, y, z) => v(x).checked_mul(v(y)) == Some(v(z)),
            Abs(x, z) => v(x).checked_abs() == Some(v(z)),
            AbsDiff(x, y, c) => v(x).checked_sub(v(y)).and_then(i64::checked_abs) == Some(v(c)),
            Div(x, y, z) => opt(arith::div(v(x), v(y)), z),
            Mod(x, y, z) => opt(arith::modulo(v(x), v(y)), z),
            Rem(x, y, z) => opt(arith::rem(v(x), v(y)), z),
            Min(x, y, z) => v(x).min(v(y)) == v(z),
            Max(x, y, z) => v(x).max(v(y)) == v(z),
            BoolAnd(d, a, b) => {
                is_bool(d) && is_bool(a) && is_bool(b) && (v(d) == 1) == (v(a) == 1 && v(b) == 1)
            }
            BoolIff(a, b) => is_bool(a) && is_bool(b) && v(a) == v(b),
            BoolImpl { lhs, rhs, .. } => is_bool(lhs) && is_bool(rhs) && v(lhs) <= v(rhs),
            ReifRel { truth, lhs_defined, rhs_defined, lhs, rel, rhs } => {
                [truth, lhs_defined, rhs_defined].into_iter().all(is_bool)
                    && (v(truth) == 1)
                        == (v(lhs_defined) == 1 && v(rhs_defined) == 1 && rel.holds(v(lhs), v(rhs)))
            }
            Skeleton { divisor, defined, goal, .. } => {
                is_bool(defined)
                    && (v(defined) == 1) == (v(divisor) != 0)
                    && (v(divisor) == 0 || goal.ground_check(value))
            }
        }
    }
}

fn booleans(s: &mut Store, ts: &[Term]) -> PropResult<()> {
    let b = Domain::boolean();
    for &t in ts {
        s.tighten_term(t, &b)?;
    }
    Ok(())
}

/// Whether `a rel b` is entailed (`Some(true)`), disentailed
/// (`Some(false)`) or open under the current domains.
pub(crate) fn rel_status(s: &Store, rel: Rel, a: Term, b: Term) -> Option<bool> {
    let (a, b, rel) = match rel {
        Rel::Gt => (b, a, Rel::Lt),
        Rel::Ge => (b, a, Rel::Le),
        r => (a, b, r),
    };
    let same = s.same(a, b);
    let (alo, ahi) = s.wide_bounds(a);
    let (blo, bhi) = s.wide_bounds(b);
    match rel {
        Rel::Eq | Rel::Neq => {
            let eq = if same {
                Some(true)
            } else if let (Some(x), Some(y)) = (s.value(a), s.value(b)) {
                Some(x == y)
            } else if s.dom(a).intersect(&s.dom(b)).is_empty() {
                Some(false)
            } else {
                None
            };
            if rel == Rel::Eq {
                eq
            } else {
                eq.map(|e| !e)
            }
        }
        Rel::Le if same || ahi <= blo => Some(true),
        Rel::Le if alo > bhi => Some(false),
        Rel::Lt if same || alo >= bhi => Some(false),
        Rel::Lt if ahi < blo => Some(true),
        _ => None,
    }
}

/// Domain-level pruning for `a rel b` (no aliasing).
pub(crate) fn rel_prune(s: &mut Store, rel: Rel, a: Term, b: Term) -> PropResult<()> {
    let (a, b, rel) = match rel {
        Rel::Gt => (b, a, Rel::Lt),
        Rel::Ge => (b, a, Rel::Le),
        r => (a, b, r),
    };
    match rel {
        Rel::Eq => {
            let both = s.dom(a).intersect(&s.dom(b));
            s.tighten_term(a, &both)?;
            s.tighten_term(b, &both)?;
        }
        Rel::Neq => {
            if s.same(a, b) {
                return Err(crate::engine::Failure);
            }
            if let Some(v) = s.value(a) {
                s.remove_value(b, v)?;
            }
            if let Some(v) = s.value(b) {
                s.remove_value(a, v)?;
            }
        }
        Rel::Le | Rel::Lt => {
            if rel == Rel::Lt && s.same(a, b) {
                return Err(crate::engine::Failure);
            }
            let gap = if rel == Rel::Lt { 1 } else { 0 };
            let (_, bhi) = s.wide_bounds(b);
            s.tighten_range(a, i128::MIN, bhi.saturating_sub(gap))?;
            let (alo, _) = s.wide_bounds(a);
            s.tighten_range(b, alo.saturating_add(gap), i128::MAX)?;
        }
        Rel::Gt | Rel::Ge => unreachable!("normalized above"),
    }
    Ok(())
}

fn relational(s: &mut Store, rel: Rel, a: Term, b: Term) -> PropResult<Status> {
    rel_prune(s, rel, a, b)?;
    Ok(if rel_status(s, rel, a, b) == Some(true) { Status::Entailed } else { Status::Active })
}

fn all_fixed(s: &Store, ts: &[Term]) -> bool {
    ts.iter().all(|&t| s.value(t).is_some())
}

fn fixed_status(s: &Store, ts: &[Term]) -> Status {
    if all_fixed(s, ts) {
        Status::Entailed
    } else {
        Status::Active
    }
}

fn plus(s: &mut Store, x: Term, y: Term, z: Term) -> PropResult<Status> {
    // x + y = x without a bounds-stepping loop
    for (a, other) in [(x, y), (y, x)] {
        if s.same(a, z) {
            s.fix(other, 0)?;
            return Ok(Status::Entailed);
        }
    }
    let (xl, xh) = s.wide_bounds(x);
    let (yl, yh) = s.wide_bounds(y);
    s.tighten_range(z, xl.saturating_add(yl), xh.saturating_add(yh))?;
    let (zl, zh) = s.wide_bounds(z);
    s.tighten_range(x, zl.saturating_sub(yh), zh.saturating_sub(yl))?;
    let (xl, xh) = s.wide_bounds(x);
    s.tighten_range(y, zl.saturating_sub(xh), zh.saturating_sub(xl))?;
    Ok(fixed_status(s, &[x, y, z]))
}

fn is_inf(b: i128) -> bool {
    b == i128::MIN || b == i128::MAX
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// The strictly negative and strictly positive parts of a domain.
fn sign_parts(d: &Domain) -> impl Iterator<Item = (i128, i128)> {
    [d.at_most(-1), d.at_least(1)]
        .into_iter()
        .filter_map(|p| p.wide_bounds())
}

/// Range of `x` for `x * y = z` given `z` and a fixed-sign range of `y`,
/// or `None` when unbounded.
fn quotient_range(z: (i128, i128), y: (i128, i128)) -> Option<(i128, i128)> {
    let (lo, hi) = [z.0, z.1]
        .into_iter()
        .flat_map(|zb| [y.0, y.1].into_iter().map(move |yb| (zb, yb)))
        .try_fold((i128::MAX, i128::MIN), |(lo, hi), (zb, yb)| {
            if is_inf(zb) {
                return None;
            }
            // z / y tends to 0 as y grows without bound
            let (c, f) = if is_inf(yb) { (0, 0) } else { (ceil_div(zb, yb), floor_div(zb, yb)) };
            Some((lo.min(c), hi.max(f)))
        })?;
    Some((lo, hi))
}

fn times(s: &mut Store, x: Term, y: Term, z: Term) -> PropResult<Status> {
    let (xl, xh) = s.wide_bounds(x);
    let (yl, yh) = s.wide_bounds(y);
    let corners = [xl.saturating_mul(yl), xl.saturating_mul(yh), xh.saturating_mul(yl), xh.saturating_mul(yh)];
    let lo = corners.iter().copied().min().unwrap_or(i128::MIN);
    let hi = corners.iter().copied().max().unwrap_or(i128::MAX);
    s.tighten_range(z, lo, hi)?;
    if !s.dom(z).contains(0) {
        s.remove_value(x, 0)?;
        s.remove_value(y, 0)?;
    }
    for (target, other) in [(x, y), (y, x)] {
        let od = s.dom(other);
        if od.contains(0) {
            // other = 0 and z = 0 leaves target free
            continue;
        }
        let zb = s.wide_bounds(z);
        let mut allowed = Domain::empty();
        let mut bounded = true;
        for part in sign_parts(&od) {
            match quotient_range(zb, part) {
                Some((lo, hi)) => allowed = allowed.union(&Domain::range_wide(lo, hi)),
                None => bounded = false,
            }
        }
        if bounded {
            s.tighten_term(target, &allowed)?;
        }
    }
    Ok(fixed_status(s, &[x, y, z]))
}

/// `{|v| : v in d}`
fn abs_image(d: &Domain) -> Domain {
    d.at_least(0).union(&d.at_most(-1).negate())
}

fn abs(s: &mut Store, x: Term, z: Term) -> PropResult<Status> {
    s.tighten_term(z, &abs_image(&s.dom(x)))?;
    let zd = s.dom(z);
    s.tighten_term(x, &zd.union(&zd.negate()))?;
    if let (Term::Var(xv), Term::Var(zv)) = (x, z) {
        if s.wide_bounds(x).0 >= 0 {
            s.unify(xv, zv)?;
            return Ok(Status::Entailed);
        }
    }
    Ok(fixed_status(s, &[x, z]))
}

fn small(d: &Domain) -> bool {
    matches!(d.count(), Size::Finite(n) if n <= ABSDIFF_DOMAIN_CAP)
}

fn contains_wide(d: &Domain, v: i128) -> bool {
    i64::try_from(v).is_ok_and(|v| d.contains(v))
}

fn absdiff(s: &mut Store, x: Term, y: Term, c: Term) -> PropResult<Status> {
    s.tighten_range(c, 0, i128::MAX)?;
    let (xd, yd, cd) = (s.dom(x), s.dom(y), s.dom(c));
    if small(&xd) && small(&yd) && small(&cd) {
        let supported = |a: i64, k: i64, yd: &Domain| {
            contains_wide(yd, a as i128 - k as i128) || contains_wide(yd, a as i128 + k as i128)
        };
        let c_new = Domain::from_values(cd.values().filter(|&k| xd.values().any(|a| supported(a, k, &yd))));
        let x_new = Domain::from_values(xd.values().filter(|&a| c_new.values().any(|k| supported(a, k, &yd))));
        let y_new = Domain::from_values(
            yd.values()
                .filter(|&b| x_new.values().any(|a| contains_wide(&c_new, (a as i128 - b as i128).abs()))),
        );
        s.tighten_term(c, &c_new)?;
        s.tighten_term(x, &x_new)?;
        s.tighten_term(y, &y_new)?;
    } else {
        let (xl, xh) = s.wide_bounds(x);
        let (yl, yh) = s.wide_bounds(y);
        let (dl, dh) = (xl.saturating_sub(yh), xh.saturating_sub(yl));
        let (lo, hi) = if dl >= 0 {
            (dl, dh)
        } else if dh <= 0 {
            (dh.saturating_neg(), dl.saturating_neg())
        } else {
            (0, dh.max(dl.saturating_neg()))
        };
        s.tighten_range(c, lo, hi)?;
        let (_, ch) = s.wide_bounds(c);
        s.tighten_range(x, yl.saturating_sub(ch), yh.saturating_add(ch))?;
        let (xl, xh) = s.wide_bounds(x);
        s.tighten_range(y, xl.saturating_sub(ch), xh.saturating_add(ch))?;
    }
    Ok(fixed_status(s, &[x, y, c]))
}

/// Fixes the result when dividend and divisor are known.
fn ground_result(
    s: &mut Store,
    x: Term,
    y: Term,
    z: Term,
    f: fn(i128, i128) -> Option<i128>,
) -> PropResult<bool> {
    if let (Some(a), Some(b)) = (s.value(x), s.value(y)) {
        let r = f(a.into(), b.into()).expect("divisor is nonzero");
        s.tighten_range(z, r, r)?;
        return Ok(true);
    }
    Ok(false)
}

fn div(s: &mut Store, x: Term, y: Term, z: Term) -> PropResult<Status> {
    s.remove_value(y, 0)?;
    if ground_result(s, x, y, z, arith::div_wide)? {
        return Ok(fixed_status(s, &[x, y, z]));
    }
    let yd = s.dom(y);
    let (xl, xh) = s.wide_bounds(x);
    if !is_inf(xl) && !is_inf(xh) {
        let mut allowed = Domain::empty();
        for (pl, ph) in sign_parts(&yd) {
            let qs = [xl, xh].into_iter().flat_map(|xb| {
                [pl, ph].into_iter().map(move |yb| if is_inf(yb) { 0 } else { xb / yb })
            });
            let (lo, hi) = qs.fold((i128::MAX, i128::MIN), |(lo, hi), q| (lo.min(q), hi.max(q)));
            allowed = allowed.union(&Domain::range_wide(lo, hi));
        }
        s.tighten_term(z, &allowed)?;
    }
    let (zl, zh) = s.wide_bounds(z);
    let parts: Vec<(i128, i128)> = sign_parts(&yd).collect();
    if !is_inf(zl) && !is_inf(zh) && parts.iter().all(|&(a, b)| !is_inf(a) && !is_inf(b)) {
        let zs: Vec<i128> = [zl, zh]
            .into_iter()
            .chain([-1, 0, 1].into_iter().filter(|q| (zl..=zh).contains(q)))
            .collect();
        let mut allowed = Domain::empty();
        for (pl, ph) in parts {
            let (mut lo, mut hi) = (i128::MAX, i128::MIN);
            for &q in &zs {
                for yb in [pl, ph] {
                    // x = q*y + r with |r| < |y| and r signed like x
                    let p = q * yb;
                    let m = yb.abs() - 1;
                    let (l, h) = match p.signum() {
                        1 => (p, p + m),
                        -1 => (p - m, p),
                        _ => (-m, m),
                    };
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
            }
            allowed = allowed.union(&Domain::range_wide(lo, hi));
        }
        s.tighten_term(x, &allowed)?;
    }
    Ok(fixed_status(s, &[x, y, z]))
}

fn modulo(s: &mut Store, x: Term, y: Term, z: Term) -> PropResult<Status> {
    s.remove_value(y, 0)?;
    if ground_result(s, x, y, z, arith::mod_wide)? {
        return Ok(fixed_status(s, &[x, y, z]));
    }
    let (xl, xh) = s.wide_bounds(x);
    let mut allowed = Domain::empty();
    for (pl, ph) in sign_parts(&s.dom(y)) {
        let range = if pl > 0 {
            let hi = ph.saturating_sub(1);
            (0, if xl >= 0 { hi.min(xh) } else { hi })
        } else {
            let lo = pl.saturating_add(1);
            (if xh <= 0 { lo.max(xl) } else { lo }, 0)
        };
        allowed = allowed.union(&Domain::range_wide(range.0, range.1));
    }
    s.tighten_term(z, &allowed)?;
    Ok(fixed_status(s, &[x, y, z]))
}

fn rem(s: &mut Store, x: Term, y: Term, z: Term) -> PropResult<Status> {
    s.remove_value(y, 0)?;
    if ground_result(s, x, y, z, arith::rem_wide)? {
        return Ok(fixed_status(s, &[x, y, z]));
    }
    let (xl, xh) = s.wide_bounds(x);
    let (yl, yh) = s.wide_bounds(y);
    let m = yl.saturating_neg().max(yh).saturating_sub(1);
    s.tighten_range(z, m.saturating_neg().max(xl.min(0)), m.min(xh.max(0)))?;
    Ok(fixed_status(s, &[x, y, z]))
}

fn min_max(s: &mut Store, x: Term, y: Term, z: Term, is_max: bool) -> PropResult<Status> {
    // max(x, y) = -min(-x, -y); work on mirrored bounds for max
    let flip = |(lo, hi): (i128, i128)| -> (i128, i128) {
        if is_max {
            (hi.saturating_neg(), lo.saturating_neg())
        } else {
            (lo, hi)
        }
    };
    let tighten = |s: &mut Store, t: Term, lo: i128, hi: i128| {
        let (l, h) = flip((lo, hi));
        s.tighten_range(t, l, h)
    };
    let (xl, xh) = flip(s.wide_bounds(x));
    let (yl, yh) = flip(s.wide_bounds(y));
    tighten(s, z, xl.min(yl), xh.min(yh))?;
    let (zl, _) = flip(s.wide_bounds(z));
    tighten(s, x, zl, i128::MAX)?;
    tighten(s, y, zl, i128::MAX)?;
    let (xl, xh) = flip(s.wide_bounds(x));
    let (yl, yh) = flip(s.wide_bounds(y));
    let chosen = if xh <= yl {
        Some(x)
    } else if yh <= xl {
        Some(y)
    } else {
        None
    };
    if let Some(w) = chosen {
        let both = s.dom(w).intersect(&s.dom(z));
        s.tighten_term(w, &both)?;
        s.tighten_term(z, &both)?;
    }
    Ok(fixed_status(s, &[x, y, z]))
}

fn bool_and(s: &mut Store, d: Term, a: Term, b: Term) -> PropResult<Status> {
    booleans(s, &[d, a, b])?;
    let (va, vb, vd) = (s.value(a), s.value(b), s.value(d));
    if va == Some(0) || vb == Some(0) {
        s.fix(d, 0)?;
        return Ok(Status::Entailed);
    }
    if va == Some(1) && vb == Some(1) {
        s.fix(d, 1)?;
        return Ok(Status::Entailed);
    }
    match (vd, va, vb) {
        (Some(1), _, _) => {
            s.fix(a, 1)?;
            s.fix(b, 1)?;
            Ok(Status::Entailed)
        }
        (Some(0), Some(1), _) => {
            s.fix(b, 0)?;
            Ok(Status::Entailed)
        }
        (Some(0), _, Some(1)) => {
            s.fix(a, 0)?;
            Ok(Status::Entailed)
        }
        _ => Ok(Status::Active),
    }
}

fn reif_rel(
    s: &mut Store,
    truth: Term,
    da: Term,
    db: Term,
    a: Term,
    rel: Rel,
    b: Term,
) -> PropResult<Status> {
    booleans(s, &[truth, da, db])?;
    if s.value(da) == Some(0) || s.value(db) == Some(0) {
        s.fix(truth, 0)?;
        return Ok(Status::Entailed);
    }
    let defined = s.value(da) == Some(1) && s.value(db) == Some(1);
    match s.value(truth) {
        Some(1) => {
            s.fix(da, 1)?;
            s.fix(db, 1)?;
            rel_prune(s, rel, a, b)?;
            return Ok(if rel_status(s, rel, a, b) == Some(true) { Status::Entailed } else { Status::Active });
        }
        Some(_) if defined => {
            rel_prune(s, rel.negate(), a, b)?;
            return Ok(if rel_status(s, rel, a, b) == Some(false) { Status::Entailed } else { Status::Active });
        }
        _ => {}
    }
    match rel_status(s, rel, a, b) {
        Some(false) => {
            s.fix(truth, 0)?;
            Ok(Status::Entailed)
        }
        Some(true) if defined => {
            s.fix(truth, 1)?;
            Ok(Status::Entailed)
        }
        Some(true) if s.value(truth) == Some(0) => {
            // the relation holds, so one side must be undefined
            if s.value(da) == Some(1) {
                s.fix(db, 0)?;
            } else if s.value(db) == Some(1) {
                s.fix(da, 0)?;
            }
            Ok(Status::Active)
        }
        _ => Ok(Status::Active),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PropState;

    fn var(s: &mut Store, d: Domain) -> Term {
        Term::Var(s.new_var(d, false).unwrap())
    }

    #[test]
    fn absdiff_prunes_to_supported_values() {
        let mut s = Store::new();
        let x = var(&mut s, Domain::interval(0, 3));
        let y = var(&mut s, Domain::interval(0, 3));
        // 16 pairs, only (0,3) and (3,0) have |x-y| = 3
        let expect = Domain::from_values(
            (0..=3).filter(|a| (0..=3).any(|b: i64| (a - b).abs() == 3)),
        );
        s.post(Propagator::AbsDiff(x, y, Term::Const(3))).unwrap();
        assert_eq!(s.dom(x), expect);
        assert_eq!(s.dom(y), expect);
        assert_eq!(expect, Domain::from_values([0, 3]));
    }

    #[test]
    fn plus_of_zeros_is_entailed() {
        let mut s = Store::new();
        let z = [0, 1, 2].map(|_| var(&mut s, Domain::singleton(0)));
        let pid = s.post(Propagator::Plus(z[0], z[1], z[2])).unwrap();
        assert_eq!(s.propagator(pid).state, PropState::Entailed);
    }

    #[test]
    fn division_by_exact_zero_fails() {
        let mut s = Store::new();
        let x = var(&mut s, Domain::full());
        let y = var(&mut s, Domain::singleton(0));
        let z = var(&mut s, Domain::full());
        assert!(s.post(Propagator::Div(x, y, z)).is_err());
    }

    #[test]
    fn ground_check_examples() {
        let vals = [5i64, 2, 3];
        let asg = |v: VarId| vals[v.index()];
        let mut s = Store::new();
        let t: Vec<Term> = (0..3).map(|_| var(&mut s, Domain::full())).collect();
        assert!(Propagator::AbsDiff(t[0], t[1], t[2]).ground_check(&asg));
        let vals2 = [-7i64, 2, 1];
        let asg2 = |v: VarId| vals2[v.index()];
        assert!(Propagator::Mod(t[0], t[1], t[2]).ground_check(&asg2));
        assert!(!Propagator::Rem(t[0], t[1], t[2]).ground_check(&asg2));
    }

    #[test]
    fn skeleton_three_way_behaviour() {
        // divisor can no longer be zero: goal posted, defined = 1
        let mut s = Store::new();
        let y = var(&mut s, Domain::interval(1, 5));
        let d = var(&mut s, Domain::boolean());
        let (x, z) = (var(&mut s, Domain::interval(0, 9)), var(&mut s, Domain::full()));
        let pid = s
            .post(Propagator::Skeleton { divisor: y, defined: d, goal: Box::new(Propagator::Div(x, y, z)), spawned: None })
            .unwrap();
        assert_eq!(s.value(d), Some(1));
        assert!(s.propagator(pid).propagator.spawned().is_some());
        assert_eq!(s.dom(z), Domain::interval(0, 9));

        // divisor fixed to zero: defined = 0, goal never posted
        let mut s = Store::new();
        let y = var(&mut s, Domain::singleton(0));
        let d = var(&mut s, Domain::boolean());
        let x = var(&mut s, Domain::full());
        let n = s.propagator_count();
        s.post(Propagator::Skeleton { divisor: y, defined: d, goal: Box::new(Propagator::Div(x, y, x)), spawned: None })
            .unwrap();
        assert_eq!(s.value(d), Some(0));
        assert_eq!(s.propagator_count(), n + 1);

        // defined forced to 1: zero removed from the divisor, goal posted
        let mut s = Store::new();
        let y = var(&mut s, Domain::interval(-2, 2));
        let d = var(&mut s, Domain::boolean());
        let (x, z) = (var(&mut s, Domain::full()), var(&mut s, Domain::full()));
        let pid = s
            .post(Propagator::Skeleton { divisor: y, defined: d, goal: Box::new(Propagator::Div(x, y, z)), spawned: None })
            .unwrap();
        assert_eq!(s.propagator(pid).state, PropState::Active);
        s.fix(d, 1).unwrap();
        s.propagate().unwrap();
        assert_eq!(s.dom(y), Domain::interval(-2, 2).remove_value(0));
        assert!(s.propagator(pid).propagator.spawned().is_some());

        // zero divisor while defined = 1 fails
        let mut s = Store::new();
        let y = var(&mut s, Domain::singleton(0));
        let d = var(&mut s, Domain::singleton(1));
        assert!(s
            .post(Propagator::Skeleton { divisor: y, defined: d, goal: Box::new(Propagator::NeqConst(y, 0)), spawned: None })
            .is_err());
    }

    #[test]
    fn abs_aliases_nonnegative_argument() {
        let mut s = Store::new();
        let x = s.new_var(Domain::interval(0, 10), false).unwrap();
        let t = s.new_var(Domain::full(), true).unwrap();
        s.post(Propagator::Abs(Term::Var(x), Term::Var(t))).unwrap();
        assert_eq!(s.find(x), s.find(t));
        assert!(!s.is_auxiliary(t));
    }

    #[test]
    fn times_sign_cases() {
        let mut s = Store::new();
        let x = var(&mut s, Domain::interval(-3, 2));
        let y = var(&mut s, Domain::interval(-1, 4));
        let z = var(&mut s, Domain::full());
        s.post(Propagator::Times(x, y, z)).unwrap();
        assert_eq!(s.dom(z), Domain::interval(-12, 8));
        s.tighten_term(z, &Domain::interval(9, 100)).unwrap_err();

        let mut s = Store::new();
        let x = var(&mut s, Domain::full());
        let y = var(&mut s, Domain::interval(2, 3));
        let z = var(&mut s, Domain::interval(7, 12));
        s.post(Propagator::Times(x, y, z)).unwrap();
        assert_eq!(s.dom(x), Domain::interval(3, 6));
    }

    #[test]
    fn reified_relation_semantics() {
        let mut s = Store::new();
        let t = var(&mut s, Domain::boolean());
        let da = var(&mut s, Domain::boolean());
        let a = var(&mut s, Domain::interval(0, 3));
        let b = var(&mut s, Domain::interval(5, 9));
        s.post(Propagator::ReifRel { truth: t, lhs_defined: da, rhs_defined: Term::Const(1), lhs: a, rel: Rel::Lt, rhs: b })
            .unwrap();
        assert_eq!(s.value(t), None, "truth depends on definedness");
        s.fix(da, 1).unwrap();
        s.propagate().unwrap();
        assert_eq!(s.value(t), Some(1));

        let mut s = Store::new();
        let t = var(&mut s, Domain::boolean());
        let a = var(&mut s, Domain::interval(0, 3));
        s.post(Propagator::ReifRel {
            truth: t,
            lhs_defined: Term::Const(0),
            rhs_defined: Term::Const(1),
            lhs: a,
            rel: Rel::Eq,
            rhs: a,
        })
        .unwrap();
        assert_eq!(s.value(t), Some(0));
    }
}
