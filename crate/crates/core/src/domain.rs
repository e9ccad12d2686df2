//! Integer domains as sorted, disjoint, non-adjacent interval lists.
//!
//! A domain may be unbounded on either side (`inf..sup`). Finite values are
//! `i64`; interval arithmetic is carried out in `i128` where `i128::MIN` and
//! `i128::MAX` stand for the infinite ends.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One end of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Bound {
    pub fn finite(self) -> Option<i64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Widened representation used by interval arithmetic.
    pub(crate) fn wide(self) -> i128 {
        match self {
            Bound::NegInf => i128::MIN,
            Bound::Finite(v) => v as i128,
            Bound::PosInf => i128::MAX,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("inf"),
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::PosInf => f.write_str("sup"),
        }
    }
}

const I64_MIN: i128 = i64::MIN as i128;
const I64_MAX: i128 = i64::MAX as i128;

/// Number of values in a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Size {
    Finite(u128),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Domain {
    // (lo, hi) in widened form; see `Bound::wide`.
    intervals: Vec<(i128, i128)>,
}

impl Domain {
    pub fn empty() -> Self {
        Domain { intervals: Vec::new() }
    }

    /// `inf..sup`
    pub fn full() -> Self {
        Domain { intervals: vec![(i128::MIN, i128::MAX)] }
    }

    pub fn singleton(v: i64) -> Self {
        Domain { intervals: vec![(v as i128, v as i128)] }
    }

    pub fn interval(lo: i64, hi: i64) -> Self {
        Self::range_wide(lo as i128, hi as i128)
    }

    pub fn range(lo: Bound, hi: Bound) -> Self {
        Self::range_wide(lo.wide(), hi.wide())
    }

    /// `0..1`
    pub fn boolean() -> Self {
        Self::interval(0, 1)
    }

    /// Range from widened bounds. A lower bound below the `i64` range means
    /// unbounded below; a lower bound above it leaves nothing (and the same,
    /// mirrored, for the upper bound).
    pub(crate) fn range_wide(lo: i128, hi: i128) -> Self {
        if lo > I64_MAX || hi < I64_MIN {
            return Self::empty();
        }
        let lo = if lo < I64_MIN { i128::MIN } else { lo };
        let hi = if hi > I64_MAX { i128::MAX } else { hi };
        if lo > hi {
            Self::empty()
        } else {
            Domain { intervals: vec![(lo, hi)] }
        }
    }

    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut vals: Vec<i64> = values.into_iter().collect();
        vals.sort_unstable();
        vals.dedup();
        let mut intervals: Vec<(i128, i128)> = Vec::new();
        for v in vals {
            let v = v as i128;
            match intervals.last_mut() {
                Some((_, hi)) if *hi + 1 == v => *hi = v,
                _ => intervals.push((v, v)),
            }
        }
        Domain { intervals }
    }

    /// Builds a canonical domain from arbitrary (possibly overlapping,
    /// unsorted) intervals. Pairs with `lo > hi` are dropped.
    pub fn from_intervals<I: IntoIterator<Item = (Bound, Bound)>>(pairs: I) -> Self {
        Self::normalize(
            pairs
                .into_iter()
                .map(|(lo, hi)| (lo.wide(), hi.wide()))
                .collect(),
        )
    }

    fn normalize(mut pairs: Vec<(i128, i128)>) -> Self {
        pairs.retain(|(lo, hi)| lo <= hi);
        pairs.sort_unstable();
        let mut intervals: Vec<(i128, i128)> = Vec::with_capacity(pairs.len());
        for (lo, hi) in pairs {
            match intervals.last_mut() {
                Some((_, last_hi)) if lo <= last_hi.saturating_add(1) => {
                    *last_hi = (*last_hi).max(hi);
                }
                _ => intervals.push((lo, hi)),
            }
        }
        Domain { intervals }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (Bound, Bound)> + '_ {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (narrow(lo), narrow(hi)))
    }

    pub(crate) fn wide_bounds(&self) -> Option<(i128, i128)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    pub fn bounds(&self) -> Option<(Bound, Bound)> {
        self.wide_bounds().map(|(lo, hi)| (narrow(lo), narrow(hi)))
    }

    /// Smallest element. Panics on the empty domain.
    pub fn min(&self) -> Bound {
        self.bounds().expect("min of empty domain").0
    }

    /// Largest element. Panics on the empty domain.
    pub fn max(&self) -> Bound {
        self.bounds().expect("max of empty domain").1
    }

    pub fn contains(&self, v: i64) -> bool {
        let v = v as i128;
        let idx = self.intervals.partition_point(|&(_, hi)| hi < v);
        self.intervals.get(idx).is_some_and(|&(lo, _)| lo <= v)
    }

    pub fn count(&self) -> Size {
        let mut total: u128 = 0;
        for &(lo, hi) in &self.intervals {
            if lo == i128::MIN || hi == i128::MAX {
                return Size::Infinite;
            }
            total += (hi - lo) as u128 + 1;
        }
        Size::Finite(total)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.count(), Size::Finite(_))
    }

    /// The only value of a singleton domain.
    pub fn as_singleton(&self) -> Option<i64> {
        match self.intervals.as_slice() {
            [(lo, hi)] if lo == hi => Some(*lo as i64),
            _ => None,
        }
    }

    /// Finite domains only: the values in ascending order.
    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        assert!(self.is_finite(), "values() of an unbounded domain");
        self.intervals
            .iter()
            .flat_map(|&(lo, hi)| (lo as i64)..=(hi as i64))
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Domain { intervals: out }
    }

    pub fn union(&self, other: &Domain) -> Domain {
        let mut pairs = self.intervals.clone();
        pairs.extend_from_slice(&other.intervals);
        Self::normalize(pairs)
    }

    pub fn remove_value(&self, v: i64) -> Domain {
        let w = v as i128;
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        for &(lo, hi) in &self.intervals {
            if w < lo || w > hi {
                out.push((lo, hi));
                continue;
            }
            if lo < w {
                out.push((lo, w - 1));
            }
            if w < hi {
                out.push((w + 1, hi));
            }
        }
        Domain { intervals: out }
    }

    /// `{-v | v in self}`. `-i64::MIN` is not representable and is dropped.
    pub fn negate(&self) -> Domain {
        let flip = |b: i128| match b {
            i128::MIN => i128::MAX,
            i128::MAX => i128::MIN,
            v => -v,
        };
        let pairs = self
            .intervals
            .iter()
            .rev()
            .filter_map(|&(lo, hi)| {
                let (nlo, nhi) = (flip(hi), flip(lo));
                let nhi = if nhi != i128::MAX && nhi > I64_MAX { I64_MAX } else { nhi };
                (nlo <= nhi).then_some((nlo, nhi))
            })
            .collect();
        Domain { intervals: pairs }
    }

    pub fn is_subset(&self, other: &Domain) -> bool {
        self.intersect(other) == *self
    }

    /// Values `>= lo`.
    pub fn at_least(&self, lo: i128) -> Domain {
        self.intersect(&Domain::range_wide(lo, i128::MAX))
    }

    /// Values `<= hi`.
    pub fn at_most(&self, hi: i128) -> Domain {
        self.intersect(&Domain::range_wide(i128::MIN, hi))
    }

    /// Sorted, disjoint, non-adjacent, infinities only at the outer ends.
    pub fn is_canonical(&self) -> bool {
        let ok_bound = |b: i128| b == i128::MIN || b == i128::MAX || (I64_MIN..=I64_MAX).contains(&b);
        let n = self.intervals.len();
        self.intervals.iter().enumerate().all(|(k, &(lo, hi))| {
            ok_bound(lo)
                && ok_bound(hi)
                && lo <= hi
                && lo != i128::MAX
                && hi != i128::MIN
                && (lo != i128::MIN || k == 0)
                && (hi != i128::MAX || k + 1 == n)
        }) && self
            .intervals
            .windows(2)
            .all(|w| w[0].1.saturating_add(1) < w[1].0)
    }
}

fn narrow(b: i128) -> Bound {
    match b {
        i128::MIN => Bound::NegInf,
        i128::MAX => Bound::PosInf,
        v => Bound::Finite(v as i64),
    }
}

impl fmt::Display for Domain {
    /// `lo..hi` pieces joined by `\/`; a one-value piece is printed as the
    /// bare integer, and a negative upper bound is preceded by a space
    /// (`inf.. -1`) so the text stays tokenizable.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1..0");
        }
        for (k, (lo, hi)) in self.intervals().enumerate() {
            if k > 0 {
                f.write_str("\\/")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
                continue;
            }
            write!(f, "{lo}..")?;
            if matches!(hi, Bound::Finite(v) if v < 0) {
                f.write_str(" ")?;
            }
            write!(f, "{hi}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid domain at offset {offset}: {message}")]
pub struct DomainParseError {
    pub offset: usize,
    pub message: String,
}

impl FromStr for Domain {
    type Err = DomainParseError;

    /// Parses the rendering produced by `Display`, plus whitespace anywhere
    /// between tokens.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = DomainText { src: s, pos: 0 };
        let mut pairs = Vec::new();
        loop {
            let lo = p.bound()?;
            p.skip_ws();
            let hi = if p.eat("..") { p.bound()? } else { lo };
            if lo == Bound::PosInf || hi == Bound::NegInf {
                return Err(p.error("`sup` cannot start and `inf` cannot end an interval"));
            }
            pairs.push((lo, hi));
            p.skip_ws();
            if p.pos == s.len() {
                break;
            }
            if !p.eat("\\/") {
                return Err(p.error("expected `\\/` or end of domain"));
            }
        }
        Ok(Domain::from_intervals(pairs))
    }
}

struct DomainText<'a> {
    src: &'a str,
    pos: usize,
}

impl DomainText<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str) -> DomainParseError {
        DomainParseError { offset: self.pos, message: message.to_string() }
    }

    fn bound(&mut self) -> Result<Bound, DomainParseError> {
        self.skip_ws();
        if self.eat("inf") {
            return Ok(Bound::NegInf);
        }
        if self.eat("sup") {
            return Ok(Bound::PosInf);
        }
        let start = self.pos;
        let neg = self.eat("-");
        self.skip_ws();
        let digits_start = self.pos;
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            self.pos = start;
            return Err(self.error("expected integer, `inf` or `sup`"));
        }
        self.pos += len;
        let magnitude: i128 = self.src[digits_start..self.pos]
            .parse()
            .map_err(|_| self.error("integer out of range"))?;
        let v = if neg { -magnitude } else { magnitude };
        i64::try_from(v)
            .map(Bound::Finite)
            .map_err(|_| self.error("integer out of range"))
    }
}
