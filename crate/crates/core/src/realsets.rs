//! Symbolic subsets of the real line.
//!
//! Sets are built from intervals with rational endpoints, finite point sets and
//! support unions SU(D) = ∪_{d∈D} {d, f(d)} for a strictly decreasing
//! piecewise-linear f, combined with union, intersection and complement.
//!
//! Because f has rational breakpoints, f(D) of an interval union D is again an
//! interval union, so every expression over a single map normalizes to a plain
//! interval union. The canonical form factors the complete pairs {d, f(d)} back
//! out as a support-union parameter domain.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rational::{format_rational, parse_rational, Rational};

/// Default bound on the boolean nesting depth accepted by [`normalize`].
pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("interval endpoints out of order: {0} > {1}")]
    Unordered(String, String),
    #[error("decreasing map needs at least two breakpoints")]
    TooFewBreakpoints,
    #[error("map is not invertible: breakpoints must increase in x and strictly decrease in y")]
    NonInvertible,
    #[error("support-union parameters must lie in the admissible domain {0}")]
    DomainOutOfRange(String),
    #[error("admissible parameters overlap their own image, pairs {{d, f(d)}} would collide")]
    OverlappingPairs,
    #[error("expression is not canonicalizable: {0}")]
    NonCanonicalizable(String),
    #[error("boolean nesting deeper than {0}")]
    DepthExceeded(usize),
}

/// An interval with rational or infinite endpoints. `None` is ∓∞.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Option<Rational>,
    hi: Option<Rational>,
    lo_closed: bool,
    hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Option<Rational>, lo_closed: bool, hi: Option<Rational>, hi_closed: bool) -> Result<Self, SetError> {
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return Err(SetError::Unordered(format_rational(l), format_rational(h)));
            }
        }
        Ok(Interval { lo_closed: lo_closed && lo.is_some(), hi_closed: hi_closed && hi.is_some(), lo, hi })
    }

    pub fn closed(lo: Rational, hi: Rational) -> Result<Self, SetError> {
        Self::new(Some(lo), true, Some(hi), true)
    }

    pub fn closed_open(lo: Rational, hi: Rational) -> Result<Self, SetError> {
        Self::new(Some(lo), true, Some(hi), false)
    }

    pub fn point(p: Rational) -> Self {
        Interval { lo: Some(p.clone()), hi: Some(p), lo_closed: true, hi_closed: true }
    }

    pub fn real_line() -> Self {
        Interval { lo: None, hi: None, lo_closed: false, hi_closed: false }
    }

    pub fn lo(&self) -> Option<&Rational> {
        self.lo.as_ref()
    }

    pub fn hi(&self) -> Option<&Rational> {
        self.hi.as_ref()
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) => l > h || (l == h && !(self.lo_closed && self.hi_closed)),
            _ => false,
        }
    }

    pub fn as_point(&self) -> Option<&Rational> {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) if l == h && self.lo_closed && self.hi_closed => Some(l),
            _ => None,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = match &self.lo {
            None => true,
            Some(l) => x > l || (self.lo_closed && x == l),
        };
        let below = match &self.hi {
            None => true,
            Some(h) => x < h || (self.hi_closed && x == h),
        };
        above && below
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if cmp_lower(self, other) == Ordering::Less {
            (other.lo.clone(), other.lo_closed)
        } else {
            (self.lo.clone(), self.lo_closed)
        };
        let (hi, hi_closed) = if cmp_upper(self, other) == Ordering::Greater {
            (other.hi.clone(), other.hi_closed)
        } else {
            (self.hi.clone(), self.hi_closed)
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or_else(|| "-inf".to_string(), format_rational);
        let hi = self.hi.as_ref().map_or_else(|| "inf".to_string(), format_rational);
        write!(f, "I{}{},{}{}", if self.lo_closed { '[' } else { '(' }, lo, hi, if self.hi_closed { ']' } else { ')' })
    }
}

fn cmp_lower(a: &Interval, b: &Interval) -> Ordering {
    match (&a.lo, &b.lo) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Less,
        (_, None) => Ordering::Greater,
        (Some(x), Some(y)) => x.cmp(y).then_with(|| b.lo_closed.cmp(&a.lo_closed)),
    }
}

fn cmp_upper(a: &Interval, b: &Interval) -> Ordering {
    match (&a.hi, &b.hi) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Greater,
        (_, None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y).then_with(|| a.hi_closed.cmp(&b.hi_closed)),
    }
}

/// `next` starts no later than `cur` ends, or exactly where it ends with no gap.
fn touches(cur: &Interval, next: &Interval) -> bool {
    match (&cur.hi, &next.lo) {
        (None, _) | (_, None) => true,
        (Some(h), Some(l)) => l < h || (l == h && (cur.hi_closed || next.lo_closed)),
    }
}

/// A finite union of pairwise disjoint, maximal, ordered intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        let mut items: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        items.sort_by(cmp_lower);
        let mut parts: Vec<Interval> = Vec::with_capacity(items.len());
        for next in items {
            match parts.last_mut() {
                Some(cur) if touches(cur, &next) => {
                    if cmp_upper(&next, cur) == Ordering::Greater {
                        cur.hi = next.hi;
                        cur.hi_closed = next.hi_closed;
                    }
                }
                _ => parts.push(next),
            }
        }
        IntervalUnion { parts }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Rational>>(points: I) -> Self {
        Self::from_intervals(points.into_iter().cloned().map(Interval::point))
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.parts.iter().any(|i| i.contains(x))
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        Self::from_intervals(self.parts.iter().chain(&other.parts).cloned())
    }

    pub fn complement(&self) -> IntervalUnion {
        let mut out = Vec::new();
        let mut lo: Option<Rational> = None;
        let mut lo_closed = false;
        for part in &self.parts {
            if part.lo.is_some() {
                let gap = Interval { lo: lo.clone(), hi: part.lo.clone(), lo_closed, hi_closed: !part.lo_closed };
                if !gap.is_empty() {
                    out.push(gap);
                }
            }
            match &part.hi {
                Some(h) => {
                    lo = Some(h.clone());
                    lo_closed = !part.hi_closed;
                }
                None => return IntervalUnion { parts: out },
            }
        }
        out.push(Interval { lo, hi: None, lo_closed, hi_closed: false });
        IntervalUnion { parts: out }
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        Self::from_intervals(out)
    }

    pub fn difference(&self, other: &IntervalUnion) -> IntervalUnion {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &IntervalUnion) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &IntervalUnion) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn to_expr(&self) -> SetExpr {
        let (points, intervals): (Vec<&Interval>, Vec<&Interval>) = self.parts.iter().partition(|i| i.as_point().is_some());
        let mut terms: Vec<SetExpr> = intervals.into_iter().cloned().map(SetExpr::Interval).collect();
        if !points.is_empty() || terms.is_empty() {
            terms.push(SetExpr::Points(points.iter().filter_map(|i| i.as_point().cloned()).collect()));
        }
        terms.into_iter().reduce(SetExpr::union).expect("at least one term")
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

/// A strictly decreasing piecewise-linear bijection between closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecreasingMap {
    knots: Vec<(Rational, Rational)>,
}

impl DecreasingMap {
    pub fn new(knots: Vec<(Rational, Rational)>) -> Result<Self, SetError> {
        if knots.len() < 2 {
            return Err(SetError::TooFewBreakpoints);
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 <= w[1].1) {
            return Err(SetError::NonInvertible);
        }
        Ok(DecreasingMap { knots })
    }

    /// The line through (x0, y0) and (x1, y1), x0 < x1, y0 > y1.
    pub fn linear(x0: Rational, y0: Rational, x1: Rational, y1: Rational) -> Result<Self, SetError> {
        Self::new(vec![(x0, y0), (x1, y1)])
    }

    pub fn knots(&self) -> &[(Rational, Rational)] {
        &self.knots
    }

    pub fn domain_start(&self) -> &Rational {
        &self.knots[0].0
    }

    pub fn domain_end(&self) -> &Rational {
        &self.knots[self.knots.len() - 1].0
    }

    pub fn range_start(&self) -> &Rational {
        &self.knots[self.knots.len() - 1].1
    }

    pub fn range_end(&self) -> &Rational {
        &self.knots[0].1
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: Some(self.domain_start().clone()), hi: Some(self.domain_end().clone()), lo_closed: true, hi_closed: true }
    }

    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        eval_knots(&self.knots, x)
    }

    pub fn inverse(&self) -> DecreasingMap {
        DecreasingMap { knots: self.knots.iter().rev().map(|(x, y)| (y.clone(), x.clone())).collect() }
    }

    pub fn inverse_eval(&self, y: &Rational) -> Option<Rational> {
        let inv: Vec<(Rational, Rational)> = self.knots.iter().rev().map(|(x, y)| (y.clone(), x.clone())).collect();
        eval_knots(&inv, y)
    }

    /// f(U ∩ domain) as an interval union.
    pub fn image(&self, set: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for w in self.knots.windows(2) {
            let segment = Interval { lo: Some(w[0].0.clone()), hi: Some(w[1].0.clone()), lo_closed: true, hi_closed: true };
            for part in set.parts() {
                let k = part.intersect(&segment);
                if k.is_empty() {
                    continue;
                }
                let lo = k.lo.as_ref().expect("bounded by segment");
                let hi = k.hi.as_ref().expect("bounded by segment");
                out.push(Interval { lo: self.eval(hi), hi: self.eval(lo), lo_closed: k.hi_closed, hi_closed: k.lo_closed });
            }
        }
        IntervalUnion::from_intervals(out)
    }

    /// f⁻¹(U) ⊆ domain.
    pub fn preimage(&self, set: &IntervalUnion) -> IntervalUnion {
        self.inverse().image(set)
    }
}

fn eval_knots(knots: &[(Rational, Rational)], x: &Rational) -> Option<Rational> {
    knots.windows(2).find(|w| &w[0].0 <= x && x <= &w[1].0).map(|w| {
        let (x0, y0) = &w[0];
        let (x1, y1) = &w[1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    })
}

/// The map f together with the parameters whose pairs {d, f(d)} are
/// admissible; admissible parameters never meet their own image, so distinct
/// parameters yield disjoint pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportMap {
    map: DecreasingMap,
    admissible: IntervalUnion,
}

impl SupportMap {
    pub fn new(map: DecreasingMap, admissible: IntervalUnion) -> Result<Self, SetError> {
        let domain = IntervalUnion::from_intervals([map.domain()]);
        if !admissible.is_subset(&domain) {
            return Err(SetError::DomainOutOfRange(domain.to_string()));
        }
        if !admissible.is_disjoint(&map.image(&admissible)) {
            return Err(SetError::OverlappingPairs);
        }
        Ok(SupportMap { map, admissible })
    }

    pub fn map(&self) -> &DecreasingMap {
        &self.map
    }

    pub fn admissible(&self) -> &IntervalUnion {
        &self.admissible
    }

    /// D ∪ f(D).
    pub fn realize(&self, params: &IntervalUnion) -> IntervalUnion {
        params.union(&self.map.image(params))
    }

    /// Splits a plain set into complete pairs (returned as parameters) and the rest.
    fn factor(&self, plain: &IntervalUnion) -> (IntervalUnion, IntervalUnion) {
        let params = self.admissible.intersect(plain).intersect(&self.map.preimage(plain));
        let rest = plain.difference(&self.realize(&params));
        (params, rest)
    }

    fn contains_pair_of(&self, params: &IntervalUnion, x: &Rational) -> bool {
        params.contains(x) || self.map.inverse_eval(x).is_some_and(|d| params.contains(&d))
    }
}

/// A symbolic set expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Interval(Interval),
    Points(BTreeSet<Rational>),
    SupportUnion { params: IntervalUnion, map: Arc<SupportMap> },
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersection(Box<SetExpr>, Box<SetExpr>),
    Complement(Box<SetExpr>),
}

impl SetExpr {
    pub fn empty() -> Self {
        SetExpr::Points(BTreeSet::new())
    }

    pub fn points<I: IntoIterator<Item = Rational>>(points: I) -> Self {
        SetExpr::Points(points.into_iter().collect())
    }

    pub fn support_union(params: IntervalUnion, map: Arc<SupportMap>) -> Result<Self, SetError> {
        if !params.is_subset(map.admissible()) {
            return Err(SetError::DomainOutOfRange(map.admissible().to_string()));
        }
        Ok(SetExpr::SupportUnion { params, map })
    }

    pub fn union(a: SetExpr, b: SetExpr) -> SetExpr {
        SetExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn intersection(a: SetExpr, b: SetExpr) -> SetExpr {
        SetExpr::Intersection(Box::new(a), Box::new(b))
    }

    pub fn complement(a: SetExpr) -> SetExpr {
        SetExpr::Complement(Box::new(a))
    }

    fn depth(&self) -> usize {
        match self {
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => 1 + a.depth().max(b.depth()),
            SetExpr::Complement(a) => 1 + a.depth(),
            _ => 0,
        }
    }

    fn collect_maps<'a>(&'a self, out: &mut Vec<&'a Arc<SupportMap>>) {
        match self {
            SetExpr::SupportUnion { map, .. } => {
                if !out.iter().any(|m| ***m == **map) {
                    out.push(map);
                }
            }
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) => {
                a.collect_maps(out);
                b.collect_maps(out);
            }
            SetExpr::Complement(a) => a.collect_maps(out),
            _ => {}
        }
    }

    fn realize(&self) -> IntervalUnion {
        match self {
            SetExpr::Interval(i) => IntervalUnion::from_intervals([i.clone()]),
            SetExpr::Points(p) => IntervalUnion::from_points(p),
            SetExpr::SupportUnion { params, map } => map.realize(params),
            SetExpr::Union(a, b) => a.realize().union(&b.realize()),
            SetExpr::Intersection(a, b) => a.realize().intersect(&b.realize()),
            SetExpr::Complement(a) => a.realize().complement(),
        }
    }
}

fn wrap(e: &SetExpr) -> String {
    match e {
        SetExpr::Union(..) | SetExpr::Intersection(..) => format!("({e})"),
        _ => e.to_string(),
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Interval(i) => i.fmt(f),
            SetExpr::Points(p) => {
                let items: Vec<String> = p.iter().map(format_rational).collect();
                write!(f, "P{{{}}}", items.join(","))
            }
            SetExpr::SupportUnion { params, .. } => write!(f, "SU({params})"),
            SetExpr::Union(a, b) => write!(f, "{} | {}", wrap(a), wrap(b)),
            SetExpr::Intersection(a, b) => write!(f, "{} & {}", wrap(a), wrap(b)),
            SetExpr::Complement(a) => write!(f, "!{}", wrap(a)),
        }
    }
}

/// Exact membership of x in the set denoted by `e`.
pub fn member(x: &Rational, e: &SetExpr) -> bool {
    match e {
        SetExpr::Interval(i) => i.contains(x),
        SetExpr::Points(p) => p.contains(x),
        SetExpr::SupportUnion { params, map } => map.contains_pair_of(params, x),
        SetExpr::Union(a, b) => member(x, a) || member(x, b),
        SetExpr::Intersection(a, b) => member(x, a) && member(x, b),
        SetExpr::Complement(a) => !member(x, a),
    }
}

/// Canonical form: disjoint maximal intervals, isolated points, and the
/// parameter domain of complete support pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSet {
    pub intervals: Vec<Interval>,
    pub points: BTreeSet<Rational>,
    pub support_params: Option<IntervalUnion>,
    map: Option<Arc<SupportMap>>,
}

impl CanonicalSet {
    pub fn contains(&self, x: &Rational) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
            || self.points.contains(x)
            || match (&self.support_params, &self.map) {
                (Some(params), Some(map)) => map.contains_pair_of(params, x),
                _ => false,
            }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty() && self.support_params.is_none()
    }

    pub fn to_expr(&self) -> SetExpr {
        let plain =
            IntervalUnion::from_intervals(self.intervals.iter().cloned().chain(self.points.iter().cloned().map(Interval::point)));
        match (&self.support_params, &self.map) {
            (Some(params), Some(map)) => {
                let su = SetExpr::SupportUnion { params: params.clone(), map: map.clone() };
                if plain.is_empty() {
                    su
                } else {
                    SetExpr::union(plain.to_expr(), su)
                }
            }
            _ => plain.to_expr(),
        }
    }

    fn from_parts(plain: IntervalUnion, params: IntervalUnion, map: Option<Arc<SupportMap>>) -> Self {
        let (points, intervals): (Vec<Interval>, Vec<Interval>) = plain.parts.into_iter().partition(|i| i.as_point().is_some());
        CanonicalSet {
            intervals,
            points: points.into_iter().filter_map(|i| i.lo).collect(),
            support_params: (!params.is_empty()).then_some(params),
            map,
        }
    }
}

/// Normalizes with the default depth limit.
pub fn normalize(e: &SetExpr) -> Result<CanonicalSet, SetError> {
    normalize_with_depth(e, DEFAULT_MAX_DEPTH)
}

pub fn normalize_with_depth(e: &SetExpr, max_depth: usize) -> Result<CanonicalSet, SetError> {
    if e.depth() > max_depth {
        return Err(SetError::DepthExceeded(max_depth));
    }
    let mut maps = Vec::new();
    e.collect_maps(&mut maps);
    if maps.len() > 1 {
        return Err(SetError::NonCanonicalizable("support unions over different maps".into()));
    }
    let plain = e.realize();
    match maps.first() {
        None => Ok(CanonicalSet::from_parts(plain, IntervalUnion::empty(), None)),
        Some(&map) => {
            let (params, rest) = map.factor(&plain);
            Ok(CanonicalSet::from_parts(rest, params, Some(map.clone())))
        }
    }
}

/// The points of a support set {d, f(d)} (or {a}) that lie in `e`.
pub fn intersect_with_support(e: &SetExpr, support: &[Rational]) -> BTreeSet<Rational> {
    support.iter().filter(|x| member(x, e)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset}")]
pub struct SetParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses the textual set grammar:
///
/// ```text
/// expr     := term ("|" term)*
/// term     := factor ("&" factor)*
/// factor   := "!" factor | primary
/// primary  := interval | points | "SU" "(" expr ")" | "(" expr ")"
/// interval := "I" ("[" | "(") bound "," bound ("]" | ")")
/// bound    := rational | "-inf" | "inf" | "+inf"
/// points   := "P" "{" [rational ("," rational)*] "}"
/// ```
///
/// `SU(D)` needs a support map in scope; D must be free of support unions.
pub fn parse_set_expr(text: &str, map: Option<&Arc<SupportMap>>) -> Result<SetExpr, SetParseError> {
    let mut p = SetParser { src: text, pos: 0, map };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct SetParser<'a> {
    src: &'a str,
    pos: usize,
    map: Option<&'a Arc<SupportMap>>,
}

impl SetParser<'_> {
    fn error(&self, message: impl Into<String>) -> SetParseError {
        SetParseError { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), SetParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn expr(&mut self) -> Result<SetExpr, SetParseError> {
        let mut e = self.term()?;
        while self.eat("|") {
            e = SetExpr::union(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<SetExpr, SetParseError> {
        let mut e = self.factor()?;
        while self.eat("&") {
            e = SetExpr::intersection(e, self.factor()?);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<SetExpr, SetParseError> {
        if self.eat("!") {
            return Ok(SetExpr::complement(self.factor()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SetExpr, SetParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some('S') => {
                let start = self.pos;
                self.expect("SU")?;
                self.expect("(")?;
                let inner = self.expr()?;
                self.expect(")")?;
                let map = self.map.ok_or_else(|| SetParseError {
                    offset: start,
                    message: "SU(...) needs a binomial section to define the support map".into(),
                })?;
                let mut inner_maps = Vec::new();
                inner.collect_maps(&mut inner_maps);
                if !inner_maps.is_empty() {
                    return Err(SetParseError { offset: start, message: "SU parameters cannot contain SU".into() });
                }
                SetExpr::support_union(inner.realize(), map.clone())
                    .map_err(|e| SetParseError { offset: start, message: e.to_string() })
            }
            Some('I') => {
                self.pos += 1;
                let start = self.pos;
                let lo_closed = if self.eat("[") {
                    true
                } else {
                    self.expect("(")?;
                    false
                };
                let lo = self.bound()?;
                self.expect(",")?;
                let hi = self.bound()?;
                let hi_closed = if self.eat("]") {
                    true
                } else {
                    self.expect(")")?;
                    false
                };
                Interval::new(lo, lo_closed, hi, hi_closed)
                    .map(SetExpr::Interval)
                    .map_err(|e| SetParseError { offset: start, message: e.to_string() })
            }
            Some('P') => {
                self.pos += 1;
                self.expect("{")?;
                let mut points = BTreeSet::new();
                if !self.eat("}") {
                    loop {
                        points.insert(self.rational()?);
                        if self.eat("}") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                Ok(SetExpr::Points(points))
            }
            _ => Err(self.error("expected a set expression")),
        }
    }

    fn bound(&mut self) -> Result<Option<Rational>, SetParseError> {
        if self.eat("-inf") || self.eat("+inf") || self.eat("inf") {
            return Ok(None);
        }
        self.rational().map(Some)
    }

    fn rational(&mut self) -> Result<Rational, SetParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c.is_ascii_digit() || c == '/' || (i == 0 && (c == '-' || c == '+')))
            .count();
        let text = &rest[..len];
        let value = parse_rational(text).map_err(|e| SetParseError { offset: start, message: e.to_string() })?;
        self.pos += len;
        Ok(value)
    }
}

/// Parameters of the single-element support union at d, as an interval union.
pub fn param_point(d: &Rational) -> IntervalUnion {
    IntervalUnion::from_intervals([Interval::point(d.clone())])
}
