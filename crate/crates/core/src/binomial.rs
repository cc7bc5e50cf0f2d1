//! The robust one-step binomial model.
//!
//! Parameters span E₀ = [u₀,U₀]×[d₀,D₀]×[π₀,Π₀]; each (u, d, π) gives the
//! law π·δ_u + (1−π)·δ_d of the price ratio. The alternative built here keeps
//! one law per support set so that distinct members have disjoint supports:
//! pairs {d, f(d)} for a strictly decreasing f, plus point masses δ_a on
//! [u₀, D₀] when that interval is nonempty.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::families::{Localization, MeasureFamily};
use crate::measures::{is_abs_continuous, mix, Atom, AtomSet, ProbabilityMeasure};
use crate::rational::{format_rational, Rational};
use crate::realsets::{DecreasingMap, Interval, IntervalUnion, SetError, SetExpr, SupportMap};

/// Default denominator for rational parameter grids.
pub const DEFAULT_GRID_DENOMINATOR: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinomialError {
    #[error("parameters violate: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("custom map must run from ({d0}, {top}) to ({m0}, {bottom})")]
    MapEndpoints { d0: String, top: String, m0: String, bottom: String },
    #[error("pi_tilde {0} is outside [pi0, Pi0]")]
    PiTildeOutOfRange(String),
    #[error("{field} = {value} is outside its parameter range")]
    OutOfRange { field: &'static str, value: String },
    #[error(transparent)]
    Set(#[from] SetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelParams {
    pub u0: Rational,
    pub big_u0: Rational,
    pub d0: Rational,
    pub big_d0: Rational,
    pub pi0: Rational,
    pub big_pi0: Rational,
}

impl ModelParams {
    /// Arguments in the order u₀, U₀, d₀, D₀, π₀, Π₀.
    pub fn new(u0: Rational, big_u0: Rational, d0: Rational, big_d0: Rational, pi0: Rational, big_pi0: Rational) -> Self {
        ModelParams { u0, big_u0, d0, big_d0, pi0, big_pi0 }
    }

    /// min(u₀, D₀)
    pub fn m0(&self) -> &Rational {
        (&self.u0).min(&self.big_d0)
    }

    /// max(u₀, D₀)
    pub fn big_m0(&self) -> &Rational {
        (&self.u0).max(&self.big_d0)
    }

    pub fn contains(&self, r: &BinMeasure) -> bool {
        self.check_range(r).is_ok()
    }

    fn check_range(&self, r: &BinMeasure) -> Result<(), BinomialError> {
        let within = |x: &Rational, lo: &Rational, hi: &Rational| lo <= x && x <= hi;
        if !within(&r.u, &self.u0, &self.big_u0) {
            return Err(BinomialError::OutOfRange { field: "u", value: format_rational(&r.u) });
        }
        if !within(&r.d, &self.d0, &self.big_d0) {
            return Err(BinomialError::OutOfRange { field: "d", value: format_rational(&r.d) });
        }
        if !within(&r.pi, &self.pi0, &self.big_pi0) {
            return Err(BinomialError::OutOfRange { field: "pi", value: format_rational(&r.pi) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCheck {
    pub name: &'static str,
    /// A whitespace-free identifier for reports, e.g. `pi0_gt_0`.
    pub key: &'static str,
    /// The inequality with the values substituted, e.g. `0/1 < 2/5`.
    pub detail: String,
    pub holds: bool,
    /// Part of the strengthened assumption rather than the base one.
    pub strengthened: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    pub checks: Vec<ParamCheck>,
    pub base_ok: bool,
    pub strengthened_ok: bool,
}

impl ParamReport {
    pub fn overall(&self) -> bool {
        self.base_ok && self.strengthened_ok
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.holds).map(|c| format!("{}: {}", c.name, c.detail)).collect()
    }
}

pub fn validate_params(p: &ModelParams) -> ParamReport {
    let zero = Rational::zero();
    let one = Rational::one();
    let lt = |a: &Rational, b: &Rational| (a < b, format!("{} < {}", format_rational(a), format_rational(b)));
    let le = |a: &Rational, b: &Rational| (a <= b, format!("{} <= {}", format_rational(a), format_rational(b)));
    let items: Vec<(&'static str, &'static str, (bool, String), bool)> = vec![
        ("pi0 > 0", "pi0_gt_0", lt(&zero, &p.pi0), false),
        ("pi0 <= Pi0", "pi0_le_Pi0", le(&p.pi0, &p.big_pi0), false),
        ("Pi0 < 1", "Pi0_lt_1", lt(&p.big_pi0, &one), false),
        ("d0 <= D0", "d0_le_D0", le(&p.d0, &p.big_d0), false),
        ("u0 <= U0", "u0_le_U0", le(&p.u0, &p.big_u0), false),
        ("d0 > 0", "d0_gt_0", lt(&zero, &p.d0), false),
        ("d0 < 1", "d0_lt_1", lt(&p.d0, &one), false),
        ("U0 > 1", "U0_gt_1", lt(&one, &p.big_u0), false),
        ("d0 < min(u0, D0)", "d0_lt_min_u0_D0", lt(&p.d0, p.m0()), true),
        ("max(u0, D0) < U0", "max_u0_D0_lt_U0", lt(p.big_m0(), &p.big_u0), true),
    ];
    let checks: Vec<ParamCheck> = items
        .into_iter()
        .map(|(name, key, (holds, detail), strengthened)| ParamCheck { name, key, detail, holds, strengthened })
        .collect();
    let base_ok = checks.iter().filter(|c| !c.strengthened).all(|c| c.holds);
    let strengthened_ok = checks.iter().filter(|c| c.strengthened).all(|c| c.holds);
    ParamReport { checks, base_ok, strengthened_ok }
}

/// A member of the parameterized family: law π·δ_u + (1−π)·δ_d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinMeasure {
    pub u: Rational,
    pub d: Rational,
    pub pi: Rational,
}

impl BinMeasure {
    pub fn new(u: Rational, d: Rational, pi: Rational) -> Self {
        BinMeasure { u, d, pi }
    }

    pub fn law(&self) -> ProbabilityMeasure {
        if self.u == self.d {
            return ProbabilityMeasure::dirac(Atom::point(self.u.clone()));
        }
        ProbabilityMeasure::from_weights([
            (Atom::point(self.u.clone()), self.pi.clone()),
            (Atom::point(self.d.clone()), Rational::one() - &self.pi),
        ])
        .expect("pi lies strictly between 0 and 1")
    }

    pub fn support(&self) -> BTreeSet<Rational> {
        BTreeSet::from([self.u.clone(), self.d.clone()])
    }

    pub fn support_atoms(&self) -> AtomSet {
        self.support().into_iter().map(Atom::point).collect()
    }
}

impl fmt::Display for BinMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(u={}, d={}, pi={})", format_rational(&self.u), format_rational(&self.d), format_rational(&self.pi))
    }
}

/// Which case of the support geometry applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// D₀ < u₀: only pairs, with the boundary pair at d = D₀.
    Separated,
    /// D₀ ≥ u₀: pairs for d < u₀ and point masses on [u₀, D₀].
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Pairs {d, f(d)} with d ∈ [d₀, m₀).
    R0,
    /// Point masses δ_a.
    R1,
    /// The boundary pair at d = D₀ when D₀ < u₀.
    R2,
    Outside,
}

/// A member of the alternative, identified by its parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AltMember {
    Pair { d: Rational },
    Point { a: Rational },
}

impl fmt::Display for AltMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AltMember::Pair { d } => write!(f, "pair(d={})", format_rational(d)),
            AltMember::Point { a } => write!(f, "point(a={})", format_rational(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointAlternative {
    params: ModelParams,
    map: Arc<SupportMap>,
    pi_tilde: Rational,
    regime: Regime,
}

/// Builds the alternative. `f` defaults to the line from (d₀, U₀) to (m₀, M₀);
/// `pi_tilde` defaults to (π₀ + Π₀)/2.
pub fn build_alternative(
    p: &ModelParams,
    f: Option<DecreasingMap>,
    pi_tilde: Option<Rational>,
) -> Result<DisjointAlternative, BinomialError> {
    let report = validate_params(p);
    if !report.overall() {
        return Err(BinomialError::InvalidParams(report.failures()));
    }
    let (m0, big_m0) = (p.m0().clone(), p.big_m0().clone());
    let f = match f {
        None => DecreasingMap::linear(p.d0.clone(), p.big_u0.clone(), m0.clone(), big_m0.clone())?,
        Some(f) => {
            let first = &f.knots()[0];
            let last = &f.knots()[f.knots().len() - 1];
            if first.0 != p.d0 || first.1 != p.big_u0 || last.0 != m0 || last.1 != big_m0 {
                return Err(BinomialError::MapEndpoints {
                    d0: format_rational(&p.d0),
                    top: format_rational(&p.big_u0),
                    m0: format_rational(&m0),
                    bottom: format_rational(&big_m0),
                });
            }
            f
        }
    };
    let pi_tilde = pi_tilde.unwrap_or_else(|| (&p.pi0 + &p.big_pi0) / Rational::from_integer(2.into()));
    if pi_tilde < p.pi0 || pi_tilde > p.big_pi0 {
        return Err(BinomialError::PiTildeOutOfRange(format_rational(&pi_tilde)));
    }
    let regime = if p.big_d0 < p.u0 { Regime::Separated } else { Regime::Overlapping };
    let admissible = match regime {
        Regime::Separated => Interval::closed(p.d0.clone(), m0)?,
        Regime::Overlapping => Interval::closed_open(p.d0.clone(), m0)?,
    };
    let map = Arc::new(SupportMap::new(f, IntervalUnion::from_intervals([admissible]))?);
    Ok(DisjointAlternative { params: p.clone(), map, pi_tilde, regime })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverCase {
    /// Q already belongs to the alternative.
    Identity,
    /// D₀ < u₀: the pair through d_Q and the pair through u_Q.
    Separated,
    /// d_Q < u₀ and u_Q > D₀.
    I,
    /// d_Q ∈ [u₀, D₀] and u_Q > D₀.
    II,
    /// d_Q < u₀ and u_Q ∈ [u₀, D₀].
    III,
    /// d_Q, u_Q ∈ [u₀, D₀].
    IV,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub q1: AltMember,
    pub q2: AltMember,
    pub case: CoverCase,
    /// S_Q ⊆ S_{Q₁} ∪ S_{Q₂}.
    pub sound: bool,
    /// Q ≪ (Q₁ + Q₂)/2.
    pub dominated: bool,
}

impl DisjointAlternative {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn f(&self) -> &DecreasingMap {
        self.map.map()
    }

    pub fn support_map(&self) -> &Arc<SupportMap> {
        &self.map
    }

    pub fn pi_tilde(&self) -> &Rational {
        &self.pi_tilde
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Parameters d of the pair members.
    pub fn pair_domain(&self) -> &IntervalUnion {
        self.map.admissible()
    }

    /// Parameters a of the point-mass members; empty when D₀ < u₀.
    pub fn point_domain(&self) -> IntervalUnion {
        match Interval::closed(self.params.u0.clone(), self.params.big_d0.clone()) {
            Ok(i) => IntervalUnion::from_intervals([i]),
            Err(_) => IntervalUnion::empty(),
        }
    }

    /// Every point charged by some member.
    pub fn covered_points(&self) -> IntervalUnion {
        self.map.realize(self.pair_domain()).union(&self.point_domain())
    }

    /// SU over all pair parameters.
    pub fn all_pairs(&self) -> SetExpr {
        SetExpr::SupportUnion { params: self.pair_domain().clone(), map: self.map.clone() }
    }

    pub fn is_member(&self, m: &AltMember) -> bool {
        match m {
            AltMember::Pair { d } => self.pair_domain().contains(d),
            AltMember::Point { a } => self.point_domain().contains(a),
        }
    }

    pub fn component_of(&self, m: &AltMember) -> Component {
        match m {
            AltMember::Point { a } if self.point_domain().contains(a) => Component::R1,
            AltMember::Pair { d } if self.pair_domain().contains(d) => {
                if d < self.params.m0() {
                    Component::R0
                } else {
                    Component::R2
                }
            }
            _ => Component::Outside,
        }
    }

    pub fn as_bin(&self, m: &AltMember) -> BinMeasure {
        match m {
            AltMember::Pair { d } => {
                BinMeasure::new(self.f().eval(d).expect("member parameter in domain"), d.clone(), self.pi_tilde.clone())
            }
            AltMember::Point { a } => BinMeasure::new(a.clone(), a.clone(), self.pi_tilde.clone()),
        }
    }

    pub fn support_of(&self, m: &AltMember) -> BTreeSet<Rational> {
        self.as_bin(m).support()
    }

    /// The unique member whose support contains x.
    pub fn member_covering(&self, x: &Rational) -> Option<AltMember> {
        if self.pair_domain().contains(x) {
            return Some(AltMember::Pair { d: x.clone() });
        }
        if let Some(d) = self.f().inverse_eval(x) {
            if self.pair_domain().contains(&d) {
                return Some(AltMember::Pair { d });
            }
        }
        self.point_domain().contains(x).then(|| AltMember::Point { a: x.clone() })
    }

    /// The member equal to R, if any.
    pub fn member_of(&self, r: &BinMeasure) -> Result<Option<AltMember>, BinomialError> {
        self.params.check_range(r)?;
        if r.u == r.d {
            return Ok(Some(AltMember::Point { a: r.u.clone() }));
        }
        if r.pi == self.pi_tilde && self.pair_domain().contains(&r.d) && self.f().eval(&r.d).as_ref() == Some(&r.u) {
            return Ok(Some(AltMember::Pair { d: r.d.clone() }));
        }
        Ok(None)
    }

    pub fn classify_member(&self, r: &BinMeasure) -> Result<Component, BinomialError> {
        Ok(self.member_of(r)?.map_or(Component::Outside, |m| self.component_of(&m)))
    }

    pub fn cover(&self, q: &BinMeasure) -> Result<Cover, BinomialError> {
        if let Some(m) = self.member_of(q)? {
            return Ok(self.certify(q, m.clone(), m, CoverCase::Identity));
        }
        let p = &self.params;
        let pair_through_u = |u: &Rational| AltMember::Pair { d: self.f().inverse_eval(u).expect("u lies in the range of f") };
        let (q1, q2, case) = match self.regime {
            Regime::Separated => (AltMember::Pair { d: q.d.clone() }, pair_through_u(&q.u), CoverCase::Separated),
            Regime::Overlapping => {
                let d_low = q.d < p.u0;
                let u_high = q.u > p.big_d0;
                let q1 = if d_low { AltMember::Pair { d: q.d.clone() } } else { AltMember::Point { a: q.d.clone() } };
                let q2 = if u_high { pair_through_u(&q.u) } else { AltMember::Point { a: q.u.clone() } };
                let case = match (d_low, u_high) {
                    (true, true) => CoverCase::I,
                    (false, true) => CoverCase::II,
                    (true, false) => CoverCase::III,
                    (false, false) => CoverCase::IV,
                };
                (q1, q2, case)
            }
        };
        Ok(self.certify(q, q1, q2, case))
    }

    fn certify(&self, q: &BinMeasure, q1: AltMember, q2: AltMember, case: CoverCase) -> Cover {
        let mut covered = self.support_of(&q1);
        covered.extend(self.support_of(&q2));
        let sound = q.support().is_subset(&covered);
        let half = Rational::new(1.into(), 2.into());
        let avg = mix(&[half.clone(), half], &[self.as_bin(&q1).law(), self.as_bin(&q2).law()]).expect("valid weights");
        let dominated = is_abs_continuous(q.law().as_signed(), avg.as_signed());
        Cover { q1, q2, case, sound, dominated }
    }

    /// Evenly spaced pair members, `count` ≥ 2, including the left endpoint.
    pub fn pair_grid(&self, count: usize) -> Vec<AltMember> {
        let lo = self.params.d0.clone();
        let hi = self.params.m0().clone();
        grid_points(&lo, &hi, count)
            .into_iter()
            .filter(|d| self.pair_domain().contains(d))
            .map(|d| AltMember::Pair { d })
            .collect()
    }

    pub fn point_grid(&self, count: usize) -> Vec<AltMember> {
        if self.regime == Regime::Separated {
            return Vec::new();
        }
        grid_points(&self.params.u0, &self.params.big_d0, count).into_iter().map(|a| AltMember::Point { a }).collect()
    }
}

/// `count` evenly spaced rationals from lo to hi inclusive.
pub fn grid_points(lo: &Rational, hi: &Rational, count: usize) -> Vec<Rational> {
    match count {
        0 => Vec::new(),
        1 => vec![lo.clone()],
        _ => {
            let step = (hi - lo) / Rational::from_integer((count as i64 - 1).into());
            let mut out: Vec<Rational> = (0..count).map(|k| lo + &step * Rational::from_integer((k as i64).into())).collect();
            out.dedup();
            out
        }
    }
}

/// Rationals k/denominator in [lo, hi].
pub fn denominator_grid(lo: &Rational, hi: &Rational, denominator: u32) -> Vec<Rational> {
    let den: Rational = Rational::from_integer(denominator.into());
    let start = (lo * &den).ceil().to_integer();
    let end = (hi * &den).floor().to_integer();
    num_iter(start, end).map(|k| Rational::new(k, den.to_integer())).collect()
}

fn num_iter(start: num_bigint::BigInt, end: num_bigint::BigInt) -> impl Iterator<Item = num_bigint::BigInt> {
    std::iter::successors(Some(start), |k| Some(k + 1)).take_while(move |k| *k <= end)
}

/// First pair of distinct members whose supports meet, with the shared point.
pub fn find_support_collision(alt: &DisjointAlternative, members: &[AltMember]) -> Option<(AltMember, AltMember, Rational)> {
    let mut seen: std::collections::BTreeMap<Rational, &AltMember> = std::collections::BTreeMap::new();
    for m in members {
        for x in alt.support_of(m) {
            match seen.get(&x) {
                Some(&other) if other != m => return Some((other.clone(), m.clone(), x)),
                _ => {
                    seen.insert(x, m);
                }
            }
        }
    }
    None
}

/// NA for a single law with S₀ = 1: an up-move is charged iff a down-move is.
pub fn check_na_single(r: &BinMeasure) -> bool {
    let one = Rational::one();
    let up = r.u > one || r.d > one;
    let down = r.u < one || r.d < one;
    up == down
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustNa {
    pub holds: bool,
    /// A member charging S₁ − S₀ > 0, if one exists.
    pub up_witness: Option<BinMeasure>,
    /// A member charging S₁ − S₀ < 0, if one exists.
    pub down_witness: Option<BinMeasure>,
    /// π₀δ_{U₀} + (1−π₀)δ_{d₀}, charging both directions when d₀ < 1 < U₀.
    pub two_sided_witness: Option<BinMeasure>,
    pub explanation: String,
}

/// NA over the whole parameter box: some member moves up iff some member moves down.
pub fn check_na_robust(p: &ModelParams) -> RobustNa {
    let one = Rational::one();
    let up_point = (&p.big_u0).max(&p.big_d0);
    let down_point = (&p.u0).min(&p.d0);
    let up_witness = (up_point > &one).then(|| BinMeasure::new(p.big_u0.clone(), p.big_d0.clone(), p.pi0.clone()));
    let down_witness = (down_point < &one).then(|| BinMeasure::new(p.u0.clone(), p.d0.clone(), p.pi0.clone()));
    let two_sided_witness =
        (p.d0 < one && p.big_u0 > one).then(|| BinMeasure::new(p.big_u0.clone(), p.d0.clone(), p.pi0.clone()));
    let holds = up_witness.is_some() == down_witness.is_some();
    let explanation = match (&up_witness, &down_witness) {
        (Some(_), Some(_)) => "some member moves up and some member moves down".to_string(),
        (None, None) => "no member moves the price".to_string(),
        (Some(_), None) => format!("min(u0, d0) = {} >= 1, so no member moves down", format_rational(down_point)),
        (None, Some(_)) => format!("max(U0, D0) = {} <= 1, so no member moves up", format_rational(up_point)),
    };
    RobustNa { holds, up_witness, down_witness, two_sided_witness, explanation }
}

/// A member of the box failing single-law NA, if there is one.
pub fn find_na_violating_member(p: &ModelParams) -> Option<BinMeasure> {
    [
        BinMeasure::new(p.u0.clone(), p.d0.clone(), p.pi0.clone()),
        BinMeasure::new(p.big_u0.clone(), p.big_d0.clone(), p.pi0.clone()),
    ]
    .into_iter()
    .find(|r| !check_na_single(r))
}

/// A family of sampled laws from the box together with the alternative's
/// members that cover them, as a finite localization over point atoms.
pub fn sampled_localization(
    alt: &DisjointAlternative,
    sample: &[BinMeasure],
) -> Result<(MeasureFamily, Localization), BinomialError> {
    let mut members: BTreeSet<AltMember> = BTreeSet::new();
    for q in sample {
        let c = alt.cover(q)?;
        members.insert(c.q1);
        members.insert(c.q2);
    }
    let mut laws: Vec<ProbabilityMeasure> = sample.iter().map(BinMeasure::law).collect();
    laws.extend(members.iter().map(|m| alt.as_bin(m).law()));
    let family = MeasureFamily::new(laws).expect("sample or cover is nonempty");
    let loc = Localization::with_labels(
        members.iter().map(|m| alt.as_bin(m).law()).collect(),
        members.iter().map(|m| alt.as_bin(m).support_atoms()).collect(),
        members.iter().map(ToString::to_string).collect(),
    )
    .expect("each member lives on its support");
    Ok((family, loc))
}
