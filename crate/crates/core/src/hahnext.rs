//! Extension of finite signed measures on the real line to sets built from
//! the supports of a disjointly supported family.
//!
//! For μ whose atoms are covered by the supports, μ^𝒬(A) = Σ_Q μ(A ∩ S_Q)
//! over the finitely many members Q whose supports μ charges.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::binomial::{AltMember, DisjointAlternative};
use crate::families::Localization;
use crate::measures::{hahn_jordan, is_abs_continuous, tv_norm, Atom, ProbabilityMeasure, SignedMeasure};
use crate::rational::{format_rational, Rational};
use crate::realsets::{intersect_with_support, param_point, Interval, IntervalUnion, SetExpr, SupportMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HahnExtError {
    #[error("atom `{0}` is not covered by any support")]
    Uncovered(String),
    #[error("atom `{0}` carries no real value")]
    NotPointAtom(String),
    #[error("localization supports are not strictly disjoint")]
    NotStrictlyDisjoint,
    #[error("total variation {direct} differs from the per-support sum {per_support}")]
    TvMismatch { direct: String, per_support: String },
    #[error("rule is not expressible: {0}")]
    Inexpressible(String),
}

/// A support member: its label, support points and, for pairs {d, f(d)},
/// the parameter d.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ActiveMember {
    pub label: String,
    pub support: BTreeSet<Rational>,
    pub pair_param: Option<Rational>,
}

/// Finds the unique member whose support contains a point.
pub trait SupportLocator {
    fn locate(&self, x: &Rational) -> Option<ActiveMember>;
    fn support_map(&self) -> Option<&Arc<SupportMap>>;
}

impl SupportLocator for DisjointAlternative {
    fn locate(&self, x: &Rational) -> Option<ActiveMember> {
        let m = self.member_covering(x)?;
        let pair_param = match &m {
            AltMember::Pair { d } => Some(d.clone()),
            AltMember::Point { .. } => None,
        };
        Some(ActiveMember { label: m.to_string(), support: self.support_of(&m), pair_param })
    }

    fn support_map(&self) -> Option<&Arc<SupportMap>> {
        Some(DisjointAlternative::support_map(self))
    }
}

/// A strictly disjoint localization whose atoms all carry real values.
#[derive(Debug, Clone)]
pub struct PointLocalization {
    labels: Vec<String>,
    supports: Vec<BTreeSet<Rational>>,
}

impl PointLocalization {
    pub fn new(loc: &Localization) -> Result<Self, HahnExtError> {
        if !loc.is_strictly_disjoint() {
            return Err(HahnExtError::NotStrictlyDisjoint);
        }
        let supports = loc
            .supports()
            .iter()
            .map(|s| s.iter().map(|a| a.value().cloned().ok_or_else(|| HahnExtError::NotPointAtom(a.id().to_string()))).collect())
            .collect::<Result<Vec<BTreeSet<Rational>>, _>>()?;
        Ok(PointLocalization { labels: loc.labels().to_vec(), supports })
    }
}

impl SupportLocator for PointLocalization {
    fn locate(&self, x: &Rational) -> Option<ActiveMember> {
        let i = self.supports.iter().position(|s| s.contains(x))?;
        Some(ActiveMember { label: self.labels[i].clone(), support: self.supports[i].clone(), pair_param: None })
    }

    fn support_map(&self) -> Option<&Arc<SupportMap>> {
        None
    }
}

/// Rewrites μ onto canonical point atoms, summing atoms that share a value.
pub fn to_point_measure(mu: &SignedMeasure) -> Result<SignedMeasure, HahnExtError> {
    let weights = mu
        .weights()
        .iter()
        .map(|(a, w)| {
            a.value().map(|v| (Atom::point(v.clone()), w.clone())).ok_or_else(|| HahnExtError::NotPointAtom(a.id().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SignedMeasure::from_weights(weights))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedMeasure {
    base: SignedMeasure,
    active: Vec<ActiveMember>,
    map: Option<Arc<SupportMap>>,
}

pub fn extend_measure<L: SupportLocator + ?Sized>(mu: &SignedMeasure, loc: &L) -> Result<ExtendedMeasure, HahnExtError> {
    let base = to_point_measure(mu)?;
    let mut active: BTreeMap<String, ActiveMember> = BTreeMap::new();
    for atom in base.weights().keys() {
        let x = atom.value().expect("point atoms carry values");
        let m = loc.locate(x).ok_or_else(|| HahnExtError::Uncovered(atom.id().to_string()))?;
        active.entry(m.label.clone()).or_insert(m);
    }
    Ok(ExtendedMeasure { base, active: active.into_values().collect(), map: loc.support_map().cloned() })
}

impl ExtendedMeasure {
    pub fn base(&self) -> &SignedMeasure {
        &self.base
    }

    pub fn active(&self) -> &[ActiveMember] {
        &self.active
    }

    fn weight_at(&self, x: &Rational) -> Rational {
        self.base.weight(&Atom::point(x.clone()))
    }

    fn restriction(&self, m: &ActiveMember) -> SignedMeasure {
        self.base.restrict(&m.support.iter().cloned().map(Atom::point).collect())
    }

    /// μ^𝒬(A) = Σ_Q μ(A ∩ S_Q).
    pub fn eval(&self, set: &SetExpr) -> Rational {
        self.active
            .iter()
            .map(|m| {
                let points: Vec<Rational> = m.support.iter().cloned().collect();
                intersect_with_support(set, &points).iter().map(|x| self.weight_at(x)).sum::<Rational>()
            })
            .sum()
    }

    /// |μ^𝒬|(A) from the Jordan decomposition on each support.
    pub fn variation_eval(&self, set: &SetExpr) -> Rational {
        self.active
            .iter()
            .map(|m| {
                let hj = hahn_jordan(&self.restriction(m));
                let points: Vec<Rational> = m.support.iter().cloned().collect();
                intersect_with_support(set, &points)
                    .into_iter()
                    .map(|x| {
                        let a = Atom::point(x);
                        hj.positive.weight(&a) + hj.negative.weight(&a)
                    })
                    .sum::<Rational>()
            })
            .sum()
    }

    /// Σ_Q ‖μ|_{S_Q}‖.
    pub fn per_support_tv(&self) -> Rational {
        self.active.iter().map(|m| tv_norm(&self.restriction(m))).sum()
    }
}

/// ‖μ‖, checked against the per-support Jordan sum.
pub fn extended_tv(em: &ExtendedMeasure) -> Result<Rational, HahnExtError> {
    let direct = tv_norm(&em.base);
    let per_support = em.per_support_tv();
    if direct != per_support {
        return Err(HahnExtError::TvMismatch { direct: format_rational(&direct), per_support: format_rational(&per_support) });
    }
    Ok(direct)
}

/// ‖μ‖ = |μ|^𝒬(ℝ) = ‖μ^𝒬‖, each side computed separately.
pub fn restriction_isometry_check<L: SupportLocator + ?Sized>(mu: &SignedMeasure, loc: &L) -> Result<bool, HahnExtError> {
    let em = extend_measure(mu, loc)?;
    let abs_em = extend_measure(&mu.abs(), loc)?;
    let whole = SetExpr::Interval(Interval::real_line());
    let direct = tv_norm(mu);
    Ok(direct == abs_em.eval(&whole) && direct == em.variation_eval(&whole) && direct == em.per_support_tv())
}

pub const DEFAULT_PROBE_DEPTH: usize = 2;

/// Probes built from active supports: each pair domain SU({d}), each point,
/// each support, unions of up to `depth` supports, and each complement.
pub fn generate_probes(members: &[ActiveMember], map: Option<&Arc<SupportMap>>, depth: usize) -> Vec<SetExpr> {
    let mut members: Vec<&ActiveMember> = members.iter().collect();
    members.sort();
    members.dedup();
    let support = |m: &ActiveMember| SetExpr::points(m.support.iter().cloned());
    let mut probes = Vec::new();
    if let Some(map) = map {
        for m in &members {
            if let Some(d) = &m.pair_param {
                probes.push(SetExpr::SupportUnion { params: param_point(d), map: map.clone() });
            }
        }
    }
    let points: BTreeSet<&Rational> = members.iter().flat_map(|m| m.support.iter()).collect();
    probes.extend(points.into_iter().map(|x| SetExpr::points([x.clone()])));
    probes.extend(members.iter().map(|m| support(m)));
    let mut layer: Vec<(usize, SetExpr)> = members.iter().enumerate().map(|(i, m)| (i, support(m))).collect();
    for _ in 2..=depth {
        let mut next = Vec::new();
        for (last, set) in &layer {
            for (j, m) in members.iter().enumerate().skip(last + 1) {
                next.push((j, SetExpr::union(set.clone(), support(m))));
            }
        }
        probes.extend(next.iter().map(|(_, e)| e.clone()));
        layer = next;
    }
    probes.extend(members.iter().map(|m| SetExpr::complement(support(m))));
    probes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcReport {
    /// μ ≪ P on atoms.
    pub base_ac: bool,
    /// No probe has P^𝒬(A) = 0 < |μ|^𝒬(A).
    pub extended_ac: bool,
    pub consistent: bool,
    pub witness: Option<SetExpr>,
    pub probes_checked: usize,
}

pub fn check_ac_preservation<L: SupportLocator + ?Sized>(
    mu: &SignedMeasure,
    p: &ProbabilityMeasure,
    loc: &L,
    depth: usize,
) -> Result<AcReport, HahnExtError> {
    let abs_em = extend_measure(&mu.abs(), loc)?;
    let p_em = extend_measure(p.as_signed(), loc)?;
    let mut members = abs_em.active().to_vec();
    members.extend(p_em.active().iter().cloned());
    let probes = generate_probes(&members, loc.support_map(), depth);
    let witness = probes.iter().find(|a| p_em.eval(a).is_zero() && !abs_em.eval(a).is_zero()).cloned();
    let base_ac = is_abs_continuous(&to_point_measure(mu)?, &to_point_measure(p.as_signed())?);
    let extended_ac = witness.is_none();
    Ok(AcReport { base_ac, extended_ac, consistent: base_ac == extended_ac, witness, probes_checked: probes.len() })
}

/// Which part of each support a set keeps, by parameter: {d} on
/// `lower_only`, {f(d)} on `upper_only`, {d, f(d)} on `both`, and δ_a on
/// `points`; nothing elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EssSupRule {
    pub lower_only: IntervalUnion,
    pub upper_only: IntervalUnion,
    pub both: IntervalUnion,
    pub points: IntervalUnion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtEssSupCertificate {
    /// E ∩ S_Q equals the prescribed piece for every sampled member.
    pub condition_a: bool,
    /// E is contained in the union of the pieces, checked exactly.
    pub condition_b: bool,
    pub members_checked: usize,
    /// Always false: the member sample certifies but cannot prove (a).
    pub exhaustive: bool,
}

impl EssSupRule {
    fn piece(&self, alt: &DisjointAlternative, m: &AltMember) -> BTreeSet<Rational> {
        match m {
            AltMember::Pair { d } => {
                let u = alt.f().eval(d).expect("member in domain");
                if self.both.contains(d) {
                    BTreeSet::from([d.clone(), u])
                } else if self.lower_only.contains(d) {
                    BTreeSet::from([d.clone()])
                } else if self.upper_only.contains(d) {
                    BTreeSet::from([u])
                } else {
                    BTreeSet::new()
                }
            }
            AltMember::Point { a } if self.points.contains(a) => BTreeSet::from([a.clone()]),
            AltMember::Point { .. } => BTreeSet::new(),
        }
    }
}

/// Glues the pieces of a rule into one set and certifies it.
pub fn extended_ess_sup(
    alt: &DisjointAlternative,
    rule: &EssSupRule,
    samples_per_component: usize,
) -> Result<(SetExpr, ExtEssSupCertificate), HahnExtError> {
    let domains = [("lower_only", &rule.lower_only), ("upper_only", &rule.upper_only), ("both", &rule.both)];
    for (name, dom) in domains {
        if !dom.is_subset(alt.pair_domain()) {
            return Err(HahnExtError::Inexpressible(format!("{name} leaves the pair parameters {}", alt.pair_domain())));
        }
    }
    for (i, (n1, a)) in domains.iter().enumerate() {
        for (n2, b) in &domains[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(HahnExtError::Inexpressible(format!("{n1} and {n2} overlap")));
            }
        }
    }
    if !rule.points.is_subset(&alt.point_domain()) {
        return Err(HahnExtError::Inexpressible("points leave the point-mass parameters".into()));
    }

    let f = alt.f();
    let map = alt.support_map();
    let upper = f.image(&rule.upper_only);
    let mut parts: Vec<SetExpr> = Vec::new();
    for plain in [&rule.lower_only, &upper, &rule.points] {
        if !plain.is_empty() {
            parts.push(plain.to_expr());
        }
    }
    if !rule.both.is_empty() {
        parts.push(SetExpr::SupportUnion { params: rule.both.clone(), map: map.clone() });
    }
    let e = parts.into_iter().reduce(SetExpr::union).unwrap_or_else(SetExpr::empty);

    let realized = rule.lower_only.union(&upper).union(&map.realize(&rule.both)).union(&rule.points);
    let condition_b = realized.is_subset(&alt.covered_points());

    let mut sample: BTreeSet<AltMember> = alt.pair_grid(samples_per_component).into_iter().collect();
    sample.extend(alt.point_grid(samples_per_component));
    for dom in [&rule.lower_only, &rule.upper_only, &rule.both, &rule.points] {
        for part in dom.parts() {
            for x in [part.lo(), part.hi()].into_iter().flatten() {
                if let Some(m) = alt.member_covering(x) {
                    sample.insert(m);
                }
            }
        }
    }
    let condition_a = sample.iter().all(|m| {
        let s: Vec<Rational> = alt.support_of(m).into_iter().collect();
        intersect_with_support(&e, &s) == rule.piece(alt, m)
    });
    Ok((e, ExtEssSupCertificate { condition_a, condition_b, members_checked: sample.len(), exhaustive: false }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::{build_alternative, ModelParams};
    use crate::measures::SignedMeasure;
    use crate::rational::{int, rat};
    use crate::realsets::member;
    use proptest::prelude::*;

    fn alt() -> DisjointAlternative {
        let p = ModelParams::new(rat(11, 10), rat(13, 10), rat(7, 10), rat(9, 10), rat(2, 5), rat(3, 5));
        build_alternative(&p, None, None).unwrap()
    }

    fn pt(x: Rational) -> Atom {
        Atom::point(x)
    }

    fn signed(ws: &[(Rational, Rational)]) -> SignedMeasure {
        SignedMeasure::from_weights(ws.iter().map(|(x, w)| (pt(x.clone()), w.clone())))
    }

    fn closed(a: Rational, b: Rational) -> IntervalUnion {
        IntervalUnion::from_intervals([Interval::closed(a, b).unwrap()])
    }

    #[test]
    fn extension_examples() {
        let a = alt();
        let mu = signed(&[(rat(8, 10), rat(3, 10)), (rat(12, 10), rat(7, 10))]);
        let em = extend_measure(&mu, &a).unwrap();
        assert_eq!(em.active().len(), 1);
        let su = SetExpr::support_union(closed(rat(75, 100), rat(85, 100)), a.support_map().clone()).unwrap();
        assert_eq!(em.eval(&su), int(1));
        assert_eq!(em.eval(&SetExpr::empty()), int(0));
        let plain = SetExpr::Interval(Interval::closed_open(int(0), int(1)).unwrap());
        assert_eq!(em.eval(&plain), rat(3, 10));
    }

    #[test]
    fn uncovered_atoms_are_named() {
        let mu = signed(&[(int(1), int(1))]);
        assert_eq!(extend_measure(&mu, &alt()), Err(HahnExtError::Uncovered("1/1".into())));
        let named = SignedMeasure::dirac(Atom::named("x"));
        assert_eq!(extend_measure(&named, &alt()), Err(HahnExtError::NotPointAtom("x".into())));
    }

    #[test]
    fn tv_examples() {
        let a = alt();
        let split = signed(&[(rat(8, 10), int(1)), (rat(12, 10), int(-1))]);
        assert_eq!(extended_tv(&extend_measure(&split, &a).unwrap()).unwrap(), int(2));
        let across = signed(&[(rat(8, 10), int(1)), (rat(7, 10), int(-1))]);
        assert_eq!(extended_tv(&extend_measure(&across, &a).unwrap()).unwrap(), int(2));
        let pos = signed(&[(rat(8, 10), rat(1, 4)), (rat(75, 100), rat(1, 4))]);
        assert_eq!(extended_tv(&extend_measure(&pos, &a).unwrap()).unwrap(), rat(1, 2));
        let mixed = signed(&[(rat(8, 10), rat(3, 10)), (rat(12, 10), rat(-7, 10))]);
        assert_eq!(extended_tv(&extend_measure(&mixed, &a).unwrap()).unwrap(), int(1));
        assert!(restriction_isometry_check(&mixed, &a).unwrap());
        assert!(restriction_isometry_check(&SignedMeasure::zero(), &a).unwrap());
    }

    #[test]
    fn ac_examples() {
        let a = alt();
        let p = ProbabilityMeasure::from_weights([(pt(rat(8, 10)), rat(1, 2)), (pt(rat(12, 10)), rat(1, 2))]).unwrap();
        let mu = signed(&[(rat(8, 10), int(2)), (rat(12, 10), int(-1))]);
        let r = check_ac_preservation(&mu, &p, &a, DEFAULT_PROBE_DEPTH).unwrap();
        assert!(r.base_ac && r.extended_ac && r.consistent);

        let mu = signed(&[(rat(7, 10), int(1))]);
        let r = check_ac_preservation(&mu, &p, &a, DEFAULT_PROBE_DEPTH).unwrap();
        assert!(!r.base_ac && !r.extended_ac && r.consistent);
        let w = r.witness.unwrap();
        assert!(matches!(w, SetExpr::SupportUnion { .. }));
        assert!(member(&rat(7, 10), &w) && member(&rat(13, 10), &w));

        let r = check_ac_preservation(&SignedMeasure::zero(), &p, &a, DEFAULT_PROBE_DEPTH).unwrap();
        assert!(r.base_ac && r.consistent);
    }

    #[test]
    fn ess_sup_examples() {
        let a = alt();
        let all = EssSupRule { both: a.pair_domain().clone(), ..Default::default() };
        let (e, cert) = extended_ess_sup(&a, &all, 9).unwrap();
        assert_eq!(e, a.all_pairs());
        assert!(cert.condition_a && cert.condition_b);

        let (e, cert) = extended_ess_sup(&a, &EssSupRule::default(), 9).unwrap();
        assert_eq!(e, SetExpr::empty());
        assert!(cert.condition_a && cert.condition_b);

        let lower = EssSupRule {
            lower_only: IntervalUnion::from_intervals([Interval::closed_open(rat(7, 10), rat(8, 10)).unwrap()]),
            ..Default::default()
        };
        let (e, cert) = extended_ess_sup(&a, &lower, 9).unwrap();
        assert!(member(&rat(75, 100), &e));
        assert!(!member(&a.f().eval(&rat(75, 100)).unwrap(), &e));
        assert!(cert.condition_a && cert.condition_b);

        let overlap =
            EssSupRule { lower_only: closed(rat(7, 10), rat(8, 10)), both: closed(rat(8, 10), rat(9, 10)), ..Default::default() };
        assert!(matches!(extended_ess_sup(&a, &overlap, 9), Err(HahnExtError::Inexpressible(_))));
        let outside = EssSupRule { upper_only: closed(int(1), int(2)), ..Default::default() };
        assert!(matches!(extended_ess_sup(&a, &outside, 9), Err(HahnExtError::Inexpressible(_))));
    }

    #[test]
    fn finite_point_localization() {
        let supports = vec![[pt(rat(4, 5)), pt(rat(6, 5))].into_iter().collect(), [pt(int(2))].into_iter().collect()];
        let measures = vec![
            ProbabilityMeasure::from_weights([(pt(rat(4, 5)), rat(1, 2)), (pt(rat(6, 5)), rat(1, 2))]).unwrap(),
            ProbabilityMeasure::dirac(pt(int(2))),
        ];
        let loc = PointLocalization::new(&Localization::new(measures, supports).unwrap()).unwrap();
        let mu = signed(&[(rat(4, 5), int(1)), (int(2), int(-3))]);
        let em = extend_measure(&mu, &loc).unwrap();
        assert_eq!(em.active().len(), 2);
        assert_eq!(extended_tv(&em).unwrap(), int(4));
        assert!(restriction_isometry_check(&mu, &loc).unwrap());
    }

    fn support_points() -> Vec<Rational> {
        let a = alt();
        (0..=8)
            .flat_map(|k| {
                let d = rat(70 + 2 * k, 100);
                [a.f().eval(&d).unwrap(), d]
            })
            .collect()
    }

    fn arb_signed() -> impl Strategy<Value = SignedMeasure> {
        proptest::collection::vec(-5i64..=5, 18)
            .prop_map(|ws| signed(&support_points().into_iter().zip(ws).map(|(x, w)| (x, rat(w, 4))).collect::<Vec<_>>()))
    }

    fn arb_probe() -> impl Strategy<Value = SetExpr> {
        prop_oneof![
            (60i64..140, 0i64..40)
                .prop_map(|(lo, w)| SetExpr::Interval(Interval::closed_open(rat(lo, 100), rat(lo + w, 100)).unwrap())),
            (70i64..=90, 70i64..=90).prop_map(|(x, y)| {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                SetExpr::support_union(closed(rat(lo, 100), rat(hi, 100)), alt().support_map().clone()).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn additive_on_disjoint_probes(mu in arb_signed(), a in arb_probe(), b in arb_probe()) {
            let em = extend_measure(&mu, &alt()).unwrap();
            let b_minus_a = SetExpr::intersection(b.clone(), SetExpr::complement(a.clone()));
            let union = SetExpr::union(a.clone(), b.clone());
            prop_assert_eq!(em.eval(&union), em.eval(&a) + em.eval(&b_minus_a));
        }

        #[test]
        fn linear_in_the_measure(mu in arb_signed(), nu in arb_signed(), s in -3i64..=3, t in -3i64..=3, probe in arb_probe()) {
            let a = alt();
            let combo = mu.scale(&int(s)).add(&nu.scale(&int(t)));
            let lhs = extend_measure(&combo, &a).unwrap().eval(&probe);
            let rhs = int(s) * extend_measure(&mu, &a).unwrap().eval(&probe) + int(t) * extend_measure(&nu, &a).unwrap().eval(&probe);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn variation_commutes_with_extension(mu in arb_signed(), probe in arb_probe()) {
            let a = alt();
            let em = extend_measure(&mu, &a).unwrap();
            let abs_em = extend_measure(&mu.abs(), &a).unwrap();
            prop_assert_eq!(em.variation_eval(&probe), abs_em.eval(&probe));
            prop_assert!(restriction_isometry_check(&mu, &a).unwrap());
        }
    }
}
