//! Minimax testing between two finite families of laws.
//!
//! The distance between the convex hulls and the minimax risk are each the
//! value of an exact linear program; [`min_risk`] solves both and checks
//! that the risk equals one minus the distance.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::families::{eval_functional, BoundedFunction, MeasureFamily};
use crate::lp::{solve, LinearProgram, LpError, LpStatus, Relation};
use crate::measures::{hahn_jordan, mix, tv_norm, Atom, AtomSet, ProbabilityMeasure};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestingError {
    #[error("test value {value} at `{atom}` is outside [0, 1]")]
    OutOfRange { atom: String, value: String },
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("linear program ended {0:?} on a feasible bounded instance")]
    Solver(LpStatus),
    #[error("minimax risk {risk} differs from 1 - d_tv = {expected}")]
    IdentityViolated { risk: String, expected: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestProblem {
    pub h0: MeasureFamily,
    pub h1: MeasureFamily,
    pub epsilon: Option<Rational>,
}

impl TestProblem {
    pub fn new(h0: MeasureFamily, h1: MeasureFamily) -> Self {
        TestProblem { h0, h1, epsilon: None }
    }

    pub fn universe(&self) -> AtomSet {
        let mut u = self.h0.universe();
        u.extend(self.h1.universe());
        u
    }

    pub fn swapped(&self) -> TestProblem {
        TestProblem { h0: self.h1.clone(), h1: self.h0.clone(), epsilon: self.epsilon.clone() }
    }
}

/// A randomized test: the probability of rejecting H0 at each atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestFunction(BoundedFunction);

impl TestFunction {
    pub fn new(f: BoundedFunction) -> Result<Self, TestingError> {
        let bad = |v: &Rational| v.is_negative() || *v > Rational::one();
        if bad(f.default_value()) {
            return Err(TestingError::OutOfRange { atom: "*".into(), value: format_rational(f.default_value()) });
        }
        if let Some((a, v)) = f.values().iter().find(|(_, v)| bad(v)) {
            return Err(TestingError::OutOfRange { atom: a.id().to_string(), value: format_rational(v) });
        }
        Ok(TestFunction(f))
    }

    pub fn indicator(atoms: &AtomSet) -> Self {
        TestFunction(BoundedFunction::indicator(atoms))
    }

    pub fn function(&self) -> &BoundedFunction {
        &self.0
    }

    pub fn eval(&self, atom: &Atom) -> Rational {
        self.0.eval(atom)
    }

    pub fn expectation(&self, law: &ProbabilityMeasure) -> Rational {
        eval_functional(&self.0, law.as_signed())
    }
}

fn max_expectation(phi: &TestFunction, family: &MeasureFamily) -> Rational {
    family.members().iter().map(|m| phi.expectation(m)).max().expect("families are nonempty")
}

fn min_expectation(phi: &TestFunction, family: &MeasureFamily) -> Rational {
    family.members().iter().map(|m| phi.expectation(m)).min().expect("families are nonempty")
}

/// sup_μ E_μ φ + sup_ν E_ν (1 − φ). Linear in the law, so the hull sup is a member max.
pub fn risk(phi: &TestFunction, prob: &TestProblem) -> Rational {
    max_expectation(phi, &prob.h0) + Rational::one() - min_expectation(phi, &prob.h1)
}

/// ½‖μ − ν‖ for two laws.
pub fn tv_distance(mu: &ProbabilityMeasure, nu: &ProbabilityMeasure) -> Rational {
    tv_norm(&mu.as_signed().sub(nu.as_signed())) / Rational::from_integer(2.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullDistance {
    pub d: Rational,
    pub mu_star: ProbabilityMeasure,
    pub nu_star: ProbabilityMeasure,
    pub weights0: Vec<Rational>,
    pub weights1: Vec<Rational>,
}

/// min ½Σ t_a over λ ∈ Δ, γ ∈ Δ with t_a ≥ |Σλμ(a) − Σγν(a)|.
pub fn min_tv_between_hulls(prob: &TestProblem) -> Result<HullDistance, TestingError> {
    let atoms: Vec<Atom> = prob.universe().into_iter().collect();
    let (k0, k1, na) = (prob.h0.len(), prob.h1.len(), atoms.len());
    let n = k0 + k1 + na;
    let mut objective = vec![Rational::zero(); n];
    for c in objective.iter_mut().skip(k0 + k1) {
        *c = Rational::new(1.into(), 2.into());
    }
    let mut lp = LinearProgram::new(objective);
    for (a, atom) in atoms.iter().enumerate() {
        // diff = Σλμ(a) − Σγν(a)
        let mut diff = vec![Rational::zero(); n];
        for (i, m) in prob.h0.members().iter().enumerate() {
            diff[i] = m.weight(atom);
        }
        for (j, m) in prob.h1.members().iter().enumerate() {
            diff[k0 + j] = -m.weight(atom);
        }
        let t = k0 + k1 + a;
        let mut upper: Vec<Rational> = diff.iter().map(|x| -x).collect();
        upper[t] = Rational::one();
        diff[t] = Rational::one();
        lp.add_constraint(upper, Relation::Ge, Rational::zero());
        lp.add_constraint(diff, Relation::Ge, Rational::zero());
    }
    let mut simplex0 = vec![Rational::zero(); n];
    let mut simplex1 = vec![Rational::zero(); n];
    simplex0[..k0].fill(Rational::one());
    simplex1[k0..k0 + k1].fill(Rational::one());
    lp.add_constraint(simplex0, Relation::Eq, Rational::one());
    lp.add_constraint(simplex1, Relation::Eq, Rational::one());

    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(TestingError::Solver(sol.status));
    }
    let weights0 = sol.x[..k0].to_vec();
    let weights1 = sol.x[k0..k0 + k1].to_vec();
    let mu_star = mix(&weights0, prob.h0.members()).expect("simplex weights");
    let nu_star = mix(&weights1, prob.h1.members()).expect("simplex weights");
    Ok(HullDistance { d: sol.objective_value, mu_star, nu_star, weights0, weights1 })
}

/// Indicator of the positive set of ν − μ.
pub fn optimal_test(mu: &ProbabilityMeasure, nu: &ProbabilityMeasure) -> TestFunction {
    TestFunction::indicator(&hahn_jordan(&nu.as_signed().sub(mu.as_signed())).positive_set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiSource {
    /// The indicator from the optimal hull pair.
    Indicator,
    /// The risk program's optimizer; used when the indicator is not minimax.
    LpVertex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSolution {
    pub d_tv: Rational,
    pub mu_star: ProbabilityMeasure,
    pub nu_star: ProbabilityMeasure,
    pub weights0: Vec<Rational>,
    pub weights1: Vec<Rational>,
    pub phi_star: TestFunction,
    pub phi_source: PhiSource,
    pub phi_lp: TestFunction,
    pub min_risk: Rational,
}

/// Minimizes s + t over φ ∈ [0,1]^atoms with s ≥ E_μ φ and t ≥ 1 − E_ν φ for
/// every member, then checks min_risk = 1 − d_tv.
pub fn min_risk(prob: &TestProblem) -> Result<TestSolution, TestingError> {
    let hull = min_tv_between_hulls(prob)?;
    let atoms: Vec<Atom> = prob.universe().into_iter().collect();
    let na = atoms.len();
    let (s, t) = (na, na + 1);
    let mut objective = vec![Rational::zero(); na + 2];
    objective[s] = Rational::one();
    objective[t] = Rational::one();
    let mut lp = LinearProgram::new(objective);
    for a in 0..na {
        lp.set_bounds(a, Some(Rational::zero()), Some(Rational::one()));
    }
    lp.set_bounds(s, None, None).set_bounds(t, None, None);
    for m in prob.h0.members() {
        let mut row: Vec<Rational> = atoms.iter().map(|a| -m.weight(a)).collect();
        row.extend([Rational::one(), Rational::zero()]);
        lp.add_constraint(row, Relation::Ge, Rational::zero());
    }
    for m in prob.h1.members() {
        let mut row: Vec<Rational> = atoms.iter().map(|a| m.weight(a)).collect();
        row.extend([Rational::zero(), Rational::one()]);
        lp.add_constraint(row, Relation::Ge, Rational::one());
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(TestingError::Solver(sol.status));
    }
    let value = sol.objective_value;
    let expected = Rational::one() - &hull.d;
    if value != expected {
        return Err(TestingError::IdentityViolated { risk: format_rational(&value), expected: format_rational(&expected) });
    }
    let phi_lp = TestFunction(BoundedFunction::new(atoms.iter().cloned().zip(sol.x[..na].iter().cloned()), Rational::zero()));
    let indicator = optimal_test(&hull.mu_star, &hull.nu_star);
    let (phi_star, phi_source) =
        if risk(&indicator, prob) == value { (indicator, PhiSource::Indicator) } else { (phi_lp.clone(), PhiSource::LpVertex) };
    Ok(TestSolution {
        d_tv: hull.d,
        mu_star: hull.mu_star,
        nu_star: hull.nu_star,
        weights0: hull.weights0,
        weights1: hull.weights1,
        phi_star,
        phi_source,
        phi_lp,
        min_risk: value,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnbiasedWitness {
    pub phi: TestFunction,
    /// inf_ν E_ν φ − sup_μ E_μ φ; exceeds ε.
    pub gap: Rational,
}

/// A test with inf over H1 of E φ > sup over H0 of E φ + ε exists iff d_tv > ε.
pub fn strictly_unbiased_exists(prob: &TestProblem, epsilon: &Rational) -> Result<Option<UnbiasedWitness>, TestingError> {
    if epsilon.is_negative() {
        return Err(TestingError::NegativeEpsilon(format_rational(epsilon)));
    }
    let sol = min_risk(prob)?;
    if sol.d_tv <= *epsilon {
        return Ok(None);
    }
    let gap = min_expectation(&sol.phi_star, &prob.h1) - max_expectation(&sol.phi_star, &prob.h0);
    debug_assert!(gap > *epsilon);
    Ok(Some(UnbiasedWitness { phi: sol.phi_star, gap }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn atom(s: &str) -> Atom {
        Atom::named(s)
    }

    fn bern(p: Rational) -> ProbabilityMeasure {
        ProbabilityMeasure::from_weights([(atom("h"), Rational::one() - &p), (atom("t"), p)]).unwrap()
    }

    fn fam(ms: Vec<ProbabilityMeasure>) -> MeasureFamily {
        MeasureFamily::new(ms).unwrap()
    }

    fn bern_problem() -> TestProblem {
        TestProblem::new(fam(vec![bern(rat(3, 10))]), fam(vec![bern(rat(7, 10))]))
    }

    fn dirac(s: &str) -> ProbabilityMeasure {
        ProbabilityMeasure::dirac(atom(s))
    }

    #[test]
    fn risk_examples() {
        let p = bern_problem();
        let t = TestFunction::indicator(&AtomSet::from([atom("t")]));
        assert_eq!(risk(&t, &p), rat(3, 5));
        assert_eq!(risk(&TestFunction::new(BoundedFunction::constant(int(0))).unwrap(), &p), int(1));
        assert_eq!(risk(&TestFunction::new(BoundedFunction::constant(int(1))).unwrap(), &p), int(1));
        assert!(TestFunction::new(BoundedFunction::constant(rat(3, 2))).is_err());
    }

    #[test]
    fn hull_distance_examples() {
        assert_eq!(min_tv_between_hulls(&bern_problem()).unwrap().d, rat(2, 5));
        let half = ProbabilityMeasure::from_weights([(atom("a"), rat(1, 2)), (atom("b"), rat(1, 2))]).unwrap();
        let p = TestProblem::new(fam(vec![dirac("a"), dirac("b")]), fam(vec![half]));
        assert_eq!(min_tv_between_hulls(&p).unwrap().d, int(0));
        let p = TestProblem::new(fam(vec![dirac("a")]), fam(vec![dirac("b"), dirac("c")]));
        assert_eq!(min_tv_between_hulls(&p).unwrap().d, int(1));
    }

    #[test]
    fn optimal_test_examples() {
        let t = optimal_test(&bern(rat(3, 10)), &bern(rat(7, 10)));
        assert_eq!(t, TestFunction::indicator(&AtomSet::from([atom("t")])));
        let p = bern(rat(1, 3));
        assert_eq!(optimal_test(&p, &p), TestFunction::indicator(&AtomSet::new()));
        assert_eq!(optimal_test(&dirac("a"), &dirac("b")), TestFunction::indicator(&AtomSet::from([atom("b")])));
    }

    #[test]
    fn min_risk_examples() {
        let sol = min_risk(&bern_problem()).unwrap();
        assert_eq!(sol.min_risk, rat(3, 5));
        assert_eq!(sol.phi_source, PhiSource::Indicator);
        assert_eq!(sol.phi_star, TestFunction::indicator(&AtomSet::from([atom("t")])));

        let same = TestProblem::new(fam(vec![bern(rat(1, 4))]), fam(vec![bern(rat(1, 4))]));
        let sol = min_risk(&same).unwrap();
        assert_eq!((sol.min_risk, sol.d_tv), (int(1), int(0)));

        let disjoint = TestProblem::new(fam(vec![dirac("a")]), fam(vec![dirac("b"), dirac("c")]));
        assert_eq!(min_risk(&disjoint).unwrap().min_risk, int(0));
    }

    /// A brute-force oracle over φ ∈ {0, 1/10, ..., 1}² for the Bernoulli pair.
    #[test]
    fn bernoulli_risk_grid_oracle() {
        let p = bern_problem();
        let grid: Vec<Rational> = (0..=10).map(|k| rat(k, 10)).collect();
        let best = grid
            .iter()
            .flat_map(|h| grid.iter().map(move |t| (h, t)))
            .map(|(h, t)| {
                let f = BoundedFunction::new([(atom("h"), h.clone()), (atom("t"), t.clone())], int(0));
                risk(&TestFunction::new(f).unwrap(), &p)
            })
            .min()
            .unwrap();
        assert_eq!(best, rat(3, 5));
    }

    #[test]
    fn unbiased_examples() {
        let p = bern_problem();
        let w = strictly_unbiased_exists(&p, &rat(3, 10)).unwrap().unwrap();
        assert_eq!(w.gap, rat(2, 5));
        assert_eq!(w.phi, TestFunction::indicator(&AtomSet::from([atom("t")])));
        assert!(strictly_unbiased_exists(&p, &rat(2, 5)).unwrap().is_none());
        let disjoint = TestProblem::new(fam(vec![dirac("a")]), fam(vec![dirac("b"), dirac("c")]));
        assert!(strictly_unbiased_exists(&disjoint, &rat(99, 100)).unwrap().is_some());
        assert!(strictly_unbiased_exists(&p, &rat(-1, 10)).is_err());
    }

    const ATOMS: [&str; 4] = ["a", "b", "c", "d"];

    fn arb_law() -> impl Strategy<Value = ProbabilityMeasure> {
        proptest::collection::vec(0u32..5, ATOMS.len()).prop_filter("nonzero", |w| w.iter().any(|&x| x > 0)).prop_map(|w| {
            let total: u32 = w.iter().sum();
            ProbabilityMeasure::from_weights(
                ATOMS.iter().zip(&w).filter(|(_, &x)| x > 0).map(|(a, &x)| (atom(a), rat(x as i64, total as i64))),
            )
            .unwrap()
        })
    }

    fn arb_problem() -> impl Strategy<Value = TestProblem> {
        (proptest::collection::vec(arb_law(), 1..=3), proptest::collection::vec(arb_law(), 1..=3))
            .prop_map(|(a, b)| TestProblem::new(fam(a), fam(b)))
    }

    fn arb_phi() -> impl Strategy<Value = TestFunction> {
        proptest::collection::vec(0i64..=4, ATOMS.len()).prop_map(|v| {
            let f = BoundedFunction::new(ATOMS.iter().zip(v).map(|(a, k)| (atom(a), rat(k, 4))), int(0));
            TestFunction::new(f).unwrap()
        })
    }

    proptest! {
        #[test]
        fn kraft_identity_and_optimal_phi(p in arb_problem()) {
            let sol = min_risk(&p).unwrap();
            prop_assert_eq!(&sol.min_risk, &(Rational::one() - &sol.d_tv));
            prop_assert_eq!(risk(&sol.phi_star, &p), sol.min_risk.clone());
            prop_assert_eq!(risk(&sol.phi_lp, &p), sol.min_risk.clone());
            prop_assert!(risk(&optimal_test(&sol.mu_star, &sol.nu_star), &p) >= sol.min_risk);
            prop_assert_eq!(tv_distance(&sol.mu_star, &sol.nu_star), sol.d_tv);
        }

        #[test]
        fn weak_duality(p in arb_problem(), phi in arb_phi()) {
            let d = min_tv_between_hulls(&p).unwrap().d;
            prop_assert!(risk(&phi, &p) >= Rational::one() - d);
        }

        #[test]
        fn symmetric_and_duplicate_invariant(p in arb_problem()) {
            let d = min_tv_between_hulls(&p).unwrap().d;
            prop_assert_eq!(&min_tv_between_hulls(&p.swapped()).unwrap().d, &d);
            let mut members = p.h0.members().to_vec();
            members.push(members[0].clone());
            let dup = TestProblem::new(fam(members), p.h1.clone());
            prop_assert_eq!(min_tv_between_hulls(&dup).unwrap().d, d);
        }

        #[test]
        fn singleton_hulls_match_half_l1(a in arb_law(), b in arb_law()) {
            let p = TestProblem::new(fam(vec![a.clone()]), fam(vec![b.clone()]));
            prop_assert_eq!(min_tv_between_hulls(&p).unwrap().d, tv_distance(&a, &b));
        }
    }
}
