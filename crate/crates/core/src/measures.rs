//! Finitely supported signed measures with exact rational weights.
//!
//! Every subset of atoms is measurable, so absolute continuity and singularity
//! reduce to support inclusion and support disjointness. Weights are stored in
//! canonical form: zero weights are never kept, so the support of a measure is
//! exactly the key set of its weight map.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, Rational};

/// A point of the sample space.
///
/// Point atoms (those carrying a `value`) use the canonical `p/q` text of the
/// value as their id, so equal values always mean equal ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    id: String,
    value: Option<Rational>,
}

impl Atom {
    pub fn named(id: impl Into<String>) -> Self {
        Atom { id: id.into(), value: None }
    }

    pub fn point(value: Rational) -> Self {
        Atom { id: format_rational(&value), value: Some(value) }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn value(&self) -> Option<&Rational> {
        self.value.as_ref()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(_) => write!(f, "@{}", self.id),
            None => f.write_str(&self.id),
        }
    }
}

pub type AtomSet = BTreeSet<Atom>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("weights sum to {0}, expected exactly 1")]
    NotNormalized(String),
    #[error("negative weight {weight} on atom {atom}")]
    NegativeWeight { atom: String, weight: String },
    #[error("mixture has {weights} weights but {measures} measures")]
    LengthMismatch { weights: usize, measures: usize },
    #[error("mixture weights must be nonnegative")]
    NegativeMixtureWeight,
    #[error("mixture of zero measures")]
    EmptyMixture,
    #[error("truncation weights sum to {0}, which exceeds 1")]
    TruncationOverflow(String),
}

/// A finite signed measure: a finite map from atoms to nonzero rationals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SignedMeasure {
    weights: BTreeMap<Atom, Rational>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(atom: Atom) -> Self {
        Self::from_weights([(atom, Rational::one())])
    }

    /// Builds a measure, summing repeated atoms and dropping zero weights.
    pub fn from_weights<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (Atom, Rational)>,
    {
        let mut map: BTreeMap<Atom, Rational> = BTreeMap::new();
        for (atom, w) in weights {
            *map.entry(atom).or_insert_with(Rational::zero) += w;
        }
        map.retain(|_, w| !w.is_zero());
        SignedMeasure { weights: map }
    }

    pub fn weights(&self) -> &BTreeMap<Atom, Rational> {
        &self.weights
    }

    pub fn weight(&self, atom: &Atom) -> Rational {
        self.weights.get(atom).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> AtomSet {
        self.weights.keys().cloned().collect()
    }

    pub fn charges(&self, atom: &Atom) -> bool {
        self.weights.contains_key(atom)
    }

    /// μ(F) for a set of atoms F.
    pub fn mass<'a, I>(&self, atoms: I) -> Rational
    where
        I: IntoIterator<Item = &'a Atom>,
    {
        atoms.into_iter().filter_map(|a| self.weights.get(a)).fold(Rational::zero(), |acc, w| acc + w)
    }

    pub fn total(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    /// The total variation measure |μ|.
    pub fn abs(&self) -> SignedMeasure {
        SignedMeasure { weights: self.weights.iter().map(|(a, w)| (a.clone(), w.abs())).collect() }
    }

    /// μ restricted to a set of atoms: F ↦ μ(F ∩ S).
    pub fn restrict(&self, set: &AtomSet) -> SignedMeasure {
        SignedMeasure {
            weights: self.weights.iter().filter(|(a, _)| set.contains(*a)).map(|(a, w)| (a.clone(), w.clone())).collect(),
        }
    }

    pub fn scale(&self, factor: &Rational) -> SignedMeasure {
        if factor.is_zero() {
            return SignedMeasure::zero();
        }
        SignedMeasure { weights: self.weights.iter().map(|(a, w)| (a.clone(), w * factor)).collect() }
    }

    pub fn add(&self, other: &SignedMeasure) -> SignedMeasure {
        Self::from_weights(self.weights.iter().chain(other.weights.iter()).map(|(a, w)| (a.clone(), w.clone())))
    }

    pub fn sub(&self, other: &SignedMeasure) -> SignedMeasure {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.values().all(|w| w.is_positive())
    }
}

impl fmt::Display for SignedMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (atom, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", atom, format_rational(w))?;
        }
        f.write_str("}")
    }
}

/// A signed measure with positive weights summing to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityMeasure(SignedMeasure);

impl ProbabilityMeasure {
    pub fn new(measure: SignedMeasure) -> Result<Self, MeasureError> {
        if let Some((atom, w)) = measure.weights.iter().find(|(_, w)| w.is_negative()) {
            return Err(MeasureError::NegativeWeight { atom: atom.to_string(), weight: format_rational(w) });
        }
        let total = measure.total();
        if !total.is_one() {
            return Err(MeasureError::NotNormalized(format_rational(&total)));
        }
        Ok(ProbabilityMeasure(measure))
    }

    pub fn from_weights<I>(weights: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (Atom, Rational)>,
    {
        Self::new(SignedMeasure::from_weights(weights))
    }

    pub fn dirac(atom: Atom) -> Self {
        ProbabilityMeasure(SignedMeasure::dirac(atom))
    }

    pub fn as_signed(&self) -> &SignedMeasure {
        &self.0
    }

    pub fn into_signed(self) -> SignedMeasure {
        self.0
    }

    pub fn support(&self) -> AtomSet {
        self.0.support()
    }

    pub fn mass<'a, I>(&self, atoms: I) -> Rational
    where
        I: IntoIterator<Item = &'a Atom>,
    {
        self.0.mass(atoms)
    }

    pub fn weight(&self, atom: &Atom) -> Rational {
        self.0.weight(atom)
    }

    pub fn charges(&self, atom: &Atom) -> bool {
        self.0.charges(atom)
    }
}

impl fmt::Display for ProbabilityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// ‖μ‖_TV = |μ|(Ω) = Σ |weight|.
pub fn tv_norm(mu: &SignedMeasure) -> Rational {
    mu.weights.values().fold(Rational::zero(), |acc, w| acc + w.abs())
}

/// Result of splitting a signed measure into its positive and negative parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HahnJordan {
    pub positive: SignedMeasure,
    pub negative: SignedMeasure,
    pub positive_set: AtomSet,
    pub negative_set: AtomSet,
}

pub fn hahn_jordan(mu: &SignedMeasure) -> HahnJordan {
    let (pos, neg): (Vec<_>, Vec<_>) = mu.weights.iter().partition(|(_, w)| w.is_positive());
    let positive = SignedMeasure::from_weights(pos.iter().map(|(a, w)| ((*a).clone(), (*w).clone())));
    let negative = SignedMeasure::from_weights(neg.iter().map(|(a, w)| ((*a).clone(), -(*w).clone())));
    HahnJordan { positive_set: positive.support(), negative_set: negative.support(), positive, negative }
}

/// μ ≪ ν, i.e. supp |μ| ⊆ supp |ν|.
pub fn is_abs_continuous(mu: &SignedMeasure, nu: &SignedMeasure) -> bool {
    mu.weights.keys().all(|a| nu.charges(a))
}

/// μ ⟂ ν, i.e. supp |μ| ∩ supp |ν| = ∅.
pub fn is_singular(mu: &SignedMeasure, nu: &SignedMeasure) -> bool {
    mu.weights.keys().all(|a| !nu.charges(a))
}

/// Splits μ into the part living on supp |ν| and the rest.
pub fn lebesgue_decompose(mu: &SignedMeasure, nu: &SignedMeasure) -> (SignedMeasure, SignedMeasure) {
    let (ac, sing): (BTreeMap<_, _>, BTreeMap<_, _>) =
        mu.weights.iter().map(|(a, w)| (a.clone(), w.clone())).partition(|(a, _)| nu.charges(a));
    (SignedMeasure { weights: ac }, SignedMeasure { weights: sing })
}

/// The exact convex combination Σ wᵢ Pᵢ.
pub fn mix(weights: &[Rational], measures: &[ProbabilityMeasure]) -> Result<ProbabilityMeasure, MeasureError> {
    if weights.len() != measures.len() {
        return Err(MeasureError::LengthMismatch { weights: weights.len(), measures: measures.len() });
    }
    if measures.is_empty() {
        return Err(MeasureError::EmptyMixture);
    }
    if weights.iter().any(|w| w.is_negative()) {
        return Err(MeasureError::NegativeMixtureWeight);
    }
    let sum = weights.iter().fold(Rational::zero(), |acc, w| acc + w);
    if !sum.is_one() {
        return Err(MeasureError::NotNormalized(format_rational(&sum)));
    }
    let combined = SignedMeasure::from_weights(
        weights.iter().zip(measures).flat_map(|(w, m)| m.0.weights.iter().map(move |(a, x)| (a.clone(), w * x))),
    );
    Ok(ProbabilityMeasure(combined))
}

/// A finite prefix of a σ-convex combination Σₖ αₖ Pₖ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaTruncation {
    /// Σ over the prefix; a sub-probability measure of mass 1 − `residual`.
    pub partial: SignedMeasure,
    /// Weight of the omitted tail.
    pub residual: Rational,
}

pub fn sigma_truncation(weights: &[Rational], measures: &[ProbabilityMeasure]) -> Result<SigmaTruncation, MeasureError> {
    if weights.len() != measures.len() {
        return Err(MeasureError::LengthMismatch { weights: weights.len(), measures: measures.len() });
    }
    if weights.iter().any(|w| w.is_negative()) {
        return Err(MeasureError::NegativeMixtureWeight);
    }
    let sum = weights.iter().fold(Rational::zero(), |acc, w| acc + w);
    if sum > Rational::one() {
        return Err(MeasureError::TruncationOverflow(format_rational(&sum)));
    }
    let partial = SignedMeasure::from_weights(
        weights.iter().zip(measures).flat_map(|(w, m)| m.0.weights.iter().map(move |(a, x)| (a.clone(), w * x))),
    );
    Ok(SigmaTruncation { partial, residual: Rational::one() - sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn a() -> Atom {
        Atom::named("a")
    }
    fn b() -> Atom {
        Atom::named("b")
    }

    fn m(entries: &[(&str, Rational)]) -> SignedMeasure {
        SignedMeasure::from_weights(entries.iter().map(|(id, w)| (Atom::named(*id), w.clone())))
    }

    #[test]
    fn tv_norm_examples() {
        assert_eq!(tv_norm(&m(&[("a", int(1)), ("b", int(-1))])), int(2));
        assert_eq!(tv_norm(&SignedMeasure::zero()), int(0));
        assert_eq!(tv_norm(&m(&[("a", rat(3, 10)), ("b", rat(-7, 10))])), int(1));
    }

    #[test]
    fn hahn_jordan_examples() {
        let hj = hahn_jordan(&m(&[("a", rat(3, 10)), ("b", rat(-7, 10))]));
        assert_eq!(hj.positive, m(&[("a", rat(3, 10))]));
        assert_eq!(hj.negative, m(&[("b", rat(7, 10))]));
        assert_eq!(hj.positive_set, AtomSet::from([a()]));
        assert_eq!(hj.negative_set, AtomSet::from([b()]));

        let nonneg = m(&[("a", rat(1, 4)), ("b", rat(3, 4))]);
        let hj = hahn_jordan(&nonneg);
        assert_eq!(hj.positive, nonneg);
        assert!(hj.negative.is_zero());
        assert!(hj.negative_set.is_empty());

        let cancelled = SignedMeasure::from_weights([(a(), int(1)), (a(), int(-1))]);
        assert!(cancelled.is_zero());
        let hj = hahn_jordan(&cancelled);
        assert!(hj.positive.is_zero() && hj.negative.is_zero());
        assert!(hj.positive_set.is_empty() && hj.negative_set.is_empty());
    }

    #[test]
    fn absolute_continuity_examples() {
        let da = SignedMeasure::dirac(a());
        let half = m(&[("a", rat(1, 2)), ("b", rat(1, 2))]);
        assert!(is_abs_continuous(&da, &half));
        assert!(!is_abs_continuous(&half, &da));
        assert!(is_abs_continuous(&SignedMeasure::zero(), &da));
    }

    #[test]
    fn singularity_examples() {
        let da = SignedMeasure::dirac(a());
        let db = SignedMeasure::dirac(b());
        let half = m(&[("a", rat(1, 2)), ("b", rat(1, 2))]);
        assert!(is_singular(&da, &db));
        assert!(!is_singular(&da, &half));
        assert!(is_singular(&SignedMeasure::zero(), &half));
    }

    #[test]
    fn lebesgue_examples() {
        let half = m(&[("a", rat(1, 2)), ("b", rat(1, 2))]);
        let da = SignedMeasure::dirac(a());
        let (ac, sing) = lebesgue_decompose(&half, &da);
        assert_eq!(ac, m(&[("a", rat(1, 2))]));
        assert_eq!(sing, m(&[("b", rat(1, 2))]));

        let (ac, sing) = lebesgue_decompose(&da, &half);
        assert_eq!(ac, da);
        assert!(sing.is_zero());

        let dc = SignedMeasure::dirac(Atom::named("c"));
        let (ac, sing) = lebesgue_decompose(&dc, &da);
        assert!(ac.is_zero());
        assert_eq!(sing, dc);
    }

    #[test]
    fn mix_examples() {
        let pa = ProbabilityMeasure::dirac(a());
        let pb = ProbabilityMeasure::dirac(b());
        let got = mix(&[rat(1, 2), rat(1, 2)], &[pa.clone(), pb.clone()]).unwrap();
        assert_eq!(got.as_signed(), &m(&[("a", rat(1, 2)), ("b", rat(1, 2))]));

        assert_eq!(mix(&[int(1)], std::slice::from_ref(&pa)).unwrap(), pa);

        let half = ProbabilityMeasure::from_weights([(a(), rat(1, 2)), (b(), rat(1, 2))]).unwrap();
        let got = mix(&[rat(1, 3), rat(2, 3)], &[pa.clone(), half]).unwrap();
        assert_eq!(got.as_signed(), &m(&[("a", rat(2, 3)), ("b", rat(1, 3))]));
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let pa = ProbabilityMeasure::dirac(a());
        assert!(matches!(mix(&[rat(1, 2)], std::slice::from_ref(&pa)), Err(MeasureError::NotNormalized(_))));
        assert!(matches!(mix(&[int(1), int(0)], std::slice::from_ref(&pa)), Err(MeasureError::LengthMismatch { .. })));
        assert!(matches!(mix(&[int(2), int(-1)], &[pa.clone(), pa]), Err(MeasureError::NegativeMixtureWeight)));
    }

    #[test]
    fn probability_validation() {
        assert!(matches!(ProbabilityMeasure::from_weights([(a(), rat(9, 10))]), Err(MeasureError::NotNormalized(_))));
        assert!(matches!(
            ProbabilityMeasure::from_weights([(a(), int(2)), (b(), int(-1))]),
            Err(MeasureError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn truncation_reports_residual() {
        let pa = ProbabilityMeasure::dirac(a());
        let pb = ProbabilityMeasure::dirac(b());
        let t = sigma_truncation(&[rat(1, 2), rat(1, 4)], &[pa, pb]).unwrap();
        assert_eq!(t.residual, rat(1, 4));
        assert_eq!(t.partial.total(), rat(3, 4));
    }

    #[test]
    fn point_atoms_share_ids_by_value() {
        assert_eq!(Atom::point(rat(4, 5)), Atom::point(rat(8, 10)));
        assert_eq!(Atom::point(rat(4, 5)).id(), "4/5");
    }
}
