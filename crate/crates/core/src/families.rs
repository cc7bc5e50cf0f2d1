//! Families of probability measures over a shared finite atom universe.
//!
//! Polar sets, supported measures, localizations and their verification, the
//! essential supremum of pieces of supports, and the level-set gluing that
//! realizes the dual pairing between bounded functions and measures.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::measures::{
    is_abs_continuous, lebesgue_decompose, mix, Atom, AtomSet, MeasureError, ProbabilityMeasure, SignedMeasure,
};
use crate::rational::{format_rational, Rational};

/// Largest universe for which exhaustive subset enumeration is allowed.
pub const EXHAUSTIVE_ATOM_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("a measure family must have at least one member")]
    EmptyFamily,
    #[error("localization has {measures} measures but {supports} supports")]
    LengthMismatch { measures: usize, supports: usize },
    #[error("localization member {index} assigns mass {mass} to its own support, expected 1")]
    SelfMass { index: usize, mass: String },
    #[error("atom {0} is outside the family's atom universe")]
    UniverseMismatch(String),
    #[error("expected {expected} pieces, got {got}")]
    PieceCount { expected: usize, got: usize },
    #[error("piece {index} is not contained in the support of its localization member (atom {atom})")]
    PieceNotInSupport { index: usize, atom: String },
    #[error("piece {index} does not vanish outside its support (atom {atom})")]
    PieceOutsideSupport { index: usize, atom: String },
    #[error("supports {0} and {1} are not disjoint")]
    NonDisjointSupports(usize, usize),
    #[error("exhaustive probing needs at most {limit} atoms, universe has {atoms}")]
    TooManyAtoms { atoms: usize, limit: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A nonempty finite ordered family of probability measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureFamily {
    members: Vec<ProbabilityMeasure>,
    extra_atoms: AtomSet,
}

impl MeasureFamily {
    pub fn new(members: Vec<ProbabilityMeasure>) -> Result<Self, FamilyError> {
        Self::with_extra_atoms(members, AtomSet::new())
    }

    /// A family whose universe also contains atoms no member charges.
    pub fn with_extra_atoms(members: Vec<ProbabilityMeasure>, extra_atoms: AtomSet) -> Result<Self, FamilyError> {
        if members.is_empty() {
            return Err(FamilyError::EmptyFamily);
        }
        Ok(MeasureFamily { members, extra_atoms })
    }

    pub fn members(&self) -> &[ProbabilityMeasure] {
        &self.members
    }

    pub fn extra_atoms(&self) -> &AtomSet {
        &self.extra_atoms
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> AtomSet {
        let mut u = self.charged_atoms();
        u.extend(self.extra_atoms.iter().cloned());
        u
    }

    /// Atoms charged by at least one member, i.e. the non-polar atoms.
    pub fn charged_atoms(&self) -> AtomSet {
        self.members.iter().flat_map(|m| m.as_signed().weights().keys().cloned()).collect()
    }

    pub fn is_polar_atom(&self, atom: &Atom) -> bool {
        self.members.iter().all(|m| !m.charges(atom))
    }

    /// Index of some member dominating μ.
    pub fn dominating_member(&self, mu: &SignedMeasure) -> Option<usize> {
        self.members.iter().position(|p| is_abs_continuous(mu, p.as_signed()))
    }
}

/// Every member assigns mass 0 to `atoms`.
pub fn is_polar(family: &MeasureFamily, atoms: &AtomSet) -> bool {
    atoms.iter().all(|a| family.is_polar_atom(a))
}

/// A family 𝒬 with declared support sets S_Q, each carrying its own measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Localization {
    measures: Vec<ProbabilityMeasure>,
    supports: Vec<AtomSet>,
    labels: Vec<String>,
}

impl Localization {
    pub fn new(measures: Vec<ProbabilityMeasure>, supports: Vec<AtomSet>) -> Result<Self, FamilyError> {
        let labels = (0..measures.len()).map(|i| format!("Q{i}")).collect();
        Self::with_labels(measures, supports, labels)
    }

    pub fn with_labels(
        measures: Vec<ProbabilityMeasure>,
        supports: Vec<AtomSet>,
        labels: Vec<String>,
    ) -> Result<Self, FamilyError> {
        if measures.len() != supports.len() || labels.len() != measures.len() {
            return Err(FamilyError::LengthMismatch { measures: measures.len(), supports: supports.len() });
        }
        for (index, (q, s)) in measures.iter().zip(&supports).enumerate() {
            let mass = q.mass(s);
            if !mass.is_one() {
                return Err(FamilyError::SelfMass { index, mass: format_rational(&mass) });
            }
        }
        Ok(Localization { measures, supports, labels })
    }

    pub fn measures(&self) -> &[ProbabilityMeasure] {
        &self.measures
    }

    pub fn supports(&self) -> &[AtomSet] {
        &self.supports
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn atoms(&self) -> AtomSet {
        let mut atoms: AtomSet = self.supports.iter().flatten().cloned().collect();
        atoms.extend(self.measures.iter().flat_map(|q| q.support()));
        atoms
    }

    pub fn is_strictly_disjoint(&self) -> bool {
        self.overlapping_pairs().is_empty()
    }

    fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.supports.len() {
            for j in i + 1..self.supports.len() {
                if !self.supports[i].is_disjoint(&self.supports[j]) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Index of the member whose support contains `atom`, first match.
    pub fn member_covering(&self, atom: &Atom) -> Option<usize> {
        self.supports.iter().position(|s| s.contains(atom))
    }
}

/// A bounded function: finitely many exceptional values over a constant default.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundedFunction {
    values: BTreeMap<Atom, Rational>,
    default: Rational,
}

impl Default for BoundedFunction {
    fn default() -> Self {
        BoundedFunction::constant(Rational::zero())
    }
}

impl BoundedFunction {
    pub fn constant(value: Rational) -> Self {
        BoundedFunction { values: BTreeMap::new(), default: value }
    }

    pub fn new<I>(values: I, default: Rational) -> Self
    where
        I: IntoIterator<Item = (Atom, Rational)>,
    {
        let values = values.into_iter().filter(|(_, v)| *v != default).collect();
        BoundedFunction { values, default }
    }

    pub fn indicator(atoms: &AtomSet) -> Self {
        Self::new(atoms.iter().map(|a| (a.clone(), Rational::one())), Rational::zero())
    }

    pub fn eval(&self, atom: &Atom) -> Rational {
        self.values.get(atom).cloned().unwrap_or_else(|| self.default.clone())
    }

    pub fn values(&self) -> &BTreeMap<Atom, Rational> {
        &self.values
    }

    pub fn default_value(&self) -> &Rational {
        &self.default
    }

    /// Every value the function takes on any atom.
    pub fn range(&self) -> BTreeSet<Rational> {
        let mut r: BTreeSet<Rational> = self.values.values().cloned().collect();
        r.insert(self.default.clone());
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizationReport {
    /// Supports pairwise disjoint (strict) or overlapping only on polars.
    pub disjoint_ok: bool,
    pub overlapping: Vec<(usize, usize)>,
    /// Q(S_R) = δ_QR for all pairs.
    pub delta_ok: bool,
    pub delta_failures: Vec<(usize, usize, Rational)>,
    /// Each Q is dominated by some family member; witness is the member index.
    pub q_lll_p: bool,
    pub q_witnesses: Vec<Option<usize>>,
    /// Each family member is dominated by a finite mixture of 𝒬.
    pub p_lll_sconvq: bool,
    pub p_witnesses: Vec<Option<Vec<(usize, Rational)>>>,
    pub overall: bool,
}

/// Checks the localization conditions of `loc` against `family`.
pub fn verify_localization(
    family: &MeasureFamily,
    loc: &Localization,
    strict_disjoint: bool,
) -> Result<LocalizationReport, FamilyError> {
    let universe = family.universe();
    if let Some(stray) = loc.atoms().into_iter().find(|a| !universe.contains(a)) {
        return Err(FamilyError::UniverseMismatch(stray.to_string()));
    }

    let overlapping: Vec<(usize, usize)> = loc
        .overlapping_pairs()
        .into_iter()
        .filter(|&(i, j)| {
            if strict_disjoint {
                return true;
            }
            let common: AtomSet = loc.supports[i].intersection(&loc.supports[j]).cloned().collect();
            !is_polar(family, &common)
        })
        .collect();

    let mut delta_failures = Vec::new();
    for (qi, q) in loc.measures.iter().enumerate() {
        for (ri, s) in loc.supports.iter().enumerate() {
            let mass = q.mass(s);
            let expected = if qi == ri { Rational::one() } else { Rational::zero() };
            if mass != expected {
                delta_failures.push((qi, ri, mass));
            }
        }
    }

    let q_witnesses: Vec<Option<usize>> = loc.measures.iter().map(|q| family.dominating_member(q.as_signed())).collect();

    let p_witnesses: Vec<Option<Vec<(usize, Rational)>>> =
        family.members.iter().map(|p| mixture_witness(loc, p.as_signed())).collect();

    let disjoint_ok = overlapping.is_empty();
    let delta_ok = delta_failures.is_empty();
    let q_lll_p = q_witnesses.iter().all(Option::is_some);
    let p_lll_sconvq = p_witnesses.iter().all(Option::is_some);
    Ok(LocalizationReport {
        disjoint_ok,
        overlapping,
        delta_ok,
        delta_failures,
        q_lll_p,
        q_witnesses,
        p_lll_sconvq,
        p_witnesses,
        overall: disjoint_ok && delta_ok && q_lll_p && p_lll_sconvq,
    })
}

/// Uniform weights over 𝒬(μ) when μ ≪ that mixture.
///
/// Members outside 𝒬(μ) cannot help: Q lives on S_Q and |μ|(S_Q) = 0.
fn mixture_witness(loc: &Localization, mu: &SignedMeasure) -> Option<Vec<(usize, Rational)>> {
    let active = family_of_mu(loc, mu);
    if active.is_empty() {
        return if mu.is_zero() { Some(Vec::new()) } else { None };
    }
    let weight = Rational::new(1.into(), (active.len() as i64).into());
    let weights = vec![weight.clone(); active.len()];
    let measures: Vec<ProbabilityMeasure> = active.iter().map(|&i| loc.measures[i].clone()).collect();
    let mixture = mix(&weights, &measures).ok()?;
    is_abs_continuous(mu, mixture.as_signed()).then(|| active.into_iter().map(|i| (i, weight.clone())).collect())
}

/// 𝒬(μ): the localization members whose support carries positive |μ|-mass.
pub fn family_of_mu(loc: &Localization, mu: &SignedMeasure) -> Vec<usize> {
    let abs = mu.abs();
    loc.supports.iter().enumerate().filter(|(_, s)| abs.mass(*s).is_positive()).map(|(i, _)| i).collect()
}

/// Returns a support S of μ with respect to the family, or `None` when μ
/// charges a family-polar atom.
///
/// With every atom set measurable and S = supp(μ), μ(N ∩ S) = 0 forces
/// N ∩ S = ∅, so the only obstruction is domination by the family.
pub fn is_supported_measure(mu: &ProbabilityMeasure, family: &MeasureFamily) -> Option<AtomSet> {
    let support = mu.support();
    let null_pieces_polar = support.iter().all(|a| mu.charges(a) || family.is_polar_atom(a));
    let dominated = support.iter().all(|a| !family.is_polar_atom(a));
    (null_pieces_polar && dominated).then_some(support)
}

/// {δ_x : x charged by some member}, each with support {x}.
pub fn dirac_localization(family: &MeasureFamily) -> Localization {
    let atoms = family.charged_atoms();
    let labels = atoms.iter().map(|a| format!("delta_{}", a.id())).collect();
    let measures = atoms.iter().map(|a| ProbabilityMeasure::dirac(a.clone())).collect();
    let supports = atoms.into_iter().map(|a| AtomSet::from([a])).collect();
    Localization::with_labels(measures, supports, labels).expect("Dirac measures live on their own atom")
}

/// A pairwise singular localization dominating the family.
///
/// With `coarsen`, atoms charged by exactly the same members are merged into
/// one block carrying the normalized restriction of the first such member.
pub fn find_singular_countable_localization(family: &MeasureFamily, coarsen: bool) -> Localization {
    if !coarsen {
        return dirac_localization(family);
    }
    let mut blocks: BTreeMap<Vec<usize>, AtomSet> = BTreeMap::new();
    for atom in family.charged_atoms() {
        let pattern: Vec<usize> = family.members.iter().enumerate().filter(|(_, m)| m.charges(&atom)).map(|(i, _)| i).collect();
        blocks.entry(pattern).or_default().insert(atom);
    }
    let mut measures = Vec::new();
    let mut supports = Vec::new();
    let mut labels = Vec::new();
    for (pattern, block) in blocks {
        let owner = family.members[pattern[0]].as_signed().restrict(&block);
        let total = owner.total();
        let q = ProbabilityMeasure::new(owner.scale(&(Rational::one() / total))).expect("normalized restriction");
        labels.push(format!("block_{}", block.iter().map(Atom::id).collect::<Vec<_>>().join("_")));
        measures.push(q);
        supports.push(block);
    }
    Localization::with_labels(measures, supports, labels).expect("blocks carry their own restriction")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssSupCertificate {
    /// Q(E_Q \ S) = 0 for all Q.
    pub condition_a: bool,
    /// Minimality against every probe checked.
    pub condition_b: bool,
    pub probes_checked: usize,
    /// True when every subset of the universe was probed; otherwise the
    /// certificate is sound but only as strong as its probe list.
    pub exhaustive: bool,
    pub counterexample: Option<AtomSet>,
}

/// S = ∪ E_Q, certified against caller probes plus generated ones.
pub fn essential_supremum(
    family: &MeasureFamily,
    loc: &Localization,
    pieces: &[AtomSet],
    probes: &[AtomSet],
    exhaustive: bool,
) -> Result<(AtomSet, EssSupCertificate), FamilyError> {
    if pieces.len() != loc.len() {
        return Err(FamilyError::PieceCount { expected: loc.len(), got: pieces.len() });
    }
    for (index, (piece, support)) in pieces.iter().zip(&loc.supports).enumerate() {
        if let Some(a) = piece.iter().find(|a| !support.contains(*a)) {
            return Err(FamilyError::PieceNotInSupport { index, atom: a.to_string() });
        }
    }
    let sup: AtomSet = pieces.iter().flatten().cloned().collect();

    let mut universe = family.universe();
    universe.extend(loc.atoms());
    universe.extend(probes.iter().flatten().cloned());

    let condition_a = loc.measures.iter().zip(pieces).all(|(q, e)| q.mass(e.difference(&sup)).is_zero());

    let mut all_probes: Vec<AtomSet> = probes.to_vec();
    if exhaustive {
        if universe.len() > EXHAUSTIVE_ATOM_LIMIT {
            return Err(FamilyError::TooManyAtoms { atoms: universe.len(), limit: EXHAUSTIVE_ATOM_LIMIT });
        }
        all_probes.extend(all_subsets(&universe));
    } else {
        all_probes.extend(generated_probes(loc, &universe));
    }

    let mut counterexample = None;
    for f in &all_probes {
        let dominated = loc.measures.iter().zip(pieces).all(|(q, e)| q.mass(e.difference(f)).is_zero());
        if dominated && !loc.measures.iter().all(|q| q.mass(sup.difference(f)).is_zero()) {
            counterexample = Some(f.clone());
            break;
        }
    }

    Ok((
        sup,
        EssSupCertificate {
            condition_a,
            condition_b: counterexample.is_none(),
            probes_checked: all_probes.len(),
            exhaustive,
            counterexample,
        },
    ))
}

/// Supports, their complements in the universe, and pairwise unions.
pub fn generated_probes(loc: &Localization, universe: &AtomSet) -> Vec<AtomSet> {
    let mut probes: Vec<AtomSet> = vec![AtomSet::new(), universe.clone()];
    for s in &loc.supports {
        probes.push(s.clone());
        probes.push(universe.difference(s).cloned().collect());
    }
    for i in 0..loc.supports.len() {
        for j in i + 1..loc.supports.len() {
            probes.push(loc.supports[i].union(&loc.supports[j]).cloned().collect());
        }
    }
    probes
}

pub(crate) fn all_subsets(universe: &AtomSet) -> Vec<AtomSet> {
    let atoms: Vec<&Atom> = universe.iter().collect();
    (0u32..(1u32 << atoms.len()))
        .map(|mask| atoms.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| (*a).clone()).collect())
        .collect()
}

/// Glues pieces g_Q living on disjoint supports S_Q into one function h.
///
/// h(ω) = max { q in the grid : ω ∈ E_q } where E_q is the essential supremum
/// of the level sets S_Q ∩ {g_Q ≥ q}. The grid is the finite set of values the
/// pieces take; h is 0 off ∪ S_Q and on polar atoms.
pub fn glue(family: &MeasureFamily, loc: &Localization, pieces: &[BoundedFunction]) -> Result<BoundedFunction, FamilyError> {
    if pieces.len() != loc.len() {
        return Err(FamilyError::PieceCount { expected: loc.len(), got: pieces.len() });
    }
    if let Some(&(i, j)) = loc.overlapping_pairs().first() {
        return Err(FamilyError::NonDisjointSupports(i, j));
    }

    let mut universe = family.universe();
    universe.extend(loc.atoms());
    universe.extend(pieces.iter().flat_map(|g| g.values.keys().cloned()));

    for (index, (g, support)) in pieces.iter().zip(&loc.supports).enumerate() {
        let leak = universe.iter().find(|a| !support.contains(*a) && !family.is_polar_atom(a) && !g.eval(a).is_zero());
        if let Some(a) = leak {
            return Err(FamilyError::PieceOutsideSupport { index, atom: a.to_string() });
        }
    }

    let grid: BTreeSet<Rational> = pieces.iter().flat_map(BoundedFunction::range).collect();
    let level_sets: Vec<(Rational, AtomSet)> = grid
        .into_iter()
        .map(|level| {
            let set: AtomSet = pieces
                .iter()
                .zip(&loc.supports)
                .flat_map(|(g, s)| s.iter().filter(|a| g.eval(a) >= level).cloned().collect::<Vec<_>>())
                .collect();
            (level, set)
        })
        .collect();

    let values = universe
        .iter()
        .filter(|a| !family.is_polar_atom(a))
        .filter_map(|a| level_sets.iter().rev().find(|(_, set)| set.contains(a)).map(|(level, _)| (a.clone(), level.clone())));
    Ok(BoundedFunction::new(values, Rational::zero()))
}

/// ∫ h dμ = Σ h(atom) μ(atom).
pub fn eval_functional(h: &BoundedFunction, mu: &SignedMeasure) -> Rational {
    mu.weights().iter().fold(Rational::zero(), |acc, (a, w)| acc + h.eval(a) * w)
}

/// ‖h‖ over the non-polar atoms of the family.
pub fn qs_sup_norm(h: &BoundedFunction, family: &MeasureFamily) -> Rational {
    norm_witness(h, family).map(|(_, v)| v).unwrap_or_else(Rational::zero)
}

/// A non-polar atom where |h| is maximal, with that maximum. The Dirac on
/// this atom is dominated by a family member and attains the operator norm.
pub fn norm_witness(h: &BoundedFunction, family: &MeasureFamily) -> Option<(Atom, Rational)> {
    family
        .charged_atoms()
        .into_iter()
        .map(|a| {
            let v = h.eval(&a).abs();
            (a, v)
        })
        .fold(None, |best: Option<(Atom, Rational)>, (a, v)| match best {
            Some((_, ref bv)) if *bv >= v => best,
            _ => Some((a, v)),
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HahnPropertyReport {
    pub same_polars: bool,
    pub disjoint_carriers: bool,
    pub carrier_mass_ok: bool,
    pub null_transfer: bool,
    pub probes_checked: usize,
    pub overall: bool,
}

/// Checks the Hahn property with carriers W_R given by the localization
/// supports: same polar atoms, disjoint carriers of full mass, and
/// P(F ∩ W_R) = 0 for all R implying P(F) = 0 on generated probes.
pub fn check_hahn_property(family: &MeasureFamily, dominating: &Localization) -> HahnPropertyReport {
    let mut universe = family.universe();
    universe.extend(dominating.atoms());

    let same_polars = universe.iter().all(|a| family.is_polar_atom(a) == dominating.measures.iter().all(|r| !r.charges(a)));
    let disjoint_carriers = dominating.is_strictly_disjoint();
    let carrier_mass_ok = dominating.measures.iter().zip(&dominating.supports).all(|(r, w)| r.mass(w).is_one());

    let mut probes = generated_probes(dominating, &universe);
    probes.extend(universe.iter().map(|a| AtomSet::from([a.clone()])));
    probes.extend(family.members.iter().map(ProbabilityMeasure::support));
    if universe.len() <= EXHAUSTIVE_ATOM_LIMIT {
        probes.extend(all_subsets(&universe));
    }
    let null_transfer = family.members.iter().all(|p| {
        probes.iter().all(|f| {
            let local_null = dominating.supports.iter().all(|w| p.mass(f.intersection(w)).is_zero());
            !local_null || p.mass(f).is_zero()
        })
    });
    HahnPropertyReport {
        same_polars,
        disjoint_carriers,
        carrier_mass_ok,
        null_transfer,
        probes_checked: probes.len() * family.len(),
        overall: same_polars && disjoint_carriers && carrier_mass_ok && null_transfer,
    }
}

/// μ = μ_ref + μ_loc with μ_ref ≪ the reference measure and μ_loc carried by
/// the localization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualDecomposition {
    pub reference_part: SignedMeasure,
    pub localized_part: SignedMeasure,
    /// 𝒬(μ_loc) with the uniform mixing weights witnessing domination.
    pub mixing: Vec<(usize, Rational)>,
    /// μ_loc ≪ Σ mixing weights · Q.
    pub dominated: bool,
}

pub fn decompose_with_reference(mu: &SignedMeasure, reference: &SignedMeasure, loc: &Localization) -> DualDecomposition {
    let (reference_part, localized_part) = lebesgue_decompose(mu, reference);
    match mixture_witness(loc, &localized_part) {
        Some(mixing) => DualDecomposition { reference_part, localized_part, mixing, dominated: true },
        None => {
            let mixing = family_of_mu(loc, &localized_part).into_iter().map(|i| (i, Rational::zero())).collect();
            DualDecomposition { reference_part, localized_part, mixing, dominated: false }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn at(id: &str) -> Atom {
        Atom::named(id)
    }
    fn set(ids: &[&str]) -> AtomSet {
        ids.iter().map(|id| at(id)).collect()
    }
    fn dirac(id: &str) -> ProbabilityMeasure {
        ProbabilityMeasure::dirac(at(id))
    }
    fn prob(entries: &[(&str, Rational)]) -> ProbabilityMeasure {
        ProbabilityMeasure::from_weights(entries.iter().map(|(id, w)| (at(id), w.clone()))).unwrap()
    }
    fn half_ab() -> ProbabilityMeasure {
        prob(&[("a", rat(1, 2)), ("b", rat(1, 2))])
    }
    fn func(entries: &[(&str, i64)]) -> BoundedFunction {
        BoundedFunction::new(entries.iter().map(|(id, v)| (at(id), int(*v))), int(0))
    }

    #[test]
    fn polar_examples() {
        let fam = MeasureFamily::new(vec![dirac("a")]).unwrap();
        assert!(is_polar(&fam, &set(&["b"])));
        assert!(!is_polar(&fam, &set(&["a"])));
        let fam = MeasureFamily::new(vec![half_ab(), dirac("b")]).unwrap();
        assert!(is_polar(&fam, &set(&["c"])));
    }

    #[test]
    fn empty_family_rejected() {
        assert_eq!(MeasureFamily::new(vec![]), Err(FamilyError::EmptyFamily));
    }

    #[test]
    fn supported_measure_examples() {
        let fam = MeasureFamily::new(vec![dirac("a")]).unwrap();
        assert_eq!(is_supported_measure(&dirac("a"), &fam), Some(set(&["a"])));
        let fam = MeasureFamily::new(vec![dirac("a"), dirac("b")]).unwrap();
        assert_eq!(is_supported_measure(&half_ab(), &fam), Some(set(&["a", "b"])));
        let fam = MeasureFamily::new(vec![dirac("b")]).unwrap();
        assert_eq!(is_supported_measure(&dirac("a"), &fam), None);
    }

    #[test]
    fn dirac_localization_examples() {
        let fam = MeasureFamily::new(vec![half_ab(), dirac("b")]).unwrap();
        let loc = dirac_localization(&fam);
        assert_eq!(loc.measures(), &[dirac("a"), dirac("b")]);
        assert_eq!(loc.supports(), &[set(&["a"]), set(&["b"])]);

        let loc = dirac_localization(&MeasureFamily::new(vec![dirac("a")]).unwrap());
        assert_eq!(loc.measures(), &[dirac("a")]);

        let three = prob(&[("a", rat(1, 3)), ("b", rat(1, 3)), ("c", rat(1, 3))]);
        assert_eq!(dirac_localization(&MeasureFamily::new(vec![three]).unwrap()).len(), 3);
    }

    #[test]
    fn verify_localization_examples() {
        let fam = MeasureFamily::new(vec![half_ab()]).unwrap();
        assert!(verify_localization(&fam, &dirac_localization(&fam), true).unwrap().overall);

        let fam = MeasureFamily::new(vec![dirac("a"), dirac("b")]).unwrap();
        let loc = Localization::new(vec![dirac("a")], vec![set(&["a"])]).unwrap();
        let report = verify_localization(&fam, &loc, true).unwrap();
        assert!(!report.p_lll_sconvq);
        assert_eq!(report.p_witnesses, vec![Some(vec![(0, int(1))]), None]);
        assert!(!report.overall);

        let fam = MeasureFamily::new(vec![prob(&[("a", rat(1, 3)), ("b", rat(1, 3)), ("c", rat(1, 3))])]).unwrap();
        let loc = Localization::new(vec![dirac("a"), dirac("c")], vec![set(&["a", "b"]), set(&["b", "c"])]).unwrap();
        let report = verify_localization(&fam, &loc, true).unwrap();
        assert!(!report.disjoint_ok);
        assert_eq!(report.overlapping, vec![(0, 1)]);
    }

    #[test]
    fn overlap_on_polar_atoms_is_tolerated_when_not_strict() {
        let fam = MeasureFamily::with_extra_atoms(vec![half_ab()], set(&["z"])).unwrap();
        let loc = Localization::new(vec![dirac("a"), dirac("b")], vec![set(&["a", "z"]), set(&["b", "z"])]).unwrap();
        assert!(verify_localization(&fam, &loc, false).unwrap().overall);
        assert!(!verify_localization(&fam, &loc, true).unwrap().overall);
    }

    #[test]
    fn verify_rejects_foreign_atoms() {
        let fam = MeasureFamily::new(vec![dirac("a")]).unwrap();
        let loc = Localization::new(vec![dirac("q")], vec![set(&["q"])]).unwrap();
        assert!(matches!(verify_localization(&fam, &loc, true), Err(FamilyError::UniverseMismatch(_))));
    }

    #[test]
    fn localization_requires_full_self_mass() {
        let err = Localization::new(vec![half_ab()], vec![set(&["a"])]).unwrap_err();
        assert!(matches!(err, FamilyError::SelfMass { index: 0, .. }));
    }

    #[test]
    fn family_of_mu_examples() {
        let fam = MeasureFamily::new(vec![half_ab()]).unwrap();
        let loc = dirac_localization(&fam);
        let mu = SignedMeasure::from_weights([(at("a"), rat(3, 10)), (at("b"), rat(7, 10))]);
        assert_eq!(family_of_mu(&loc, &mu), vec![0, 1]);
        assert_eq!(family_of_mu(&loc, &SignedMeasure::dirac(at("a"))), vec![0]);
        assert!(family_of_mu(&loc, &SignedMeasure::zero()).is_empty());
    }

    #[test]
    fn essential_supremum_examples() {
        let fam = MeasureFamily::new(vec![half_ab()]).unwrap();
        let loc = dirac_localization(&fam);
        let (s, cert) = essential_supremum(&fam, &loc, &[set(&["a"]), set(&[])], &[], false).unwrap();
        assert_eq!(s, set(&["a"]));
        assert!(cert.condition_a && cert.condition_b);

        let (s, _) = essential_supremum(&fam, &loc, loc.supports(), &[], true).unwrap();
        assert_eq!(s, set(&["a", "b"]));

        let (s, cert) = essential_supremum(&fam, &loc, &[set(&[]), set(&[])], &[], true).unwrap();
        assert!(s.is_empty());
        assert!(cert.exhaustive && cert.condition_b);
    }

    #[test]
    fn essential_supremum_rejects_pieces_outside_support() {
        let fam = MeasureFamily::new(vec![half_ab()]).unwrap();
        let loc = dirac_localization(&fam);
        let err = essential_supremum(&fam, &loc, &[set(&["b"]), set(&[])], &[], false).unwrap_err();
        assert!(matches!(err, FamilyError::PieceNotInSupport { index: 0, .. }));
    }

    #[test]
    fn glue_examples() {
        let fam = MeasureFamily::new(vec![dirac("a"), dirac("b")]).unwrap();
        let loc = dirac_localization(&fam);
        let h = glue(&fam, &loc, &[func(&[("a", 3)]), func(&[("b", 5)])]).unwrap();
        assert_eq!(h, func(&[("a", 3), ("b", 5)]));
        assert_eq!(h.eval(&at("zzz")), int(0));

        let single = MeasureFamily::new(vec![half_ab()]).unwrap();
        let block = Localization::new(vec![half_ab()], vec![set(&["a", "b"])]).unwrap();
        let g = func(&[("a", 2), ("b", -1)]);
        assert_eq!(glue(&single, &block, std::slice::from_ref(&g)).unwrap(), g);

        let h = glue(&fam, &loc, &[func(&[("a", 3)]), func(&[("b", -7)])]).unwrap();
        for (i, s) in loc.supports().iter().enumerate() {
            let piece = [func(&[("a", 3)]), func(&[("b", -7)])][i].clone();
            for atom in s {
                assert_eq!(h.eval(atom), piece.eval(atom));
            }
        }
    }

    #[test]
    fn glue_rejects_overlapping_supports_and_leaky_pieces() {
        let fam = MeasureFamily::new(vec![half_ab()]).unwrap();
        let loc = Localization::new(vec![dirac("a"), dirac("b")], vec![set(&["a", "b"]), set(&["b"])]).unwrap();
        assert_eq!(glue(&fam, &loc, &[func(&[]), func(&[])]), Err(FamilyError::NonDisjointSupports(0, 1)));
        let loc = dirac_localization(&fam);
        let err = glue(&fam, &loc, &[func(&[("b", 1)]), func(&[])]).unwrap_err();
        assert!(matches!(err, FamilyError::PieceOutsideSupport { index: 0, .. }));
    }

    #[test]
    fn glue_zeroes_polar_atoms() {
        let fam = MeasureFamily::with_extra_atoms(vec![dirac("a")], set(&["p"])).unwrap();
        let loc = Localization::new(vec![dirac("a")], vec![set(&["a", "p"])]).unwrap();
        let h = glue(&fam, &loc, &[func(&[("a", 4), ("p", 9)])]).unwrap();
        assert_eq!(h, func(&[("a", 4)]));
    }

    #[test]
    fn eval_functional_examples() {
        let p = half_ab();
        assert_eq!(eval_functional(&BoundedFunction::constant(int(1)), p.as_signed()), int(1));
        assert_eq!(eval_functional(&func(&[("a", 3)]), &SignedMeasure::dirac(at("a"))), int(3));
        assert_eq!(eval_functional(&func(&[("a", 3), ("b", -7)]), p.as_signed()), int(-2));
    }

    #[test]
    fn qs_sup_norm_examples() {
        let h = func(&[("a", 3), ("b", -7)]);
        let fam = MeasureFamily::new(vec![dirac("a"), dirac("b")]).unwrap();
        assert_eq!(qs_sup_norm(&h, &fam), int(7));
        let fam_a = MeasureFamily::with_extra_atoms(vec![dirac("a")], set(&["b"])).unwrap();
        assert_eq!(qs_sup_norm(&h, &fam_a), int(3));
        assert_eq!(qs_sup_norm(&func(&[]), &fam), int(0));
        assert_eq!(norm_witness(&h, &fam), Some((at("b"), int(7))));
    }

    #[test]
    fn hahn_property_examples() {
        let fam = MeasureFamily::new(vec![half_ab(), dirac("b")]).unwrap();
        assert!(check_hahn_property(&fam, &dirac_localization(&fam)).overall);

        let overlapping = Localization::new(vec![dirac("a"), dirac("b")], vec![set(&["a", "b"]), set(&["b"])]).unwrap();
        assert!(!check_hahn_property(&fam, &overlapping).overall);

        let fam = MeasureFamily::new(vec![prob(&[("a", rat(1, 4)), ("b", rat(3, 4))]), dirac("c")]).unwrap();
        let loc = find_singular_countable_localization(&fam, true);
        assert!(verify_localization(&fam, &loc, true).unwrap().overall);
        assert!(check_hahn_property(&fam, &loc).overall);
    }

    #[test]
    fn singular_localization_examples() {
        let fam = MeasureFamily::new(vec![half_ab(), dirac("b")]).unwrap();
        let loc = find_singular_countable_localization(&fam, false);
        assert_eq!(loc.measures(), &[dirac("a"), dirac("b")]);

        let fam = MeasureFamily::new(vec![dirac("a")]).unwrap();
        assert_eq!(find_singular_countable_localization(&fam, false).measures(), &[dirac("a")]);

        // a and b are always charged together; c only by the second member.
        let p1 = prob(&[("a", rat(1, 4)), ("b", rat(3, 4))]);
        let p2 = prob(&[("a", rat(1, 3)), ("b", rat(1, 3)), ("c", rat(1, 3))]);
        let fam = MeasureFamily::new(vec![p1, p2]).unwrap();
        let loc = find_singular_countable_localization(&fam, true);
        assert_eq!(loc.supports(), &[set(&["a", "b"]), set(&["c"])]);
        assert_eq!(loc.measures()[0], prob(&[("a", rat(1, 4)), ("b", rat(3, 4))]));
        assert!(verify_localization(&fam, &loc, true).unwrap().overall);
    }

    #[test]
    fn reference_decomposition_splits_off_localized_part() {
        let loc = Localization::new(vec![dirac("a"), dirac("b")], vec![set(&["a"]), set(&["b"])]).unwrap();
        let reference = SignedMeasure::from_weights([(at("x"), int(1)), (at("y"), int(1))]);
        let mu = SignedMeasure::from_weights([(at("x"), rat(1, 5)), (at("a"), rat(-2, 5)), (at("b"), rat(2, 5))]);
        let d = decompose_with_reference(&mu, &reference, &loc);
        assert_eq!(d.reference_part, SignedMeasure::from_weights([(at("x"), rat(1, 5))]));
        assert_eq!(d.reference_part.add(&d.localized_part), mu);
        assert!(d.dominated);
        assert_eq!(d.mixing, vec![(0, rat(1, 2)), (1, rat(1, 2))]);
    }
}
