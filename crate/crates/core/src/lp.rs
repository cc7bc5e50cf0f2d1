//! Dense two-phase simplex over exact rationals.
//!
//! Problems are minimizations with `≤`, `=`, `≥` rows and optional per-variable
//! bounds. Bland's rule is used for both entering and leaving choices, so the
//! method terminates without any perturbation. Optimal solutions carry a dual
//! vector; [`verify_certificate`] re-checks feasibility, complementary
//! slackness and strong duality by substitution.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// minimize objective·x subject to the constraints and bounds.
/// Variables default to `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), lower: vec![Some(Rational::zero()); n], upper: vec![None; n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn validate(&self, config: &LpConfig) -> Result<(), LpError> {
        let n = self.num_vars();
        if n > config.max_vars || self.constraints.len() > config.max_constraints {
            return Err(LpError::CapExceeded {
                vars: n,
                constraints: self.constraints.len(),
                max_vars: config.max_vars,
                max_constraints: config.max_constraints,
            });
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{} variables but {} / {} bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some((i, c)) = self.constraints.iter().enumerate().find(|(_, c)| c.coeffs.len() != n) {
            return Err(LpError::DimensionMismatch(format!("row {i} has {} coefficients, expected {n}", c.coeffs.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpConfig {
    pub max_vars: usize,
    pub max_constraints: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig { max_vars: 200, max_constraints: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("problem size {vars}x{constraints} exceeds the cap {max_vars}x{max_constraints}")]
    CapExceeded { vars: usize, constraints: usize, max_vars: usize, max_constraints: usize },
    #[error("inconsistent dimensions: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `x`, `objective_value` and `dual` are meaningful only when optimal;
/// otherwise they are empty / zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<Rational>,
    pub objective_value: Rational,
    /// One multiplier per constraint row: ≥ 0 on `≥` rows, ≤ 0 on `≤` rows.
    pub dual: Vec<Rational>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution { status, x: Vec::new(), objective_value: Rational::zero(), dual: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &LpConfig::default())
}

/// x_j = offset + sign · z_col (or z_col − z_{col+1} when free).
struct VarMap {
    offset: Rational,
    col: usize,
    sign: Rational,
    free: bool,
}

pub fn solve_with(lp: &LinearProgram, config: &LpConfig) -> Result<LpSolution, LpError> {
    lp.validate(config)?;
    let n = lp.num_vars();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for j in 0..n {
        match (&lp.lower[j], &lp.upper[j]) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Ok(LpSolution::without_point(LpStatus::Infeasible));
                    }
                    bound_rows.push((j, u - l));
                }
                maps.push(VarMap { offset: l.clone(), col: ncols, sign: Rational::one(), free: false });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), col: ncols, sign: -Rational::one(), free: false });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap { offset: Rational::zero(), col: ncols, sign: Rational::one(), free: true });
                ncols += 2;
            }
        }
    }

    // Rows over z: (coeffs, relation, rhs, index of the original constraint).
    let mut rows: Vec<(Vec<Rational>, Relation, Rational, Option<usize>)> = Vec::new();
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.iter().all(Zero::is_zero) {
            if !c.relation.holds(&Rational::zero(), &c.rhs) {
                return Ok(LpSolution::without_point(LpStatus::Infeasible));
            }
            continue;
        }
        let mut coeffs = vec![Rational::zero(); ncols];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let m = &maps[j];
            rhs -= a * &m.offset;
            coeffs[m.col] += a * &m.sign;
            if m.free {
                coeffs[m.col + 1] -= a;
            }
        }
        rows.push((coeffs, c.relation, rhs, Some(i)));
    }
    for (j, width) in bound_rows {
        let mut coeffs = vec![Rational::zero(); ncols];
        coeffs[maps[j].col] = Rational::one();
        rows.push((coeffs, Relation::Le, width, None));
    }

    let mut cost = vec![Rational::zero(); ncols];
    for (j, c) in lp.objective.iter().enumerate() {
        let m = &maps[j];
        cost[m.col] += c * &m.sign;
        if m.free {
            cost[m.col + 1] -= c;
        }
    }

    // Standard form: z and slacks, then one artificial per row.
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art0 = ncols + nslack;
    let width = art0 + m;
    let mut tab = Tableau::new(m, width);
    let mut row_sign = Vec::with_capacity(m);
    let mut slack = ncols;
    for (i, (coeffs, rel, rhs, _)) in rows.iter().enumerate() {
        let flip = rhs.is_negative();
        let s = if flip { -Rational::one() } else { Rational::one() };
        for (k, a) in coeffs.iter().enumerate() {
            tab.a[i][k] = a * &s;
        }
        match rel {
            Relation::Le => {
                tab.a[i][slack] = s.clone();
                slack += 1;
            }
            Relation::Ge => {
                tab.a[i][slack] = -s.clone();
                slack += 1;
            }
            Relation::Eq => {}
        }
        tab.a[i][art0 + i] = Rational::one();
        tab.rhs[i] = rhs * &s;
        tab.basis[i] = art0 + i;
        row_sign.push(s);
    }

    let mut phase1 = vec![Rational::zero(); width];
    for c in phase1.iter_mut().skip(art0) {
        *c = Rational::one();
    }
    tab.set_objective(&phase1);
    if tab.run(width) == Pivot::Unbounded {
        unreachable!("phase one is bounded below by zero");
    }
    if !tab.objective_value().is_zero() {
        return Ok(LpSolution::without_point(LpStatus::Infeasible));
    }
    // Basic artificials at zero: pivot them out where the row allows it.
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(k) = (0..art0).find(|&k| !tab.a[i][k].is_zero()) {
                tab.pivot(i, k);
            }
        }
    }

    let mut phase2 = vec![Rational::zero(); width];
    phase2[..ncols].clone_from_slice(&cost);
    tab.set_objective(&phase2);
    if tab.run(art0) == Pivot::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let mut z = vec![Rational::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        z[b] = tab.rhs[i].clone();
    }
    let x: Vec<Rational> = maps
        .iter()
        .map(|mp| {
            let mut v = &mp.offset + &mp.sign * &z[mp.col];
            if mp.free {
                v -= &z[mp.col + 1];
            }
            v
        })
        .collect();

    // The artificial columns started as the identity, so their reduced costs
    // are −ŷ for the sign-normalized rows.
    let mut dual = vec![Rational::zero(); lp.constraints.len()];
    for (i, row) in rows.iter().enumerate() {
        if let Some(orig) = row.3 {
            dual[orig] = -&tab.reduced[art0 + i] * &row_sign[i];
        }
    }

    let objective_value = dot(&lp.objective, &x);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective_value, dual })
}

#[derive(PartialEq, Eq)]
enum Pivot {
    Optimal,
    Unbounded,
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    reduced: Vec<Rational>,
    /// Negated objective value.
    z: Rational,
}

impl Tableau {
    fn new(m: usize, width: usize) -> Self {
        Tableau {
            a: vec![vec![Rational::zero(); width]; m],
            rhs: vec![Rational::zero(); m],
            basis: vec![0; m],
            reduced: vec![Rational::zero(); width],
            z: Rational::zero(),
        }
    }

    fn set_objective(&mut self, cost: &[Rational]) {
        self.reduced = cost.to_vec();
        self.z = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (r, a) in self.reduced.iter_mut().zip(&self.a[i]) {
                *r -= &cb * a;
            }
            self.z -= &cb * &self.rhs[i];
        }
    }

    fn objective_value(&self) -> Rational {
        -&self.z
    }

    /// Bland's rule restricted to entering columns below `limit`.
    fn run(&mut self, limit: usize) -> Pivot {
        loop {
            let Some(enter) = (0..limit).find(|&k| self.reduced[k].is_negative()) else {
                return Pivot::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                let a = &self.a[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((j, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*j]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return Pivot::Unbounded,
                Some((i, _)) => self.pivot(i, enter),
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col].clone();
        for v in self.a[row].iter_mut() {
            *v /= &p;
        }
        self.rhs[row] /= &p;
        let pivot_row = self.a[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.a.len() {
            if i == row || self.a[i][col].is_zero() {
                continue;
            }
            let f = self.a[i][col].clone();
            for (v, pr) in self.a[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v -= &f * pr;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        let f = self.reduced[col].clone();
        if !f.is_zero() {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v -= &f * pr;
                }
            }
            self.z -= &f * &pivot_rhs;
        }
        self.basis[row] = col;
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reduced costs c − Aᵀy for a dual vector.
pub fn reduced_costs(lp: &LinearProgram, dual: &[Rational]) -> Vec<Rational> {
    (0..lp.num_vars())
        .map(|j| {
            let aty: Rational = lp.constraints.iter().zip(dual).map(|(c, y)| &c.coeffs[j] * y).sum();
            &lp.objective[j] - aty
        })
        .collect()
}

/// Σ y_i b_i + Σ_j (r_j⁺ l_j − r_j⁻ u_j). `None` when a reduced cost pushes
/// against a missing bound (the dual point is infeasible).
pub fn dual_objective(lp: &LinearProgram, dual: &[Rational]) -> Option<Rational> {
    let mut total: Rational = lp.constraints.iter().zip(dual).map(|(c, y)| &c.rhs * y).sum();
    for (j, r) in reduced_costs(lp, dual).iter().enumerate() {
        if r.is_positive() {
            total += r * lp.lower[j].as_ref()?;
        } else if r.is_negative() {
            total += r * lp.upper[j].as_ref()?;
        }
    }
    Some(total)
}

/// Re-checks an optimal solution by substitution. Returns a description of
/// the first violated condition.
pub fn verify_certificate(lp: &LinearProgram, sol: &LpSolution) -> Result<(), String> {
    if sol.status != LpStatus::Optimal {
        return Err(format!("status is {:?}", sol.status));
    }
    for (j, x) in sol.x.iter().enumerate() {
        if lp.lower[j].as_ref().is_some_and(|l| x < l) || lp.upper[j].as_ref().is_some_and(|u| x > u) {
            return Err(format!("x[{j}] violates its bounds"));
        }
    }
    for (i, (c, y)) in lp.constraints.iter().zip(&sol.dual).enumerate() {
        let lhs = dot(&c.coeffs, &sol.x);
        if !c.relation.holds(&lhs, &c.rhs) {
            return Err(format!("row {i} violated"));
        }
        let sign_ok = match c.relation {
            Relation::Ge => !y.is_negative(),
            Relation::Le => !y.is_positive(),
            Relation::Eq => true,
        };
        if !sign_ok {
            return Err(format!("dual {i} has the wrong sign"));
        }
        if !y.is_zero() && lhs != c.rhs {
            return Err(format!("row {i} slack with nonzero dual"));
        }
    }
    for (j, r) in reduced_costs(lp, &sol.dual).iter().enumerate() {
        let at_lower = lp.lower[j].as_ref() == Some(&sol.x[j]);
        let at_upper = lp.upper[j].as_ref() == Some(&sol.x[j]);
        if (r.is_positive() && !at_lower) || (r.is_negative() && !at_upper) {
            return Err(format!("reduced cost {j} violates complementary slackness"));
        }
    }
    let d = dual_objective(lp, &sol.dual).ok_or("dual point infeasible")?;
    if d != sol.objective_value {
        return Err(format!("duality gap: primal {} dual {}", sol.objective_value, d));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    #[test]
    fn single_lower_bound_row() {
        let mut lp = LinearProgram::new(vec![int(1)]);
        lp.set_bounds(0, None, None).add_constraint(vec![int(1)], Relation::Ge, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.x, vec![int(1)]);
        assert_eq!(sol.dual, vec![int(1)]);
        verify_certificate(&lp, &sol).unwrap();
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![int(0)]);
        lp.add_constraint(vec![int(1)], Relation::Le, int(-1));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(vec![int(-1), int(0)]);
        lp.add_constraint(vec![int(1), int(-1)], Relation::Le, int(2));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);

        let mut lp = LinearProgram::new(vec![int(0)]);
        lp.add_constraint(vec![int(0)], Relation::Ge, int(1));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    /// ½ Σ t_a subject to t ≥ ±(μ − ν) for the two Bernoulli laws.
    #[test]
    fn bernoulli_tv_program() {
        let mu = [rat(7, 10), rat(3, 10)];
        let nu = [rat(3, 10), rat(7, 10)];
        let mut lp = LinearProgram::new(vec![rat(1, 2), rat(1, 2)]);
        for a in 0..2 {
            let mut e = vec![int(0), int(0)];
            e[a] = int(1);
            lp.add_constraint(e.clone(), Relation::Ge, &mu[a] - &nu[a]);
            lp.add_constraint(e, Relation::Ge, &nu[a] - &mu[a]);
        }
        let sol = solve(&lp).unwrap();
        let half_l1: Rational = mu.iter().zip(&nu).map(|(a, b)| (a - b).abs()).sum::<Rational>() / int(2);
        assert_eq!(sol.objective_value, half_l1);
        assert_eq!(sol.objective_value, rat(2, 5));
        verify_certificate(&lp, &sol).unwrap();
    }

    #[test]
    fn bounds_of_every_kind() {
        // min x − y + z, x ∈ [1, 3], y ≤ 2, z free, z ≥ x − 5, x + y = 4
        let mut lp = LinearProgram::new(vec![int(1), int(-1), int(1)]);
        lp.set_bounds(0, Some(int(1)), Some(int(3)))
            .set_bounds(1, None, Some(int(2)))
            .set_bounds(2, None, None)
            .add_constraint(vec![int(-1), int(0), int(1)], Relation::Ge, int(-5))
            .add_constraint(vec![int(1), int(1), int(0)], Relation::Eq, int(4));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.x, vec![int(2), int(2), int(-3)]);
        assert_eq!(sol.objective_value, int(-3));
        verify_certificate(&lp, &sol).unwrap();
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![int(1), int(2)]);
        lp.add_constraint(vec![int(1), int(1)], Relation::Eq, int(1)).add_constraint(vec![int(2), int(2)], Relation::Eq, int(2));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.objective_value, int(1));
        verify_certificate(&lp, &sol).unwrap();
    }

    #[test]
    fn cap_and_dimension_errors() {
        let lp = LinearProgram::new(vec![int(0); 3]);
        let cfg = LpConfig { max_vars: 2, max_constraints: 4 };
        assert!(matches!(solve_with(&lp, &cfg), Err(LpError::CapExceeded { .. })));
        let mut lp = LinearProgram::new(vec![int(0); 2]);
        lp.add_constraint(vec![int(1)], Relation::Le, int(1));
        assert!(matches!(solve(&lp), Err(LpError::DimensionMismatch(_))));
    }

    /// Solves a square system exactly; `None` if singular.
    fn gauss(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
        let n = b.len();
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, p);
            b.swap(col, p);
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = &a[r][col] / &a[col][col];
                    let pivot = a[col].clone();
                    for (x, p) in a[r].iter_mut().zip(&pivot).skip(col) {
                        *x -= &f * p;
                    }
                    let v = &f * &b[col];
                    b[r] -= v;
                }
            }
        }
        Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
    }

    /// Minimum over all basic feasible points of a bounded program.
    fn vertex_oracle(lp: &LinearProgram) -> Option<Rational> {
        let n = lp.num_vars();
        let mut rows: Vec<(Vec<Rational>, Rational)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs.clone())).collect();
        for j in 0..n {
            for b in [&lp.lower[j], &lp.upper[j]].into_iter().flatten() {
                let mut e = vec![int(0); n];
                e[j] = int(1);
                rows.push((e, b.clone()));
            }
        }
        let feasible = |x: &[Rational]| {
            lp.constraints.iter().all(|c| c.relation.holds(&dot(&c.coeffs, x), &c.rhs))
                && (0..n)
                    .all(|j| lp.lower[j].as_ref().is_none_or(|l| &x[j] >= l) && lp.upper[j].as_ref().is_none_or(|u| &x[j] <= u))
        };
        let mut best: Option<Rational> = None;
        let k = rows.len();
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let chosen: Vec<&(Vec<Rational>, Rational)> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &rows[i]).collect();
            let Some(x) = gauss(chosen.iter().map(|r| r.0.clone()).collect(), chosen.iter().map(|r| r.1.clone()).collect())
            else {
                continue;
            };
            if feasible(&x) {
                let v = dot(&lp.objective, &x);
                if best.as_ref().is_none_or(|b| &v < b) {
                    best = Some(v);
                }
            }
        }
        best
    }

    fn small() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=3).prop_map(|(n, d)| rat(n, d))
    }

    fn relation() -> impl Strategy<Value = Relation> {
        prop_oneof![Just(Relation::Le), Just(Relation::Eq), Just(Relation::Ge)]
    }

    /// Box-bounded programs with up to 3 variables and 3 rows.
    fn boxed_lp() -> impl Strategy<Value = LinearProgram> {
        (1usize..=3).prop_flat_map(|n| {
            (
                proptest::collection::vec(small(), n),
                proptest::collection::vec((proptest::collection::vec(small(), n), relation(), small()), 0..=3),
                proptest::collection::vec((-3i64..=0, 0i64..=3), n),
            )
                .prop_map(move |(obj, rows, boxes)| {
                    let mut lp = LinearProgram::new(obj);
                    for (c, r, b) in rows {
                        lp.add_constraint(c, r, b);
                    }
                    for (j, (lo, hi)) in boxes.into_iter().enumerate() {
                        lp.set_bounds(j, Some(int(lo)), Some(int(hi)));
                    }
                    lp
                })
        })
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(lp in boxed_lp()) {
            let sol = solve(&lp).unwrap();
            match vertex_oracle(&lp) {
                None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
                Some(v) => {
                    prop_assert_eq!(sol.status, LpStatus::Optimal);
                    prop_assert_eq!(&sol.objective_value, &v);
                    prop_assert_eq!(verify_certificate(&lp, &sol), Ok(()));
                }
            }
        }

        #[test]
        fn permutation_invariance(lp in boxed_lp(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = lp.num_vars();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut rows = lp.constraints.clone();
            rows.shuffle(&mut rng);
            let mut permuted = LinearProgram::new(perm.iter().map(|&j| lp.objective[j].clone()).collect());
            for c in rows {
                permuted.add_constraint(perm.iter().map(|&j| c.coeffs[j].clone()).collect(), c.relation, c.rhs);
            }
            for (k, &j) in perm.iter().enumerate() {
                permuted.set_bounds(k, lp.lower[j].clone(), lp.upper[j].clone());
            }
            let a = solve(&lp).unwrap();
            let b = solve(&permuted).unwrap();
            prop_assert_eq!(a.status, b.status);
            prop_assert_eq!(a.objective_value, b.objective_value);
        }

        #[test]
        fn free_variables_keep_strong_duality(
            obj in proptest::collection::vec(small(), 2),
            rows in proptest::collection::vec((proptest::collection::vec(small(), 2), relation(), small()), 1..=4),
        ) {
            let mut lp = LinearProgram::new(obj);
            lp.set_bounds(0, None, None).set_bounds(1, None, Some(int(2)));
            for (c, r, b) in rows {
                lp.add_constraint(c, r, b);
            }
            let sol = solve(&lp).unwrap();
            if sol.is_optimal() {
                prop_assert_eq!(verify_certificate(&lp, &sol), Ok(()));
            }
        }
    }
}
