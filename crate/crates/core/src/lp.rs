//! Exact linear feasibility and linear programming over the rationals.
//!
//! Problems are posed as equalities `A x = b` with per-variable boxes whose
//! ends may be infinite. Internally every variable is mapped to columns with
//! bounds `[0, U]` (`U` possibly infinite) and solved with a dense two-phase
//! bounded-variable primal simplex. Entering and leaving variables follow the
//! smallest-index rule, which rules out cycling on degenerate vertices.

use serde::Serialize;

use crate::error::LpError;
use crate::rational::Rational;

const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearEquality {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

/// `{ x : A x = b, lower ≤ x ≤ upper }`, where `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxLinearSystem {
    pub num_vars: usize,
    pub equalities: Vec<LinearEquality>,
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl BoxLinearSystem {
    /// A system with `num_vars` free variables and no equalities.
    pub fn new(num_vars: usize) -> Self {
        BoxLinearSystem { num_vars, equalities: Vec::new(), lower: vec![None; num_vars], upper: vec![None; num_vars] }
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_equality(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.equalities.push(LinearEquality { coeffs, rhs });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.lower.len() != self.num_vars || self.upper.len() != self.num_vars {
            return Err(LpError::Malformed("bound vectors do not match the variable count".into()));
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            if eq.coeffs.len() != self.num_vars {
                return Err(LpError::Malformed(format!(
                    "equality {k} has {} coefficients, expected {}",
                    eq.coeffs.len(),
                    self.num_vars
                )));
            }
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi {
                    return Err(LpError::Malformed(format!("variable {k} has lower bound {lo} above upper bound {hi}")));
                }
            }
        }
        Ok(())
    }

    /// True when `x` satisfies every equality and bound exactly.
    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && self.equalities.iter().all(|eq| dot(&eq.coeffs, x) == eq.rhs)
            && x.iter().zip(&self.lower).all(|(xi, lo)| lo.as_ref().is_none_or(|lo| xi >= lo))
            && x.iter().zip(&self.upper).all(|(xi, hi)| hi.as_ref().is_none_or(|hi| xi <= hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Feasible,
    Infeasible,
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Rational>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<Rational>,
}

impl LpOutcome {
    fn infeasible() -> Self {
        LpOutcome { status: LpStatus::Infeasible, witness: None, objective_value: None }
    }
}

/// Decides whether the system has a solution, returning one if it does.
pub fn solve_feasibility(sys: &BoxLinearSystem) -> Result<LpOutcome, LpError> {
    sys.validate()?;
    let mut tab = Tableau::build(sys);
    if !tab.phase_one()? {
        return Ok(LpOutcome::infeasible());
    }
    Ok(LpOutcome { status: LpStatus::Feasible, witness: Some(tab.original_solution()), objective_value: None })
}

/// Minimizes `objective · x` over the system.
pub fn solve_min(sys: &BoxLinearSystem, objective: &[Rational]) -> Result<LpOutcome, LpError> {
    sys.validate()?;
    if objective.len() != sys.num_vars {
        return Err(LpError::Malformed(format!(
            "objective has {} coefficients, expected {}",
            objective.len(),
            sys.num_vars
        )));
    }
    let mut tab = Tableau::build(sys);
    if !tab.phase_one()? {
        return Ok(LpOutcome::infeasible());
    }
    if !tab.phase_two(objective)? {
        return Ok(LpOutcome { status: LpStatus::Unbounded, witness: None, objective_value: None });
    }
    let x = tab.original_solution();
    let value = dot(objective, &x);
    Ok(LpOutcome { status: LpStatus::Optimal, witness: Some(x), objective_value: Some(value) })
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).filter(|(a, b)| !a.is_zero() && !b.is_zero()).map(|(a, b)| a * b).sum()
}

/// How an original variable is expressed through internal columns in `[0, U]`.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = offset + z`
    Shift { col: usize, offset: Rational },
    /// `x = offset − z`
    Flip { col: usize, offset: Rational },
    /// `x = z⁺ − z⁻`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// `B⁻¹A`, one row per equality, one column per internal and artificial variable.
    rows: Vec<Vec<Rational>>,
    /// Current value of the basic variable of each row.
    values: Vec<Rational>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<Option<Rational>>,
    reduced: Vec<Rational>,
    num_structural: usize,
    maps: Vec<VarMap>,
}

impl Tableau {
    fn build(sys: &BoxLinearSystem) -> Self {
        let mut maps = Vec::with_capacity(sys.num_vars);
        let mut upper: Vec<Option<Rational>> = Vec::new();
        for (lo, hi) in sys.lower.iter().zip(&sys.upper) {
            let col = upper.len();
            match (lo, hi) {
                (Some(lo), hi) => {
                    maps.push(VarMap::Shift { col, offset: lo.clone() });
                    upper.push(hi.as_ref().map(|hi| hi - lo));
                }
                (None, Some(hi)) => {
                    maps.push(VarMap::Flip { col, offset: hi.clone() });
                    upper.push(None);
                }
                (None, None) => {
                    maps.push(VarMap::Split { pos: col, neg: col + 1 });
                    upper.push(None);
                    upper.push(None);
                }
            }
        }
        let num_structural = upper.len();
        let num_rows = sys.equalities.len();
        let width = num_structural + num_rows;

        let mut rows = Vec::with_capacity(num_rows);
        let mut values = Vec::with_capacity(num_rows);
        for (r, eq) in sys.equalities.iter().enumerate() {
            let mut row = vec![Rational::zero(); width];
            let mut rhs = eq.rhs.clone();
            for (a, map) in eq.coeffs.iter().zip(&maps) {
                if a.is_zero() {
                    continue;
                }
                match map {
                    VarMap::Shift { col, offset } => {
                        row[*col] = a.clone();
                        rhs -= &(a * offset);
                    }
                    VarMap::Flip { col, offset } => {
                        row[*col] = -a;
                        rhs -= &(a * offset);
                    }
                    VarMap::Split { pos, neg } => {
                        row[*pos] = a.clone();
                        row[*neg] = -a;
                    }
                }
            }
            if rhs.is_negative() {
                for e in row.iter_mut() {
                    *e = -&*e;
                }
                rhs = -rhs;
            }
            row[num_structural + r] = Rational::one();
            rows.push(row);
            values.push(rhs);
        }

        upper.extend(std::iter::repeat_n(None, num_rows));
        let mut is_basic = vec![false; width];
        let basis: Vec<usize> = (0..num_rows).map(|r| num_structural + r).collect();
        for &b in &basis {
            is_basic[b] = true;
        }
        Tableau {
            rows,
            values,
            basis,
            is_basic,
            at_upper: vec![false; width],
            upper,
            reduced: vec![Rational::zero(); width],
            num_structural,
            maps,
        }
    }

    fn width(&self) -> usize {
        self.upper.len()
    }

    fn set_costs(&mut self, costs: &[Rational]) {
        let mut reduced = costs.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(row) {
                if !a.is_zero() {
                    *d -= &(cb * a);
                }
            }
        }
        self.reduced = reduced;
    }

    /// Minimizes the sum of artificials. Returns whether the system is feasible.
    fn phase_one(&mut self) -> Result<bool, LpError> {
        let mut costs = vec![Rational::zero(); self.width()];
        for c in costs.iter_mut().skip(self.num_structural) {
            *c = Rational::one();
        }
        self.set_costs(&costs);
        let bounded = self.optimize()?;
        debug_assert!(bounded, "phase one is bounded below by zero");
        let infeasibility: Rational = self
            .basis
            .iter()
            .zip(&self.values)
            .filter(|(&b, _)| b >= self.num_structural)
            .map(|(_, v)| v.clone())
            .sum();
        if !infeasibility.is_zero() {
            return Ok(false);
        }
        // Artificials are pinned at zero from here on.
        for c in self.num_structural..self.width() {
            self.upper[c] = Some(Rational::zero());
        }
        Ok(true)
    }

    /// Returns false when the objective is unbounded below.
    fn phase_two(&mut self, objective: &[Rational]) -> Result<bool, LpError> {
        let mut costs = vec![Rational::zero(); self.width()];
        for (c, map) in objective.iter().zip(&self.maps) {
            match map {
                VarMap::Shift { col, .. } => costs[*col] = c.clone(),
                VarMap::Flip { col, .. } => costs[*col] = -c,
                VarMap::Split { pos, neg } => {
                    costs[*pos] = c.clone();
                    costs[*neg] = -c;
                }
            }
        }
        self.set_costs(&costs);
        self.optimize()
    }

    fn is_fixed(&self, col: usize) -> bool {
        matches!(&self.upper[col], Some(u) if u.is_zero())
    }

    /// Runs simplex iterations on the current costs. Returns false if unbounded.
    fn optimize(&mut self) -> Result<bool, LpError> {
        for _ in 0..MAX_ITERATIONS {
            let entering = (0..self.width()).find_map(|c| {
                if self.is_basic[c] || self.is_fixed(c) {
                    return None;
                }
                let d = self.reduced[c].signum();
                match (d, self.at_upper[c]) {
                    (-1, false) => Some((c, 1i8)),
                    (1, true) => Some((c, -1i8)),
                    _ => None,
                }
            });
            let Some((col, dir)) = entering else {
                return Ok(true);
            };

            // Ratio test; `None` row means the entering column hits its own bound.
            let mut best: Option<(Rational, Option<usize>)> = self.upper[col].clone().map(|u| (u, None));
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if a.is_zero() {
                    continue;
                }
                let rate = a.scale_sign(dir);
                let b = self.basis[r];
                let limit = if rate.is_positive() {
                    self.values[r].checked_div(&rate).expect("nonzero rate")
                } else {
                    match &self.upper[b] {
                        Some(u) => (u - &self.values[r]).checked_div(&-&rate).expect("nonzero rate"),
                        None => continue,
                    }
                };
                let better = match &best {
                    None => true,
                    Some((l, None)) => limit < *l,
                    Some((l, Some(rb))) => limit < *l || (limit == *l && b < self.basis[*rb]),
                };
                if better {
                    best = Some((limit, Some(r)));
                }
            }
            let Some((step, leaving)) = best else {
                return Ok(false);
            };

            if !step.is_zero() {
                let delta = step.scale_sign(dir);
                for r in 0..self.rows.len() {
                    let a = &self.rows[r][col];
                    if !a.is_zero() {
                        let change = a * &delta;
                        self.values[r] -= &change;
                    }
                }
            }
            let entering_value = {
                let base = if self.at_upper[col] {
                    self.upper[col].clone().expect("at upper implies finite")
                } else {
                    Rational::zero()
                };
                base + step.scale_sign(dir)
            };

            match leaving {
                None => self.at_upper[col] = !self.at_upper[col],
                Some(r) => {
                    let b = self.basis[r];
                    let rate = self.rows[r][col].scale_sign(dir);
                    self.is_basic[b] = false;
                    self.at_upper[b] = !rate.is_positive();
                    self.is_basic[col] = true;
                    self.at_upper[col] = false;
                    self.basis[r] = col;
                    self.values[r] = entering_value;
                    self.pivot(r, col);
                }
            }
        }
        Err(LpError::IterationLimit(MAX_ITERATIONS))
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let inv = self.rows[r][col].recip().expect("pivot is nonzero");
        for e in self.rows[r].iter_mut() {
            if !e.is_zero() {
                *e *= &inv;
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nonzero: Vec<usize> = (0..pivot_row.len()).filter(|&c| !pivot_row[c].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for &c in &nonzero {
                row[c] -= &(&factor * &pivot_row[c]);
            }
        }
        let factor = self.reduced[col].clone();
        if !factor.is_zero() {
            for &c in &nonzero {
                self.reduced[c] -= &(&factor * &pivot_row[c]);
            }
        }
        self.rows[r] = pivot_row;
    }

    fn column_value(&self, col: usize) -> Rational {
        if self.is_basic[col] {
            let r = self.basis.iter().position(|&b| b == col).expect("basic column has a row");
            self.values[r].clone()
        } else if self.at_upper[col] {
            self.upper[col].clone().expect("at upper implies finite")
        } else {
            Rational::zero()
        }
    }

    fn original_solution(&self) -> Vec<Rational> {
        self.maps
            .iter()
            .map(|map| match map {
                VarMap::Shift { col, offset } => offset + &self.column_value(*col),
                VarMap::Flip { col, offset } => offset - &self.column_value(*col),
                VarMap::Split { pos, neg } => &self.column_value(*pos) - &self.column_value(*neg),
            })
            .collect()
    }
}
