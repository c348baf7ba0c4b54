//! Sign sets, partial subdifferentials and the step functions of the
//! one-dimensional sections `α(t) = Σⱼ |yⱼt − vⱼ|` and `β(t) = Σᵢ |xᵢt − uᵢ|`.

use serde::Serialize;

use crate::error::CoreError;
use crate::instance::{l1_norm, residual_unchecked, Instance, Point};
use crate::rational::Rational;

/// Value of the set-valued sign function at a real number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignValue {
    MinusOne,
    PlusOne,
    /// The closed interval `[−1, 1]`, the sign of zero.
    FullInterval,
}

impl SignValue {
    pub fn of(t: &Rational) -> Self {
        match t.signum() {
            -1 => SignValue::MinusOne,
            1 => SignValue::PlusOne,
            _ => SignValue::FullInterval,
        }
    }

    /// Closed range `[lo, hi]` of admissible values.
    pub fn range(self) -> (Rational, Rational) {
        match self {
            SignValue::MinusOne => (-Rational::one(), -Rational::one()),
            SignValue::PlusOne => (Rational::one(), Rational::one()),
            SignValue::FullInterval => (-Rational::one(), Rational::one()),
        }
    }

    pub fn contains(self, t: &Rational) -> bool {
        let (lo, hi) = self.range();
        &lo <= t && t <= &hi
    }
}

/// Entrywise sign of the residual `x yᵀ − M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignMatrix {
    pub entries: Vec<Vec<SignValue>>,
}

impl SignMatrix {
    pub fn get(&self, i: usize, j: usize) -> SignValue {
        self.entries[i][j]
    }

    /// True when every entry of `lambda` lies in the corresponding sign set.
    pub fn admits(&self, lambda: &[Vec<Rational>]) -> bool {
        self.entries.len() == lambda.len()
            && self.entries.iter().zip(lambda).all(|(srow, lrow)| {
                srow.len() == lrow.len() && srow.iter().zip(lrow).all(|(s, l)| s.contains(l))
            })
    }
}

pub fn sign_matrix(inst: &Instance, p: &Point) -> Result<SignMatrix, CoreError> {
    inst.check_point(p)?;
    Ok(sign_matrix_unchecked(inst, p))
}

pub(crate) fn sign_matrix_unchecked(inst: &Instance, p: &Point) -> SignMatrix {
    let entries = residual_unchecked(inst, p)
        .iter()
        .map(|row| row.iter().map(SignValue::of).collect())
        .collect();
    SignMatrix { entries }
}

/// Closed interval with possibly infinite ends (`None`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl Interval {
    pub fn point(t: Rational) -> Self {
        Interval { lo: Some(t.clone()), hi: Some(t) }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Interval { lo: Some(lo), hi: Some(hi) }
    }

    pub fn real_line() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn contains(&self, t: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= t) && self.hi.as_ref().is_none_or(|hi| t <= hi)
    }

    fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(lo), Some(hi)) if lo > hi)
    }

    /// Image under `t ↦ s·t` for a sign `s ∈ {−1, 0, 1}`.
    fn scale_sign(&self, s: i8) -> Self {
        match s {
            1 => self.clone(),
            -1 => Interval { lo: self.hi.as_ref().map(|h| -h), hi: self.lo.as_ref().map(|l| -l) },
            _ => Interval::point(Rational::zero()),
        }
    }
}

/// Sorted union of disjoint nonempty closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn single(iv: Interval) -> Self {
        if iv.is_empty() {
            Self::empty()
        } else {
            IntervalSet { intervals: vec![iv] }
        }
    }

    pub fn point(t: Rational) -> Self {
        Self::single(Interval::point(t))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, t: &Rational) -> bool {
        self.intervals.iter().any(|iv| iv.contains(t))
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    /// The single member, when the set is a point.
    pub fn as_point(&self) -> Option<&Rational> {
        match self.intervals.as_slice() {
            [Interval { lo: Some(a), hi: Some(b) }] if a == b => Some(a),
            _ => None,
        }
    }

    pub fn scale_sign(&self, s: i8) -> Self {
        let mut intervals: Vec<Interval> = self.intervals.iter().map(|iv| iv.scale_sign(s)).collect();
        if s < 0 {
            intervals.reverse();
        }
        if s == 0 && !intervals.is_empty() {
            intervals.truncate(1);
        }
        IntervalSet { intervals }
    }
}

/// A non-decreasing piecewise-constant set-valued map on ℚ.
///
/// `plateaus[k]` is the value on the open interval between breakpoints
/// `k − 1` and `k` (with `±∞` at the ends); at a breakpoint the value is the
/// closed interval between the two neighbouring plateaus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepFunction {
    pub breakpoints: Vec<Rational>,
    pub plateaus: Vec<Rational>,
}

impl StepFunction {
    /// Subdifferential of `t ↦ Σₖ |aₖt − bₖ|`.
    pub fn of_abs_sum(slopes: &[Rational], offsets: &[Rational]) -> Self {
        let mut breakpoints: Vec<Rational> = slopes
            .iter()
            .zip(offsets)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, b)| b.checked_div(a).expect("nonzero slope"))
            .collect();
        breakpoints.sort();
        breakpoints.dedup();

        let eval_at = |t: &Rational| -> Rational {
            slopes
                .iter()
                .zip(offsets)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, b)| a.scale_sign((&(a * t) - b).signum()))
                .sum()
        };
        let samples: Vec<Rational> = match (breakpoints.first(), breakpoints.last()) {
            (Some(first), Some(last)) => std::iter::once(first - &Rational::one())
                .chain(breakpoints.windows(2).map(|w| w[0].midpoint(&w[1])))
                .chain(std::iter::once(last + &Rational::one()))
                .collect(),
            _ => vec![Rational::zero()],
        };
        let plateaus = samples.iter().map(eval_at).collect();
        StepFunction { breakpoints, plateaus }
    }

    /// Closed jump interval at each breakpoint.
    pub fn jumps(&self) -> Vec<(Rational, Interval)> {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, b)| (b.clone(), Interval::closed(self.plateaus[k].clone(), self.plateaus[k + 1].clone())))
            .collect()
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.plateaus.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `∂α` at the given point.
pub fn step_alpha(inst: &Instance, p: &Point) -> Result<StepFunction, CoreError> {
    inst.check_point(p)?;
    Ok(StepFunction::of_abs_sum(&p.y, inst.v()))
}

/// `∂β` at the given point.
pub fn step_beta(inst: &Instance, p: &Point) -> Result<StepFunction, CoreError> {
    inst.check_point(p)?;
    Ok(StepFunction::of_abs_sum(&p.x, inst.u()))
}

pub fn step_eval(sf: &StepFunction, t: &Rational) -> IntervalSet {
    match sf.breakpoints.binary_search(t) {
        Ok(k) => IntervalSet::single(Interval::closed(sf.plateaus[k].clone(), sf.plateaus[k + 1].clone())),
        Err(k) => IntervalSet::point(sf.plateaus[k].clone()),
    }
}

/// `{ t : 0 ∈ sf(t) }`, a single closed interval or empty by monotonicity.
pub fn roots(sf: &StepFunction) -> IntervalSet {
    let first_zero = sf.plateaus.first().is_some_and(Rational::is_zero);
    let last_zero = sf.plateaus.last().is_some_and(Rational::is_zero);
    if sf.breakpoints.is_empty() {
        return if first_zero { IntervalSet::single(Interval::real_line()) } else { IntervalSet::empty() };
    }
    let hits: Vec<&Rational> = sf
        .jumps()
        .into_iter()
        .filter(|(_, iv)| iv.contains(&Rational::zero()))
        .map(|(b, _)| sf.breakpoints.iter().find(|x| **x == b).expect("breakpoint"))
        .collect();
    if hits.is_empty() {
        return IntervalSet::empty();
    }
    let lo = if first_zero { None } else { Some(hits[0].clone()) };
    let hi = if last_zero { None } else { Some(hits[hits.len() - 1].clone()) };
    IntervalSet::single(Interval { lo, hi })
}

fn check_index(index: usize, len: usize) -> Result<(), CoreError> {
    if index >= len {
        return Err(CoreError::IndexOutOfRange { index, len });
    }
    Ok(())
}

/// Partial subdifferential of `f` in `xᵢ` (zero-based `i`).
pub fn partial_subdiff_x(inst: &Instance, p: &Point, i: usize) -> Result<IntervalSet, CoreError> {
    inst.check_point(p)?;
    check_index(i, inst.m())?;
    Ok(partial_in_factor(&inst.u()[i], &p.x[i], &p.y, inst.v()))
}

/// Partial subdifferential of `f` in `yⱼ` (zero-based `j`).
pub fn partial_subdiff_y(inst: &Instance, p: &Point, j: usize) -> Result<IntervalSet, CoreError> {
    inst.check_point(p)?;
    check_index(j, inst.n())?;
    Ok(partial_in_factor(&inst.v()[j], &p.y[j], &p.x, inst.u()))
}

/// Subdifferential of `s ↦ Σₖ |s·wₖ − c·oₖ|` at `s = own`.
fn partial_in_factor(c: &Rational, own: &Rational, other: &[Rational], other_factor: &[Rational]) -> IntervalSet {
    if c.is_zero() {
        let norm = l1_norm(other);
        return match own.signum() {
            0 => IntervalSet::single(Interval::closed(-&norm, norm)),
            s => IntervalSet::point(norm.scale_sign(s)),
        };
    }
    let sf = StepFunction::of_abs_sum(other, other_factor);
    let t = own.checked_div(c).expect("nonzero factor");
    step_eval(&sf, &t).scale_sign(c.signum())
}

/// One-sided directional derivative `f′((x, y); (h, k))`.
///
/// Each term `|rᵢⱼ(t)|` with `rᵢⱼ(t) = (xᵢ + thᵢ)(yⱼ + tkⱼ) − Mᵢⱼ` has
/// derivative `sign(rᵢⱼ)·aᵢⱼ` when `rᵢⱼ ≠ 0` and `|aᵢⱼ|` otherwise, where
/// `aᵢⱼ = xᵢkⱼ + hᵢyⱼ` is the first-order coefficient of `rᵢⱼ(t)`.
pub fn directional_derivative(inst: &Instance, p: &Point, d: &Point) -> Result<Rational, CoreError> {
    inst.check_point(p)?;
    inst.check_point(d)?;
    Ok(directional_derivative_unchecked(inst, p, d))
}

pub(crate) fn directional_derivative_unchecked(inst: &Instance, p: &Point, d: &Point) -> Rational {
    let r = residual_unchecked(inst, p);
    let mut total = Rational::zero();
    for i in 0..inst.m() {
        for j in 0..inst.n() {
            let a = &(&p.x[i] * &d.y[j]) + &(&d.x[i] * &p.y[j]);
            match r[i][j].signum() {
                0 => total += a.abs(),
                s => total += a.scale_sign(s),
            }
        }
    }
    total
}

/// Whether `0` belongs to every partial subdifferential; necessary for criticality.
pub fn zero_in_partials(inst: &Instance, p: &Point) -> Result<bool, CoreError> {
    inst.check_point(p)?;
    let xs = (0..inst.m()).all(|i| partial_in_factor(&inst.u()[i], &p.x[i], &p.y, inst.v()).contains_zero());
    let ys = (0..inst.n()).all(|j| partial_in_factor(&inst.v()[j], &p.y[j], &p.x, inst.u()).contains_zero());
    Ok(xs && ys)
}
