//! Three independent deciders for `0 ∈ ∂f(x, y)`.
//!
//! * [`is_critical_lp`] searches for `Λ ∈ sign(x yᵀ − M)` with `Λy = 0` and
//!   `Λᵀx = 0` as an exact linear feasibility problem.
//! * [`is_critical_directional`] minimizes the directional derivative over the
//!   unit box; the point is critical iff no direction decreases `f`.
//! * [`is_critical_closed_form`] evaluates quantifier-free conditions on
//!   `(u, v, x, y)` directly.

use serde::Serialize;

use crate::error::AnalysisError;
use crate::instance::{residual_unchecked, Instance, Point};
use crate::lp::{dot, solve_feasibility, solve_min, BoxLinearSystem, LpStatus};
use crate::rational::Rational;
use crate::subdiff::{directional_derivative_unchecked, sign_matrix_unchecked, SignValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LambdaLp,
    DirectionalLp,
    ClosedForm,
}

/// Which closed-form criticality condition held first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCondition {
    /// `x yᵀ = M`.
    ZeroResidual,
    /// `y = 0` and `|Σ_{uᵢ≠0} sign(uᵢ)xᵢ| ≤ Σ_{uᵢ=0} |xᵢ|`.
    YZero,
    /// `x = 0` and `|Σ_{vⱼ≠0} sign(vⱼ)yⱼ| ≤ Σ_{vⱼ=0} |yⱼ|`.
    XZero,
    /// Both signed sums vanish, every ratio `xᵢyⱼ / (uᵢvⱼ)` is at most one,
    /// and `x`, `y` vanish wherever `u`, `v` do.
    BalancedRatios,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    LambdaWitness(Vec<Vec<Rational>>),
    DescentCertificate(Point),
    MatchedCondition(CriticalCondition),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalityVerdict {
    pub is_critical: bool,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
}

/// Exact feasibility of `Λ ∈ sign(x yᵀ − M)`, `Λy = 0`, `Λᵀx = 0`.
pub fn is_critical_lp(inst: &Instance, p: &Point) -> Result<CriticalityVerdict, AnalysisError> {
    inst.check_point(p)?;
    let (m, n) = (inst.m(), inst.n());
    let signs = sign_matrix_unchecked(inst, p);

    // Only entries of the residual that vanish leave Λᵢⱼ free.
    let mut var_of = vec![vec![None; n]; m];
    let mut num_vars = 0;
    for (i, row) in signs.entries.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if *s == SignValue::FullInterval {
                var_of[i][j] = Some(num_vars);
                num_vars += 1;
            }
        }
    }
    let fixed = |i: usize, j: usize| match signs.get(i, j) {
        SignValue::MinusOne => -Rational::one(),
        _ => Rational::one(),
    };

    let mut sys = BoxLinearSystem::new(num_vars);
    for var in 0..num_vars {
        sys.set_bounds(var, Some(-Rational::one()), Some(Rational::one()));
    }
    for i in 0..m {
        let mut coeffs = vec![Rational::zero(); num_vars];
        let mut rhs = Rational::zero();
        for j in 0..n {
            match var_of[i][j] {
                Some(var) => coeffs[var] = p.y[j].clone(),
                None => rhs -= &(&fixed(i, j) * &p.y[j]),
            }
        }
        sys.add_equality(coeffs, rhs);
    }
    for j in 0..n {
        let mut coeffs = vec![Rational::zero(); num_vars];
        let mut rhs = Rational::zero();
        for i in 0..m {
            match var_of[i][j] {
                Some(var) => coeffs[var] = p.x[i].clone(),
                None => rhs -= &(&fixed(i, j) * &p.x[i]),
            }
        }
        sys.add_equality(coeffs, rhs);
    }

    let outcome = solve_feasibility(&sys)?;
    if outcome.status != LpStatus::Feasible {
        return Ok(CriticalityVerdict { is_critical: false, method: Method::LambdaLp, evidence: None });
    }
    let w = outcome.witness.ok_or_else(|| AnalysisError::Internal("feasible system without witness".into()))?;
    let lambda: Vec<Vec<Rational>> = (0..m)
        .map(|i| (0..n).map(|j| var_of[i][j].map_or_else(|| fixed(i, j), |var| w[var].clone())).collect())
        .collect();
    if !lambda_certifies(inst, p, &lambda) {
        return Err(AnalysisError::Internal("multiplier witness fails verification".into()));
    }
    Ok(CriticalityVerdict { is_critical: true, method: Method::LambdaLp, evidence: Some(Evidence::LambdaWitness(lambda)) })
}

/// `Λ ∈ sign(x yᵀ − M)`, `Λy = 0` and `Λᵀx = 0`, checked exactly.
pub fn lambda_certifies(inst: &Instance, p: &Point, lambda: &[Vec<Rational>]) -> bool {
    if inst.check_point(p).is_err() || !sign_matrix_unchecked(inst, p).admits(lambda) {
        return false;
    }
    let rows_vanish = lambda.iter().all(|row| dot(row, &p.y).is_zero());
    let cols_vanish = (0..inst.n()).all(|j| {
        let col: Vec<Rational> = lambda.iter().map(|row| row[j].clone()).collect();
        dot(&col, &p.x).is_zero()
    });
    rows_vanish && cols_vanish
}

/// Minimizes `d ↦ f′(p; d)` over `‖d‖_∞ ≤ 1`.
///
/// Variables are `h`, `k` and, for every vanishing residual entry, a pair
/// `(pᵢⱼ, qᵢⱼ) ≥ 0` with `xᵢkⱼ + hᵢyⱼ = pᵢⱼ − qᵢⱼ`; at an optimum
/// `pᵢⱼ + qᵢⱼ = |xᵢkⱼ + hᵢyⱼ|`.
pub fn is_critical_directional(inst: &Instance, p: &Point) -> Result<CriticalityVerdict, AnalysisError> {
    inst.check_point(p)?;
    let (m, n) = (inst.m(), inst.n());
    let r = residual_unchecked(inst, p);
    let zeros: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| r[i][j].is_zero()).collect();

    let num_vars = m + n + 2 * zeros.len();
    let mut sys = BoxLinearSystem::new(num_vars);
    for var in 0..m + n {
        sys.set_bounds(var, Some(-Rational::one()), Some(Rational::one()));
    }
    for var in m + n..num_vars {
        sys.set_bounds(var, Some(Rational::zero()), None);
    }

    let mut objective = vec![Rational::zero(); num_vars];
    for i in 0..m {
        for j in 0..n {
            match r[i][j].signum() {
                0 => {}
                s => {
                    objective[i] += p.y[j].scale_sign(s);
                    objective[m + j] += p.x[i].scale_sign(s);
                }
            }
        }
    }
    for (z, &(i, j)) in zeros.iter().enumerate() {
        let (pv, qv) = (m + n + 2 * z, m + n + 2 * z + 1);
        objective[pv] = Rational::one();
        objective[qv] = Rational::one();
        let mut coeffs = vec![Rational::zero(); num_vars];
        coeffs[i] = p.y[j].clone();
        coeffs[m + j] += &p.x[i];
        coeffs[pv] = -Rational::one();
        coeffs[qv] = Rational::one();
        sys.add_equality(coeffs, Rational::zero());
    }

    let outcome = solve_min(&sys, &objective)?;
    let value = match (outcome.status, outcome.objective_value) {
        (LpStatus::Optimal, Some(v)) => v,
        (status, _) => return Err(AnalysisError::Internal(format!("directional program ended {status:?}"))),
    };
    if !value.is_negative() {
        return Ok(CriticalityVerdict { is_critical: true, method: Method::DirectionalLp, evidence: None });
    }
    let w = outcome.witness.ok_or_else(|| AnalysisError::Internal("optimum without witness".into()))?;
    let d = Point::new(w[..m].to_vec(), w[m..m + n].to_vec());
    if !directional_derivative_unchecked(inst, p, &d).is_negative() {
        return Err(AnalysisError::Internal("descent certificate does not decrease f".into()));
    }
    Ok(CriticalityVerdict {
        is_critical: false,
        method: Method::DirectionalLp,
        evidence: Some(Evidence::DescentCertificate(d)),
    })
}

/// Comparison used for the ratio condition `xᵢyⱼ / (uᵢvⱼ) ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RatioTest {
    AtMostOne,
    /// Deliberately wrong strict variant, used to check that fuzzing notices.
    #[cfg_attr(not(test), allow(dead_code))]
    BelowOne,
}

/// `Σ_{cᵢ≠0} sign(cᵢ)sᵢ` and `Σ_{cᵢ=0} |sᵢ|`.
pub(crate) fn signed_sums(factor: &[Rational], s: &[Rational]) -> (Rational, Rational) {
    let mut signed = Rational::zero();
    let mut free = Rational::zero();
    for (c, si) in factor.iter().zip(s) {
        match c.signum() {
            0 => free += si.abs(),
            sg => signed += si.scale_sign(sg),
        }
    }
    (signed, free)
}

fn all_zero(s: &[Rational]) -> bool {
    s.iter().all(Rational::is_zero)
}

pub(crate) fn balanced_ratios(inst: &Instance, p: &Point, test: RatioTest) -> bool {
    let (u, v) = (inst.u(), inst.v());
    if !signed_sums(u, &p.x).0.is_zero() || !signed_sums(v, &p.y).0.is_zero() {
        return false;
    }
    let vanish_with = |c: &[Rational], s: &[Rational]| c.iter().zip(s).all(|(c, s)| !c.is_zero() || s.is_zero());
    if !vanish_with(u, &p.x) || !vanish_with(v, &p.y) {
        return false;
    }
    u.iter().zip(&p.x).filter(|(ui, _)| !ui.is_zero()).all(|(ui, xi)| {
        v.iter().zip(&p.y).filter(|(vj, _)| !vj.is_zero()).all(|(vj, yj)| {
            let w = ui * vj;
            // Multiply through by |uᵢvⱼ| > 0 to avoid dividing.
            let lhs = (xi * yj).scale_sign(w.signum());
            let rhs = w.abs();
            match test {
                RatioTest::AtMostOne => lhs <= rhs,
                RatioTest::BelowOne => lhs < rhs,
            }
        })
    })
}

pub(crate) fn closed_form_condition(inst: &Instance, p: &Point, test: RatioTest) -> Option<CriticalCondition> {
    if residual_unchecked(inst, p).iter().flatten().all(Rational::is_zero) {
        return Some(CriticalCondition::ZeroResidual);
    }
    let (su, zu) = signed_sums(inst.u(), &p.x);
    if all_zero(&p.y) && su.abs() <= zu {
        return Some(CriticalCondition::YZero);
    }
    let (sv, zv) = signed_sums(inst.v(), &p.y);
    if all_zero(&p.x) && sv.abs() <= zv {
        return Some(CriticalCondition::XZero);
    }
    if balanced_ratios(inst, p, test) {
        return Some(CriticalCondition::BalancedRatios);
    }
    None
}

pub(crate) fn closed_form_verdict(inst: &Instance, p: &Point, test: RatioTest) -> CriticalityVerdict {
    let cond = closed_form_condition(inst, p, test);
    CriticalityVerdict {
        is_critical: cond.is_some(),
        method: Method::ClosedForm,
        evidence: cond.map(Evidence::MatchedCondition),
    }
}

/// Conditions are tried cheapest first; the first that holds is reported.
pub fn is_critical_closed_form(inst: &Instance, p: &Point) -> Result<CriticalityVerdict, AnalysisError> {
    inst.check_point(p)?;
    Ok(closed_form_verdict(inst, p, RatioTest::AtMostOne))
}

/// The multiplier `Λ = −sgn(u vᵀ)` (with `sgn(0) = 0`) at a point satisfying
/// the balanced-ratio condition, or at a zero of `f` when `M = 0` (where the
/// multiplier is the zero matrix).
pub fn witness_lambda(inst: &Instance, p: &Point) -> Result<Vec<Vec<Rational>>, AnalysisError> {
    inst.check_point(p)?;
    let zero_target_minimum = inst.is_zero_matrix() && (all_zero(&p.x) || all_zero(&p.y));
    if !zero_target_minimum && !balanced_ratios(inst, p, RatioTest::AtMostOne) {
        return Err(AnalysisError::PreconditionViolated("balanced-ratio condition does not hold".into()));
    }
    let lambda: Vec<Vec<Rational>> = inst
        .u()
        .iter()
        .map(|ui| inst.v().iter().map(|vj| Rational::from(-i64::from(ui.signum() * vj.signum()))).collect())
        .collect();
    if !lambda_certifies(inst, p, &lambda) {
        return Err(AnalysisError::Internal("constructed multiplier fails verification".into()));
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::eval_f;
    use crate::rational::{ints, q};
    use crate::subdiff::{directional_derivative, step_alpha, step_beta, step_eval, zero_in_partials};
    use proptest::prelude::*;

    fn eq13() -> (Instance, Point) {
        let inst = Instance::from_factors(ints(&[2, -1]), vec![q(1, 1), q(1, 2)]).unwrap();
        (inst, Point::new(ints(&[1, -1]), ints(&[1, 1])))
    }

    fn fig2() -> (Instance, Point) {
        let inst = Instance::from_factors(ints(&[-2, -1, 2, 1, -2]), ints(&[-1, 1, 1])).unwrap();
        (inst, Point::new(ints(&[2, -1, -1, 1, -1]), vec![q(-1, 1), q(-1, 2), q(-1, 2)]))
    }

    fn column() -> Instance {
        Instance::from_factors(ints(&[0, 1]), ints(&[1])).unwrap()
    }

    fn all_three(inst: &Instance, p: &Point) -> [bool; 3] {
        [
            is_critical_lp(inst, p).unwrap().is_critical,
            is_critical_directional(inst, p).unwrap().is_critical,
            is_critical_closed_form(inst, p).unwrap().is_critical,
        ]
    }

    #[test]
    fn strict_inclusion_fixture_is_not_critical() {
        let (inst, p) = eq13();
        assert_eq!(all_three(&inst, &p), [false; 3]);
        assert!(zero_in_partials(&inst, &p).unwrap());
        let dir = is_critical_directional(&inst, &p).unwrap();
        let Some(Evidence::DescentCertificate(d)) = dir.evidence else { panic!("missing certificate") };
        assert!(directional_derivative(&inst, &p, &d).unwrap().is_negative());
        assert_eq!(is_critical_closed_form(&inst, &p).unwrap().evidence, None);
    }

    #[test]
    fn five_by_three_fixture_is_critical() {
        let (inst, p) = fig2();
        assert_eq!(all_three(&inst, &p), [true; 3]);
        let lp = is_critical_lp(&inst, &p).unwrap();
        let Some(Evidence::LambdaWitness(l)) = lp.evidence else { panic!("missing witness") };
        assert!(lambda_certifies(&inst, &p, &l));
        assert_eq!(
            is_critical_closed_form(&inst, &p).unwrap().evidence,
            Some(Evidence::MatchedCondition(CriticalCondition::BalancedRatios))
        );
        let w = witness_lambda(&inst, &p).unwrap();
        assert_eq!(w[0], ints(&[-1, 1, 1]));
    }

    #[test]
    fn column_target_fixtures() {
        let inst = column();
        assert_eq!(all_three(&inst, &Point::zeros(2, 1)), [true; 3]);
        let p = Point::new(ints(&[1, 0]), ints(&[0]));
        assert_eq!(all_three(&inst, &p), [true; 3]);
        assert_eq!(
            is_critical_closed_form(&inst, &p).unwrap().evidence,
            Some(Evidence::MatchedCondition(CriticalCondition::YZero))
        );
        let gm = Point::new(ints(&[0, 3]), vec![q(1, 3)]);
        assert_eq!(all_three(&inst, &gm), [true; 3]);
        let off = Point::new(ints(&[0, 1]), ints(&[2]));
        assert_eq!(all_three(&inst, &off), [false; 3]);
    }

    #[test]
    fn witness_lambda_cases() {
        let zero = Instance::from_factors(ints(&[0, 0]), ints(&[0])).unwrap();
        let w = witness_lambda(&zero, &Point::new(ints(&[0, 0]), ints(&[5]))).unwrap();
        assert_eq!(w, vec![ints(&[0]), ints(&[0])]);
        let one = Instance::from_factors(ints(&[1]), ints(&[1])).unwrap();
        let err = witness_lambda(&one, &Point::new(ints(&[-1]), ints(&[-1]))).unwrap_err();
        assert!(matches!(err, AnalysisError::PreconditionViolated(_)));
    }

    #[test]
    fn strict_ratio_test_rejects_binding_points() {
        let (inst, p) = fig2();
        assert!(!balanced_ratios(&inst, &p, RatioTest::BelowOne));
        assert!(balanced_ratios(&inst, &p, RatioTest::AtMostOne));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (inst, _) = eq13();
        let bad = Point::zeros(3, 2);
        assert!(is_critical_lp(&inst, &bad).is_err());
        assert!(is_critical_directional(&inst, &bad).is_err());
        assert!(is_critical_closed_form(&inst, &bad).is_err());
    }

    #[test]
    fn verdict_json_shape() {
        let (inst, p) = eq13();
        let v = serde_json::to_value(is_critical_closed_form(&inst, &p).unwrap()).unwrap();
        assert_eq!(v, serde_json::json!({"is_critical": false, "method": "closed_form"}));
        let (inst, p) = fig2();
        let v = serde_json::to_value(is_critical_closed_form(&inst, &p).unwrap()).unwrap();
        assert_eq!(v["evidence"]["matched_condition"], "balanced_ratios");
    }

    fn pool() -> impl Strategy<Value = Rational> {
        prop::sample::select(vec![q(-2, 1), q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1), q(2, 1)])
    }

    /// Random points plus points projected onto the families where criticality is common.
    fn case() -> impl Strategy<Value = (Instance, Point)> {
        (1usize..4, 1usize..4).prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(pool(), m),
                prop::collection::vec(pool(), n),
                prop::collection::vec(pool(), m),
                prop::collection::vec(pool(), n),
                0u8..4,
            )
                .prop_map(|(u, v, x, y, family)| {
                    let inst = Instance::from_factors(u.clone(), v.clone()).unwrap();
                    let p = match family {
                        0 => Point::new(x, y),
                        1 => Point::new(x, vec![Rational::zero(); v.len()]),
                        2 => Point::new(vec![Rational::zero(); u.len()], y),
                        _ => {
                            let mask = |c: &[Rational], s: Vec<Rational>| -> Vec<Rational> {
                                c.iter().zip(s).map(|(c, s)| if c.is_zero() { Rational::zero() } else { s }).collect()
                            };
                            Point::new(mask(&u, x), mask(&v, y))
                        }
                    };
                    (inst, p)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn deciders_agree((inst, p) in case()) {
            let verdicts = all_three(&inst, &p);
            prop_assert!(verdicts.iter().all(|&b| b == verdicts[0]), "{:?}", verdicts);
        }

        #[test]
        fn critical_points_have_zero_in_every_partial((inst, p) in case()) {
            if is_critical_lp(&inst, &p).unwrap().is_critical {
                prop_assert!(zero_in_partials(&inst, &p).unwrap());
            }
        }

        #[test]
        fn critical_points_with_positive_value_have_root_at_zero((inst, p) in case()) {
            if is_critical_closed_form(&inst, &p).unwrap().is_critical && eval_f(&inst, &p).unwrap().is_positive() {
                let zero = Rational::zero();
                prop_assert!(step_eval(&step_alpha(&inst, &p).unwrap(), &zero).contains_zero());
                prop_assert!(step_eval(&step_beta(&inst, &p).unwrap(), &zero).contains_zero());
            }
        }

        #[test]
        fn global_minima_are_critical(u in prop::collection::vec(pool(), 1..4), v in prop::collection::vec(pool(), 1..4), t in prop::sample::select(vec![q(-2, 1), q(-1, 2), q(1, 3), q(3, 2)])) {
            let inst = Instance::from_factors(u.clone(), v.clone()).unwrap();
            let p = Point::new(u.iter().map(|a| a * &t).collect(), v.iter().map(|b| b.checked_div(&t).unwrap()).collect());
            prop_assert_eq!(all_three(&inst, &p), [true; 3]);
        }

        #[test]
        fn certificates_are_valid((inst, p) in case()) {
            match is_critical_directional(&inst, &p).unwrap().evidence {
                Some(Evidence::DescentCertificate(d)) => prop_assert!(directional_derivative(&inst, &p, &d).unwrap().is_negative()),
                _ => {}
            }
            if let Some(Evidence::LambdaWitness(l)) = is_critical_lp(&inst, &p).unwrap().evidence {
                prop_assert!(lambda_certifies(&inst, &p, &l));
            }
            if balanced_ratios(&inst, &p, RatioTest::AtMostOne) {
                prop_assert!(witness_lambda(&inst, &p).is_ok());
            }
        }
    }
}
