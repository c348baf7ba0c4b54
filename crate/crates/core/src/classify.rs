//! Classification of points as global minima, spurious local minima or
//! saddles, and verified descent directions at saddles.

use serde::Serialize;

use crate::criticality::{closed_form_condition, signed_sums, CriticalCondition, RatioTest};
use crate::error::{AnalysisError, CoreError};
use crate::instance::{eval_f_unchecked, factor_rank_one, residual_unchecked, Instance, Matrix, Point};
use crate::rational::Rational;

/// Halvings tried when searching for a certified step bound.
const MAX_HALVINGS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PointKind {
    NotCritical,
    GlobalMin,
    SpuriousLocalMin,
    Saddle,
}

/// The condition behind a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassCondition {
    /// `x yᵀ = M`.
    Global,
    /// `y = 0` and `|Σ_{uᵢ≠0} sign(uᵢ)xᵢ| < Σ_{uᵢ=0} |xᵢ|`.
    SpuriousX,
    /// `x = 0` and `|Σ_{vⱼ≠0} sign(vⱼ)yⱼ| < Σ_{vⱼ=0} |yⱼ|`.
    SpuriousY,
    /// `y = 0` with equality in the sum condition.
    SaddleX,
    /// `x = 0` with equality in the sum condition.
    SaddleY,
    /// Balanced signed sums with every ratio `xᵢyⱼ / (uᵢvⱼ) ≤ 1`.
    SaddleBalanced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub kind: PointKind,
    pub condition: Option<ClassCondition>,
    /// For global minima of a nonzero target, `θ` with `(x, y) = (uθ, v/θ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Rational>,
    pub f_value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescentPlan {
    pub theta: Rational,
    /// `d = (uθ − x, v/θ − y)`.
    pub direction: Point,
    /// `f(p + t d) = (1 − t²) f(p)` holds for every `t ∈ (0, valid_step_bound]`.
    pub valid_step_bound: Rational,
}

pub fn classify_point(inst: &Instance, p: &Point) -> Result<Classification, AnalysisError> {
    inst.check_point(p)?;
    let f_value = eval_f_unchecked(inst, p);
    let Some(cond) = closed_form_condition(inst, p, RatioTest::AtMostOne) else {
        return Ok(Classification { kind: PointKind::NotCritical, condition: None, theta: None, f_value });
    };
    let (kind, condition) = match cond {
        CriticalCondition::ZeroResidual => (PointKind::GlobalMin, ClassCondition::Global),
        CriticalCondition::YZero => {
            let (s, z) = signed_sums(inst.u(), &p.x);
            if s.abs() < z {
                (PointKind::SpuriousLocalMin, ClassCondition::SpuriousX)
            } else {
                (PointKind::Saddle, ClassCondition::SaddleX)
            }
        }
        CriticalCondition::XZero => {
            let (s, z) = signed_sums(inst.v(), &p.y);
            if s.abs() < z {
                (PointKind::SpuriousLocalMin, ClassCondition::SpuriousY)
            } else {
                (PointKind::Saddle, ClassCondition::SaddleY)
            }
        }
        CriticalCondition::BalancedRatios => (PointKind::Saddle, ClassCondition::SaddleBalanced),
    };
    if (kind == PointKind::GlobalMin) != f_value.is_zero() {
        return Err(AnalysisError::Internal(format!("{kind:?} at f = {f_value}")));
    }
    let theta = match kind {
        PointKind::GlobalMin if inst.has_nonzero_factors() => {
            let i = inst.u().iter().position(|ui| !ui.is_zero()).expect("nonzero u");
            Some(p.x[i].checked_div(&inst.u()[i]).map_err(CoreError::from)?)
        }
        _ => None,
    };
    Ok(Classification { kind, condition: Some(condition), theta, f_value })
}

/// Scale `θ` for the saddle descent direction.
fn descent_theta(inst: &Instance, p: &Point, condition: ClassCondition) -> Rational {
    let (su, _) = signed_sums(inst.u(), &p.x);
    let (sv, _) = signed_sums(inst.v(), &p.y);
    match condition {
        ClassCondition::SaddleX if !su.is_zero() => return Rational::from(i64::from(su.signum())),
        ClassCondition::SaddleY if !sv.is_zero() => return Rational::from(i64::from(sv.signum())),
        _ => {}
    }
    // Binding pairs have xᵢyⱼ = uᵢvⱼ ≠ 0; their ratios xᵢ/uᵢ share a value per sign.
    let mut negative = None;
    for (ui, xi) in inst.u().iter().zip(&p.x) {
        if ui.is_zero() {
            continue;
        }
        for (vj, yj) in inst.v().iter().zip(&p.y) {
            if vj.is_zero() || xi * yj != ui * vj {
                continue;
            }
            let ratio = xi.checked_div(ui).expect("nonzero u entry");
            if ratio.is_positive() {
                return ratio;
            }
            negative.get_or_insert(ratio);
        }
    }
    negative.unwrap_or_else(Rational::one)
}

fn descent_identity_holds(inst: &Instance, p: &Point, d: &Point, f0: &Rational, t: &Rational) -> bool {
    let ft = eval_f_unchecked(inst, &p.add_scaled(t, d));
    ft == &(Rational::one() - t * t) * f0
}

/// Every residual entry keeps one sign on `[0, t]`.
///
/// Entry `(i, j)` of the residual along `p + s d` is `r + a s + b s²` with
/// `a = xᵢkⱼ + hᵢyⱼ` and `b = hᵢkⱼ`; its extremes on `[0, t]` sit at the
/// endpoints or at the vertex `−a / 2b`.
fn residual_signs_constant(inst: &Instance, p: &Point, d: &Point, t: &Rational) -> bool {
    let r = residual_unchecked(inst, p);
    let two = Rational::from(2);
    for (i, row) in r.iter().enumerate() {
        for (j, r0) in row.iter().enumerate() {
            let a = &(&p.x[i] * &d.y[j]) + &(&d.x[i] * &p.y[j]);
            let b = &d.x[i] * &d.y[j];
            let at = |s: &Rational| r0 + &(&(&a * s) + &(&(&b * s) * s));
            let mut values = vec![r0.clone(), at(t)];
            if !b.is_zero() {
                let vertex = (-&a).checked_div(&(&two * &b)).expect("nonzero curvature");
                if vertex.is_positive() && &vertex < t {
                    values.push(at(&vertex));
                }
            }
            let nonneg = values.iter().all(|v| !v.is_negative());
            let nonpos = values.iter().all(|v| !v.is_positive());
            if !nonneg && !nonpos {
                return false;
            }
        }
    }
    true
}

/// On `[0, t]` with constant residual signs, `s ↦ f(p + s d)` is a quadratic,
/// so agreement with `(1 − s²) f(p)` at `0`, `t/2` and `t` gives it everywhere.
fn certified_step(inst: &Instance, p: &Point, d: &Point, f0: &Rational, t: &Rational) -> bool {
    let half = t * &Rational::pow2_neg(1);
    residual_signs_constant(inst, p, d, t)
        && descent_identity_holds(inst, p, d, f0, t)
        && descent_identity_holds(inst, p, d, f0, &half)
}

fn require_saddle(inst: &Instance, p: &Point) -> Result<Classification, AnalysisError> {
    let class = classify_point(inst, p)?;
    if class.kind != PointKind::Saddle {
        return Err(AnalysisError::PreconditionViolated(format!("point is {:?}, not a saddle", class.kind)));
    }
    Ok(class)
}

/// Direction toward a global minimum `(uθ, v/θ)` along which `f` decreases
/// like `(1 − t²) f(p)`.
pub fn descent_direction(inst: &Instance, p: &Point) -> Result<DescentPlan, AnalysisError> {
    let class = require_saddle(inst, p)?;
    if !inst.has_nonzero_factors() {
        return Err(AnalysisError::PreconditionViolated("descent needs u ≠ 0 and v ≠ 0".into()));
    }
    let condition = class.condition.expect("saddles carry a condition");
    let theta = descent_theta(inst, p, condition);
    let inv = theta.recip().map_err(CoreError::from)?;
    let direction = Point::new(
        inst.u().iter().zip(&p.x).map(|(ui, xi)| &(ui * &theta) - xi).collect(),
        inst.v().iter().zip(&p.y).map(|(vj, yj)| &(vj * &inv) - yj).collect(),
    );
    let f0 = &class.f_value;
    let mut t = Rational::one();
    for _ in 0..=MAX_HALVINGS {
        if certified_step(inst, p, &direction, f0, &t) {
            return Ok(DescentPlan { theta, direction, valid_step_bound: t });
        }
        t = &t * &Rational::pow2_neg(1);
    }
    Err(AnalysisError::Internal(format!("no certified step for θ = {theta}")))
}

/// Checks `f(p + t d) = (1 − t²) f(p)` exactly.
pub fn verify_descent(inst: &Instance, p: &Point, plan: &DescentPlan, t: &Rational) -> Result<bool, AnalysisError> {
    let class = require_saddle(inst, p)?;
    inst.check_point(&plan.direction)?;
    if !t.is_positive() || t > &plan.valid_step_bound {
        return Err(AnalysisError::PreconditionViolated(format!(
            "step {t} outside (0, {}]",
            plan.valid_step_bound
        )));
    }
    Ok(descent_identity_holds(inst, p, &plan.direction, &class.f_value, t))
}

/// A spurious local minimum, when the target has both zero and nonzero entries.
pub fn spurious_witness(inst: &Instance) -> Option<Point> {
    if inst.is_zero_matrix() {
        return None;
    }
    let (m, n) = (inst.m(), inst.n());
    if let Some(i) = inst.u().iter().position(Rational::is_zero) {
        let mut p = Point::zeros(m, n);
        p.x[i] = Rational::one();
        return Some(p);
    }
    if let Some(j) = inst.v().iter().position(Rational::is_zero) {
        let mut p = Point::zeros(m, n);
        p.y[j] = Rational::one();
        return Some(p);
    }
    None
}

/// True iff `M` has no zero entries or is zero, i.e. `f` has no spurious
/// local minima.
pub fn theorem1_predicate(matrix: &Matrix) -> Result<bool, CoreError> {
    factor_rank_one(matrix)?;
    let entries = || matrix.iter().flatten();
    Ok(entries().all(Rational::is_zero) || entries().all(|e| !e.is_zero()))
}

/// Radius of the box around a spurious minimum inside which
/// [`spurious_lower_bound`] holds.
///
/// Besides a quarter of the smallest relevant magnitude, the radius is capped
/// so that the summed perturbation of the free coordinates stays below half
/// the slack, and so that perturbed products never overtake `uᵢvⱼ`.
pub fn spurious_probe_radius(inst: &Instance, p: &Point) -> Result<Rational, AnalysisError> {
    let class = classify_point(inst, p)?;
    let (own_factor, own, count) = match class.condition {
        Some(ClassCondition::SpuriousX) => (inst.u(), &p.x, inst.m()),
        Some(ClassCondition::SpuriousY) => (inst.v(), &p.y, inst.n()),
        _ => return Err(AnalysisError::PreconditionViolated("point is not a spurious minimum".into())),
    };
    let (s, z) = signed_sums(own_factor, own);
    let slack = &z - &s.abs();
    let products: Vec<Rational> =
        inst.u().iter().flat_map(|ui| inst.v().iter().map(move |vj| (ui * vj).abs())).filter(|w| !w.is_zero()).collect();
    let smallest = own
        .iter()
        .map(Rational::abs)
        .filter(|a| !a.is_zero())
        .chain(std::iter::once(slack.clone()))
        .chain(products.iter().cloned())
        .min()
        .expect("slack is present");
    let largest_coord = own.iter().map(Rational::abs).max().unwrap_or_else(Rational::zero);
    let min_product = products.iter().min().cloned().unwrap_or_else(Rational::one);
    let quarter = Rational::pow2_neg(2);
    let caps = [
        &smallest * &quarter,
        slack.checked_div(&Rational::from(2 * count as i64)).map_err(CoreError::from)?,
        min_product.checked_div(&(&Rational::from(2) * &(&largest_coord + &Rational::one()))).map_err(CoreError::from)?,
        Rational::one(),
    ];
    Ok(caps.into_iter().min().expect("nonempty"))
}

/// `f(p) + ½ Σ |kⱼ| · slack` over the nonzero `vⱼ` (or the mirror for an
/// `x = 0` minimum); a lower bound for `f(p + d)` when `‖d‖_∞` is within
/// [`spurious_probe_radius`].
pub fn spurious_lower_bound(inst: &Instance, p: &Point, d: &Point) -> Result<Rational, AnalysisError> {
    let class = classify_point(inst, p)?;
    inst.check_point(d)?;
    let (own_factor, own, other_factor, other_step) = match class.condition {
        Some(ClassCondition::SpuriousX) => (inst.u(), &p.x, inst.v(), &d.y),
        Some(ClassCondition::SpuriousY) => (inst.v(), &p.y, inst.u(), &d.x),
        _ => return Err(AnalysisError::PreconditionViolated("point is not a spurious minimum".into())),
    };
    let (s, z) = signed_sums(own_factor, own);
    let slack = &z - &s.abs();
    let moved: Rational =
        other_factor.iter().zip(other_step).filter(|(c, _)| !c.is_zero()).map(|(_, k)| k.abs()).sum();
    Ok(&class.f_value + &(&(&moved * &slack) * &Rational::pow2_neg(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::is_critical_lp;
    use crate::instance::eval_f;
    use crate::rational::{ints, q};
    use proptest::prelude::*;

    fn column() -> Instance {
        Instance::from_factors(ints(&[0, 1]), ints(&[1])).unwrap()
    }

    fn fig2() -> (Instance, Point) {
        let inst = Instance::from_factors(ints(&[-2, -1, 2, 1, -2]), ints(&[-1, 1, 1])).unwrap();
        (inst, Point::new(ints(&[2, -1, -1, 1, -1]), vec![q(-1, 1), q(-1, 2), q(-1, 2)]))
    }

    fn kind(inst: &Instance, p: &Point) -> (PointKind, Option<ClassCondition>) {
        let c = classify_point(inst, p).unwrap();
        (c.kind, c.condition)
    }

    #[test]
    fn column_target_landscape() {
        let inst = column();
        assert_eq!(kind(&inst, &Point::zeros(2, 1)), (PointKind::Saddle, Some(ClassCondition::SaddleX)));
        let p = Point::new(ints(&[1, 0]), ints(&[0]));
        assert_eq!(kind(&inst, &p), (PointKind::SpuriousLocalMin, Some(ClassCondition::SpuriousX)));
        let gm = classify_point(&inst, &Point::new(ints(&[0, 3]), vec![q(1, 3)])).unwrap();
        assert_eq!(gm.kind, PointKind::GlobalMin);
        assert_eq!(gm.theta, Some(q(3, 1)));
        assert_eq!(gm.f_value, Rational::zero());
        let off = Point::new(ints(&[1, 1]), ints(&[1]));
        assert_eq!(kind(&inst, &off), (PointKind::NotCritical, None));
    }

    #[test]
    fn five_by_three_point_is_a_balanced_saddle() {
        let (inst, p) = fig2();
        assert_eq!(kind(&inst, &p), (PointKind::Saddle, Some(ClassCondition::SaddleBalanced)));
        let plan = descent_direction(&inst, &p).unwrap();
        assert_eq!(plan.theta, Rational::one());
        for t in [q(1, 8), q(1, 16)] {
            assert!(verify_descent(&inst, &p, &plan, &t).unwrap());
            let ft = eval_f(&inst, &p.add_scaled(&t, &plan.direction)).unwrap();
            assert_eq!(ft, &(Rational::one() - &t * &t) * &Rational::from(24));
        }
    }

    #[test]
    fn origin_descends_to_the_global_minimum() {
        let inst = column();
        let origin = Point::zeros(2, 1);
        let plan = descent_direction(&inst, &origin).unwrap();
        assert_eq!(plan.theta, Rational::one());
        assert_eq!(plan.direction, Point::new(ints(&[0, 1]), ints(&[1])));
        assert_eq!(plan.valid_step_bound, Rational::one());
        assert!(verify_descent(&inst, &origin, &plan, &q(1, 2)).unwrap());
        assert!(verify_descent(&inst, &origin, &plan, &Rational::one()).unwrap());
        assert!(verify_descent(&inst, &origin, &plan, &q(3, 2)).is_err());
        assert!(verify_descent(&inst, &origin, &plan, &Rational::zero()).is_err());
    }

    #[test]
    fn cancelling_signed_sum_saddle() {
        let inst = Instance::from_factors(ints(&[1, 1]), ints(&[1])).unwrap();
        let p = Point::new(ints(&[1, -1]), ints(&[0]));
        assert_eq!(kind(&inst, &p), (PointKind::Saddle, Some(ClassCondition::SaddleX)));
        let plan = descent_direction(&inst, &p).unwrap();
        assert_eq!(plan.theta, Rational::one());
        assert_eq!(plan.direction, Point::new(ints(&[0, 2]), ints(&[1])));
        assert!(verify_descent(&inst, &p, &plan, &q(1, 4)).unwrap());
        let ft = eval_f(&inst, &p.add_scaled(&q(1, 4), &plan.direction)).unwrap();
        assert_eq!(ft, &q(15, 16) * &Rational::from(2));
    }

    #[test]
    fn descent_preconditions() {
        let inst = column();
        let gm = Point::new(ints(&[0, 3]), vec![q(1, 3)]);
        assert!(matches!(descent_direction(&inst, &gm), Err(AnalysisError::PreconditionViolated(_))));
        let origin = Point::zeros(2, 1);
        let plan = descent_direction(&inst, &origin).unwrap();
        assert!(matches!(verify_descent(&inst, &gm, &plan, &q(1, 2)), Err(AnalysisError::PreconditionViolated(_))));
    }

    #[test]
    fn spurious_witnesses() {
        let w = spurious_witness(&column()).unwrap();
        assert_eq!(w, Point::new(ints(&[1, 0]), ints(&[0])));
        let full = Instance::from_factors(ints(&[1, 1]), ints(&[1, 1])).unwrap();
        assert_eq!(spurious_witness(&full), None);
        let zero = Instance::from_factors(ints(&[0, 0]), ints(&[0])).unwrap();
        assert_eq!(spurious_witness(&zero), None);
        let row = Instance::from_factors(ints(&[3]), ints(&[1, 0])).unwrap();
        let w = spurious_witness(&row).unwrap();
        assert_eq!(kind(&row, &w), (PointKind::SpuriousLocalMin, Some(ClassCondition::SpuriousY)));
    }

    #[test]
    fn theorem_predicate_examples() {
        assert!(!theorem1_predicate(&vec![ints(&[0]), ints(&[1])]).unwrap());
        assert!(theorem1_predicate(&vec![ints(&[2, 1]), vec![q(-1, 1), q(-1, 2)]]).unwrap());
        assert!(theorem1_predicate(&vec![ints(&[0, 0]), ints(&[0, 0])]).unwrap());
        assert_eq!(theorem1_predicate(&vec![ints(&[1, 0]), ints(&[0, 1])]), Err(CoreError::RankTooHigh));
    }

    #[test]
    fn probe_radius_on_the_column_target() {
        let inst = column();
        let p = Point::new(ints(&[1, 0]), ints(&[0]));
        assert_eq!(spurious_probe_radius(&inst, &p).unwrap(), q(1, 4));
        let d = Point::new(vec![q(1, 8), q(-1, 8)], vec![q(-1, 4)]);
        let bound = spurious_lower_bound(&inst, &p, &d).unwrap();
        assert_eq!(bound, q(9, 8));
        assert!(eval_f(&inst, &p.add_scaled(&Rational::one(), &d)).unwrap() >= bound);
        assert!(spurious_probe_radius(&inst, &Point::zeros(2, 1)).is_err());
    }

    #[test]
    fn classification_json_shape() {
        let c = classify_point(&column(), &Point::new(ints(&[0, 3]), vec![q(1, 3)])).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "GlobalMin", "condition": "global", "theta": "3", "f_value": "0"}));
    }

    fn pool() -> impl Strategy<Value = Rational> {
        prop::sample::select(vec![q(-2, 1), q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1), q(2, 1)])
    }

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
                    let mask = |c: &[Rational], s: Vec<Rational>| -> Vec<Rational> {
                        c.iter().zip(s).map(|(c, s)| if c.is_zero() { Rational::zero() } else { s }).collect()
                    };
                    let p = match family {
                        0 => Point::new(x, y),
                        1 => Point::new(x, vec![Rational::zero(); v.len()]),
                        2 => Point::new(vec![Rational::zero(); u.len()], y),
                        _ => Point::new(mask(&u, x), mask(&v, y)),
                    };
                    (inst, p)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn classification_is_consistent((inst, p) in case()) {
            let c = classify_point(&inst, &p).unwrap();
            prop_assert_eq!(c.kind != PointKind::NotCritical, is_critical_lp(&inst, &p).unwrap().is_critical);
            prop_assert_eq!(c.kind == PointKind::GlobalMin, c.f_value.is_zero());
        }

        #[test]
        fn saddles_descend((inst, p) in case()) {
            let c = classify_point(&inst, &p).unwrap();
            if c.kind == PointKind::Saddle && inst.has_nonzero_factors() {
                let plan = descent_direction(&inst, &p).unwrap();
                let half = &plan.valid_step_bound * &q(1, 2);
                prop_assert!(verify_descent(&inst, &p, &plan, &plan.valid_step_bound).unwrap());
                prop_assert!(verify_descent(&inst, &p, &plan, &half).unwrap());
            }
        }

        #[test]
        fn kind_survives_rescaling((inst, p) in case(), theta in prop::sample::select(vec![q(-2, 1), q(-1, 2), q(1, 3), q(3, 1)])) {
            let scaled = p.rebalance(&theta).unwrap();
            prop_assert_eq!(classify_point(&inst, &scaled).unwrap().kind, classify_point(&inst, &p).unwrap().kind);
        }
    }
}
