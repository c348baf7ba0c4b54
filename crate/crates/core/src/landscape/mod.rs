//! Floating-point tools around the exact core: the smoothed objective, a
//! subgradient simulator, grid sampling for plots, and the fuzzing harness
//! that cross-checks every exact decider.

mod fuzz;
mod grid;
mod simulate;

pub use fuzz::{default_pool, fuzz_equivalence, sample_instance, Disagreement, FuzzConfig, FuzzReport, KindCounts, Verdicts, Violation, ZeroProfile};
pub use grid::{grid_sample, Axis, Coord, Grid, GridFormat, GridSpec};
pub use simulate::{run_descent, snap_point, snap_value, DescentTrace, StepSchedule};

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::instance::{Instance, Point};

/// A point of `ℝᵐ × ℝⁿ` in floating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FloatPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        FloatPoint { x, y }
    }

    pub fn from_exact(p: &Point) -> Self {
        FloatPoint { x: p.x.iter().map(|a| a.to_f64()).collect(), y: p.y.iter().map(|b| b.to_f64()).collect() }
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|a| a.is_finite())
    }
}

fn check_float_point(inst: &Instance, p: &FloatPoint) -> Result<(), AnalysisError> {
    if p.x.len() != inst.m() || p.y.len() != inst.n() {
        return Err(AnalysisError::PreconditionViolated(format!(
            "point has shape {}x{}, instance is {}x{}",
            p.x.len(),
            p.y.len(),
            inst.m(),
            inst.n()
        )));
    }
    Ok(())
}

fn float_residual(inst: &Instance, p: &FloatPoint) -> Vec<Vec<f64>> {
    inst.matrix()
        .iter()
        .zip(&p.x)
        .map(|(row, xi)| row.iter().zip(&p.y).map(|(mij, yj)| xi * yj - mij.to_f64()).collect())
        .collect()
}

/// `f` evaluated in floating point.
pub fn eval_f_float(inst: &Instance, p: &FloatPoint) -> Result<f64, AnalysisError> {
    check_float_point(inst, p)?;
    Ok(float_residual(inst, p).iter().flatten().map(|r| r.abs()).sum())
}

/// `Σᵢⱼ |xᵢyⱼ − Mᵢⱼ|^power`, a smooth surrogate of `f` for `power > 1`.
pub fn eval_fp(inst: &Instance, p: &FloatPoint, power: f64) -> Result<f64, AnalysisError> {
    check_float_point(inst, p)?;
    if !(power > 1.0) || !power.is_finite() {
        return Err(AnalysisError::PreconditionViolated(format!("power must exceed 1, got {power}")));
    }
    Ok(float_residual(inst, p).iter().flatten().map(|r| r.abs().powf(power)).sum())
}

/// One step `p − step·(Λy, Λᵀx)` with `Λ = sgn(x yᵀ − M)` and `sgn(0) = 0`.
pub fn subgradient_step(inst: &Instance, p: &FloatPoint, step: f64) -> Result<FloatPoint, AnalysisError> {
    check_float_point(inst, p)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(AnalysisError::PreconditionViolated(format!("step must be positive, got {step}")));
    }
    Ok(step_unchecked(inst, p, step))
}

fn step_unchecked(inst: &Instance, p: &FloatPoint, step: f64) -> FloatPoint {
    let sgn = |r: f64| if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 };
    let r = float_residual(inst, p);
    let mut gx = vec![0.0; inst.m()];
    let mut gy = vec![0.0; inst.n()];
    for (i, row) in r.iter().enumerate() {
        for (j, rij) in row.iter().enumerate() {
            let s = sgn(*rij);
            gx[i] += s * p.y[j];
            gy[j] += s * p.x[i];
        }
    }
    FloatPoint {
        x: p.x.iter().zip(&gx).map(|(a, g)| a - step * g).collect(),
        y: p.y.iter().zip(&gy).map(|(b, g)| b - step * g).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::eval_f;
    use crate::rational::{ints, q};

    fn eq13() -> Instance {
        Instance::from_factors(ints(&[2, -1]), vec![q(1, 1), q(1, 2)]).unwrap()
    }

    #[test]
    fn smoothed_objective() {
        let inst = eq13();
        let p = FloatPoint::new(vec![1.0, -1.0], vec![1.0, 1.0]);
        assert_eq!(eval_fp(&inst, &p, 2.0).unwrap(), 1.25);
        assert!((eval_fp(&inst, &p, 1.001).unwrap() - 1.5).abs() < 1e-2);
        let gm = FloatPoint::new(vec![2.0, -1.0], vec![1.0, 0.5]);
        assert_eq!(eval_fp(&inst, &gm, 3.0).unwrap(), 0.0);
        assert!(eval_fp(&inst, &p, 1.0).is_err());
        assert!(eval_fp(&inst, &p, f64::NAN).is_err());
    }

    #[test]
    fn smoothed_objective_tends_to_f() {
        let inst = Instance::from_factors(ints(&[-2, 1]), vec![q(1, 2), q(2, 1), q(-1, 1)]).unwrap();
        let exact = Point::new(vec![q(1, 2), q(-2, 1)], ints(&[1, 0, -1]));
        let f = eval_f(&inst, &exact).unwrap().to_f64();
        let p = FloatPoint::from_exact(&exact);
        let gaps: Vec<f64> = [2.0, 1.5, 1.1, 1.01].iter().map(|&s| (eval_fp(&inst, &p, s).unwrap() - f).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
        assert!(gaps[3] < 0.02 * f, "{gaps:?} {f}");
    }

    #[test]
    fn subgradient_steps() {
        let one = Instance::from_factors(ints(&[1]), ints(&[1])).unwrap();
        let next = subgradient_step(&one, &FloatPoint::new(vec![2.0], vec![1.0]), 0.5).unwrap();
        assert_eq!(next, FloatPoint::new(vec![1.5], vec![0.0]));
        let gm = FloatPoint::new(vec![2.0, -1.0], vec![1.0, 0.5]);
        assert_eq!(subgradient_step(&eq13(), &gm, 0.3).unwrap(), gm);
        assert!(subgradient_step(&one, &FloatPoint::new(vec![2.0], vec![1.0]), 0.0).is_err());

        let fig2 = Instance::from_factors(ints(&[-2, -1, 2, 1, -2]), ints(&[-1, 1, 1])).unwrap();
        let p = FloatPoint::new(vec![2.0, -1.0, -1.0, 1.0, -1.0], vec![-1.0, -0.5, -0.5]);
        let next = subgradient_step(&fig2, &p, 1.0).unwrap();
        assert_ne!(next, p);
    }

    #[test]
    fn float_and_exact_objectives_agree() {
        let inst = eq13();
        let p = Point::new(vec![q(1, 2), q(-3, 2)], ints(&[2, -1]));
        let exact = eval_f(&inst, &p).unwrap().to_f64();
        assert!((eval_f_float(&inst, &FloatPoint::from_exact(&p)).unwrap() - exact).abs() < 1e-12);
    }
}
