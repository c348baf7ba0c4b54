use serde::{Deserialize, Serialize};

use super::{check_float_point, eval_f_float, step_unchecked, FloatPoint};
use crate::classify::{classify_point, Classification, PointKind};
use crate::error::AnalysisError;
use crate::instance::{Instance, Point};
use crate::rational::Rational;

/// Denominator caps tried when snapping, finest first.
const SNAP_DENOMINATORS: [i64; 2] = [1_000_000, 100];
/// Values beyond this magnitude are not snapped.
const SNAP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// Step `c / k` at iteration `k = 1, 2, …`.
    Diminishing { c: f64 },
    Constant { c: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Diminishing { c: 0.1 }
    }
}

impl StepSchedule {
    fn step(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Diminishing { c } => c / k as f64,
            StepSchedule::Constant { c } => c,
        }
    }

    fn c(&self) -> f64 {
        match *self {
            StepSchedule::Diminishing { c } | StepSchedule::Constant { c } => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentTrace {
    pub iterates: Vec<FloatPoint>,
    pub f_values: Vec<f64>,
    pub step_schedule: StepSchedule,
    /// The terminal iterate as an exact point.
    pub snapped_point: Point,
    pub terminal_classification: Classification,
}

/// Runs `max_iters` subgradient steps from `init`, then snaps the last
/// iterate to rationals and classifies it exactly.
pub fn run_descent(
    inst: &Instance,
    init: &FloatPoint,
    schedule: StepSchedule,
    max_iters: usize,
) -> Result<DescentTrace, AnalysisError> {
    check_float_point(inst, init)?;
    if max_iters == 0 {
        return Err(AnalysisError::PreconditionViolated("max_iters must be positive".into()));
    }
    if !(schedule.c() > 0.0) || !schedule.c().is_finite() {
        return Err(AnalysisError::PreconditionViolated(format!("step constant must be positive, got {}", schedule.c())));
    }
    if !init.is_finite() {
        return Err(AnalysisError::PreconditionViolated("initial point is not finite".into()));
    }
    let mut iterates = Vec::with_capacity(max_iters + 1);
    let mut f_values = Vec::with_capacity(max_iters + 1);
    let mut p = init.clone();
    for k in 1..=max_iters {
        f_values.push(eval_f_float(inst, &p)?);
        let next = step_unchecked(inst, &p, schedule.step(k));
        iterates.push(std::mem::replace(&mut p, next));
    }
    f_values.push(eval_f_float(inst, &p)?);
    iterates.push(p);

    let last = iterates.last().expect("nonempty trace");
    let (snapped_point, terminal_classification) = snap_point(inst, last)?;
    Ok(DescentTrace { iterates, f_values, step_schedule: schedule, snapped_point, terminal_classification })
}

/// Best rational approximation with denominator at most `max_den`, from the
/// continued-fraction convergents of `value`.
pub fn snap_value(value: f64, max_den: i64) -> Option<Rational> {
    if !value.is_finite() || value.abs() > SNAP_LIMIT || max_den < 1 {
        return None;
    }
    let negative = value < 0.0;
    let mut rest = value.abs();
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac < 1e-12 {
            break;
        }
        rest = 1.0 / frac;
    }
    let num = i64::try_from(if negative { -h1 } else { h1 }).ok()?;
    Rational::new(num, i64::try_from(k1).ok()?).ok()
}

fn snap_all(values: &[f64], max_den: i64) -> Option<Vec<Rational>> {
    values.iter().map(|&a| snap_value(a, max_den)).collect()
}

/// Rescales to `(s x, y / s)` so that `x` matches `u` at its largest entry,
/// making global minima land on the exact factorization scale.
fn balanced(inst: &Instance, p: &FloatPoint) -> Option<FloatPoint> {
    let (i, ui) = inst.u().iter().enumerate().max_by(|a, b| a.1.abs().cmp(&b.1.abs()))?;
    let (ui, xi) = (ui.to_f64(), p.x[i]);
    if ui == 0.0 || xi == 0.0 {
        return None;
    }
    let s = ui / xi;
    Some(FloatPoint::new(p.x.iter().map(|a| a * s).collect(), p.y.iter().map(|b| b / s).collect()))
}

/// Snaps a float point to rationals and classifies it.
///
/// Candidates are tried from the finest denominator cap to the coarsest,
/// each directly and after rebalancing; the first critical one wins. When
/// none is critical the direct finest snap is reported.
pub fn snap_point(inst: &Instance, p: &FloatPoint) -> Result<(Point, Classification), AnalysisError> {
    check_float_point(inst, p)?;
    let rebalanced = balanced(inst, p);
    let mut first = None;
    for max_den in SNAP_DENOMINATORS {
        for candidate in std::iter::once(p).chain(rebalanced.as_ref()) {
            let (Some(x), Some(y)) = (snap_all(&candidate.x, max_den), snap_all(&candidate.y, max_den)) else {
                continue;
            };
            let exact = Point::new(x, y);
            let class = classify_point(inst, &exact)?;
            if class.kind != PointKind::NotCritical {
                return Ok((exact, class));
            }
            first.get_or_insert((exact, class));
        }
    }
    first.ok_or_else(|| AnalysisError::PreconditionViolated("terminal iterate cannot be snapped".into()))
}
