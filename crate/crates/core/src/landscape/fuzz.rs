use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_point, descent_direction, spurious_lower_bound, spurious_probe_radius, theorem1_predicate, verify_descent,
    PointKind,
};
use crate::criticality::{
    closed_form_verdict, is_critical_directional, is_critical_lp, lambda_certifies, signed_sums, witness_lambda,
    CriticalCondition, CriticalityVerdict, Evidence, RatioTest,
};
use crate::error::AnalysisError;
use crate::instance::{eval_f_unchecked, Instance, Point};
use crate::rational::{q, Rational};
use crate::subdiff::{directional_derivative_unchecked, step_alpha, step_beta, step_eval, zero_in_partials};

/// Which zero pattern random targets follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroProfile {
    /// No entry of `M` vanishes.
    NoZeros,
    /// Some but not all entries of `M` vanish.
    MixedZeros,
    /// `M = 0`, with at least one of `u`, `v` zero.
    AllZeros,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub num_instances: usize,
    pub m_max: usize,
    pub n_max: usize,
    pub value_pool: Vec<Rational>,
    pub points_per_instance: usize,
    pub seed: u64,
    /// Unconstrained factors when absent.
    pub profile: Option<ZeroProfile>,
    /// Random perturbations tried around each spurious minimum.
    pub probe_samples: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            num_instances: 500,
            m_max: 4,
            n_max: 4,
            value_pool: default_pool(),
            points_per_instance: 20,
            seed: 42,
            profile: None,
            probe_samples: 8,
        }
    }
}

/// `{−2, −1, −1/2, 0, 1/2, 1, 2}`.
pub fn default_pool() -> Vec<Rational> {
    vec![q(-2, 1), q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1), q(2, 1)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub lambda_lp: bool,
    pub directional_lp: bool,
    pub closed_form: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub instance_index: usize,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
    pub point: Point,
    pub verdicts: Verdicts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub instance_index: usize,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
    pub point: Point,
    pub property: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub not_critical: usize,
    pub global_min: usize,
    pub spurious_local_min: usize,
    pub saddle: usize,
}

impl KindCounts {
    fn add(&mut self, kind: PointKind) {
        match kind {
            PointKind::NotCritical => self.not_critical += 1,
            PointKind::GlobalMin => self.global_min += 1,
            PointKind::SpuriousLocalMin => self.spurious_local_min += 1,
            PointKind::Saddle => self.saddle += 1,
        }
    }

    fn merge(&mut self, other: &KindCounts) {
        self.not_critical += other.not_critical;
        self.global_min += other.global_min;
        self.spurious_local_min += other.spurious_local_min;
        self.saddle += other.saddle;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub instances_tested: usize,
    pub points_tested: usize,
    pub disagreements: Vec<Disagreement>,
    pub classification_violations: Vec<Violation>,
    pub kinds: KindCounts,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty() && self.classification_violations.is_empty()
    }
}

/// Cross-checks the three criticality deciders, the classifier, descent
/// plans and the spurious-minimum probe on random instances and points.
///
/// Instance `k` draws from its own ChaCha stream of `seed`, so reports are
/// identical regardless of thread count.
pub fn fuzz_equivalence(config: &FuzzConfig) -> Result<FuzzReport, AnalysisError> {
    fuzz_with(config, RatioTest::AtMostOne)
}

pub(crate) fn fuzz_with(config: &FuzzConfig, ratio: RatioTest) -> Result<FuzzReport, AnalysisError> {
    if config.num_instances > 0 && (config.m_max == 0 || config.n_max == 0) {
        return Err(AnalysisError::PreconditionViolated("dimension bounds must be positive".into()));
    }
    if config.value_pool.is_empty() {
        return Err(AnalysisError::PreconditionViolated("value pool is empty".into()));
    }
    if config.profile.is_some() && !config.value_pool.iter().any(|a| !a.is_zero()) {
        return Err(AnalysisError::PreconditionViolated("zero profiles need a nonzero pool value".into()));
    }
    let parts: Vec<FuzzReport> =
        (0..config.num_instances).into_par_iter().map(|k| fuzz_instance(config, ratio, k)).collect();
    let mut report = FuzzReport::default();
    for part in parts {
        report.instances_tested += part.instances_tested;
        report.points_tested += part.points_tested;
        report.disagreements.extend(part.disagreements);
        report.classification_violations.extend(part.classification_violations);
        report.kinds.merge(&part.kinds);
    }
    Ok(report)
}

fn draw(rng: &mut ChaCha8Rng, pool: &[Rational]) -> Rational {
    pool.choose(rng).expect("nonempty pool").clone()
}

fn draw_vec(rng: &mut ChaCha8Rng, pool: &[Rational], len: usize) -> Vec<Rational> {
    (0..len).map(|_| draw(rng, pool)).collect()
}

/// The target that [`fuzz_equivalence`] tests as instance `index`.
pub fn sample_instance(config: &FuzzConfig, index: usize) -> Instance {
    random_instance(&mut instance_rng(config.seed, index), config)
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn random_instance(rng: &mut ChaCha8Rng, config: &FuzzConfig) -> Instance {
    let pool = &config.value_pool;
    let nonzero: Vec<Rational> = pool.iter().filter(|a| !a.is_zero()).cloned().collect();
    let mut m = rng.gen_range(1..=config.m_max);
    let mut n = rng.gen_range(1..=config.n_max);
    let (u, v) = match config.profile {
        None => (draw_vec(rng, pool, m), draw_vec(rng, pool, n)),
        Some(ZeroProfile::NoZeros) => (draw_vec(rng, &nonzero, m), draw_vec(rng, &nonzero, n)),
        Some(ZeroProfile::MixedZeros) => {
            if m == 1 && n == 1 {
                if config.m_max >= 2 {
                    m = 2;
                } else {
                    n = 2;
                }
            }
            let mut u = draw_vec(rng, &nonzero, m);
            let mut v = draw_vec(rng, &nonzero, n);
            let side = if m < 2 { &mut v } else if n < 2 { &mut u } else if rng.gen() { &mut u } else { &mut v };
            let len = side.len();
            let zeros = rng.gen_range(1..len);
            let mut idx: Vec<usize> = (0..len).collect();
            idx.shuffle(rng);
            for &i in &idx[..zeros] {
                side[i] = Rational::zero();
            }
            (u, v)
        }
        Some(ZeroProfile::AllZeros) => match rng.gen_range(0..3) {
            0 => (vec![Rational::zero(); m], draw_vec(rng, pool, n)),
            1 => (draw_vec(rng, pool, m), vec![Rational::zero(); n]),
            _ => (vec![Rational::zero(); m], vec![Rational::zero(); n]),
        },
    };
    Instance::from_factors(u, v).expect("factors have matching shapes")
}

/// Points drawn from the pool, or built to land on (or next to) the families
/// where criticality is decided: global minima, `y = 0`, `x = 0`, and points
/// with balanced signed sums.
fn random_point(rng: &mut ChaCha8Rng, inst: &Instance, pool: &[Rational]) -> Point {
    let (m, n) = (inst.m(), inst.n());
    let nonzero: Vec<Rational> = pool.iter().filter(|a| !a.is_zero()).cloned().collect();
    let global = |rng: &mut ChaCha8Rng| {
        let theta = nonzero.choose(rng).cloned().unwrap_or_else(Rational::one);
        let inv = theta.recip().expect("nonzero");
        Point::new(inst.u().iter().map(|a| a * &theta).collect(), inst.v().iter().map(|b| b * &inv).collect())
    };
    match rng.gen_range(0..6) {
        0 => Point::new(draw_vec(rng, pool, m), draw_vec(rng, pool, n)),
        1 => global(rng),
        2 => Point::new(draw_vec(rng, pool, m), vec![Rational::zero(); n]),
        3 => Point::new(vec![Rational::zero(); m], draw_vec(rng, pool, n)),
        4 => {
            let x = balanced_coords(rng, inst.u(), pool);
            let y = balanced_coords(rng, inst.v(), pool);
            Point::new(x, y)
        }
        _ => {
            let mut p = global(rng);
            let k = rng.gen_range(0..m + n);
            let value = draw(rng, pool);
            if k < m {
                p.x[k] = value;
            } else {
                p.y[k - m] = value;
            }
            p
        }
    }
}

/// Coordinates vanishing where `factor` does, with zero signed sum when possible.
fn balanced_coords(rng: &mut ChaCha8Rng, factor: &[Rational], pool: &[Rational]) -> Vec<Rational> {
    let mut s: Vec<Rational> =
        factor.iter().map(|c| if c.is_zero() { Rational::zero() } else { draw(rng, pool) }).collect();
    let support: Vec<usize> = (0..factor.len()).filter(|&i| !factor[i].is_zero()).collect();
    if let Some(&i) = support.choose(rng) {
        let (sum, _) = signed_sums(factor, &s);
        s[i] = &s[i] - &sum.scale_sign(factor[i].signum());
    }
    s
}

struct PointCheck<'a> {
    inst: &'a Instance,
    p: &'a Point,
    index: usize,
    violations: Vec<Violation>,
}

impl PointCheck<'_> {
    fn fail(&mut self, property: impl Into<String>) {
        self.violations.push(Violation {
            instance_index: self.index,
            u: self.inst.u().to_vec(),
            v: self.inst.v().to_vec(),
            point: self.p.clone(),
            property: property.into(),
        });
    }

    fn expect(&mut self, ok: bool, property: &str) {
        if !ok {
            self.fail(property);
        }
    }

    fn attempt<T>(&mut self, what: &str, r: Result<T, AnalysisError>) -> Option<T> {
        r.map_err(|e| self.fail(format!("{what}: {e}"))).ok()
    }
}

fn fuzz_instance(config: &FuzzConfig, ratio: RatioTest, index: usize) -> FuzzReport {
    let mut rng = instance_rng(config.seed, index);
    let inst = random_instance(&mut rng, config);
    let no_spurious = theorem1_predicate(inst.matrix()).expect("factored targets have rank at most one");
    let mut report = FuzzReport { instances_tested: 1, ..FuzzReport::default() };
    for _ in 0..config.points_per_instance {
        let p = random_point(&mut rng, &inst, &config.value_pool);
        report.points_tested += 1;
        let mut check = PointCheck { inst: &inst, p: &p, index, violations: Vec::new() };
        check_point(&mut check, &mut rng, config, ratio, no_spurious, &mut report);
        report.classification_violations.append(&mut check.violations);
    }
    report
}

fn check_point(
    c: &mut PointCheck<'_>,
    rng: &mut ChaCha8Rng,
    config: &FuzzConfig,
    ratio: RatioTest,
    no_spurious: bool,
    report: &mut FuzzReport,
) {
    let (inst, p) = (c.inst, c.p);
    let (Some(lp), Some(dir)) =
        (c.attempt("lambda program", is_critical_lp(inst, p)), c.attempt("directional program", is_critical_directional(inst, p)))
    else {
        return;
    };
    let closed = closed_form_verdict(inst, p, ratio);
    let verdicts = Verdicts { lambda_lp: lp.is_critical, directional_lp: dir.is_critical, closed_form: closed.is_critical };
    if !(lp.is_critical == dir.is_critical && dir.is_critical == closed.is_critical) {
        report.disagreements.push(Disagreement {
            instance_index: c.index,
            u: inst.u().to_vec(),
            v: inst.v().to_vec(),
            point: p.clone(),
            verdicts,
        });
    }
    check_evidence(c, &lp, &dir, &closed);

    let critical = lp.is_critical;
    let f = eval_f_unchecked(inst, p);
    if critical {
        c.expect(zero_in_partials(inst, p).unwrap_or(false), "critical point with 0 missing from a partial");
        if f.is_positive() {
            let zero = Rational::zero();
            let roots_at_zero = step_alpha(inst, p).is_ok_and(|a| step_eval(&a, &zero).contains_zero())
                && step_beta(inst, p).is_ok_and(|b| step_eval(&b, &zero).contains_zero());
            c.expect(roots_at_zero, "critical point with f > 0 lacks a root at zero");
        }
    }

    let Some(class) = c.attempt("classification", classify_point(inst, p)) else { return };
    report.kinds.add(class.kind);
    c.expect((class.kind != PointKind::NotCritical) == critical, "classification disagrees with criticality");
    c.expect((class.kind == PointKind::GlobalMin) == f.is_zero(), "global minimum iff f = 0");
    if no_spurious {
        c.expect(class.kind != PointKind::SpuriousLocalMin, "spurious minimum on a target without mixed zeros");
    }
    match class.kind {
        PointKind::Saddle if inst.has_nonzero_factors() => {
            if let Some(plan) = c.attempt("descent direction", descent_direction(inst, p)) {
                let half = &plan.valid_step_bound * &Rational::pow2_neg(1);
                for t in [&plan.valid_step_bound, &half] {
                    let ok = verify_descent(inst, p, &plan, t).unwrap_or(false);
                    c.expect(ok, &format!("descent identity fails at t = {t}"));
                }
            }
        }
        PointKind::SpuriousLocalMin => probe_spurious(c, rng, config.probe_samples, &f),
        _ => {}
    }
}

fn check_evidence(c: &mut PointCheck<'_>, lp: &CriticalityVerdict, dir: &CriticalityVerdict, closed: &CriticalityVerdict) {
    let (inst, p) = (c.inst, c.p);
    if let Some(Evidence::LambdaWitness(l)) = &lp.evidence {
        c.expect(lambda_certifies(inst, p, l), "lambda witness invalid");
    }
    if let Some(Evidence::DescentCertificate(d)) = &dir.evidence {
        c.expect(directional_derivative_unchecked(inst, p, d).is_negative(), "descent certificate does not decrease f");
    }
    if closed.evidence == Some(Evidence::MatchedCondition(CriticalCondition::BalancedRatios)) {
        c.attempt("closed-form witness", witness_lambda(inst, p));
    }
}

/// Random perturbations inside the probe radius must not decrease `f`, and
/// must respect the linear lower bound.
fn probe_spurious(c: &mut PointCheck<'_>, rng: &mut ChaCha8Rng, samples: usize, f: &Rational) {
    let (inst, p) = (c.inst, c.p);
    let Some(rho) = c.attempt("probe radius", spurious_probe_radius(inst, p)) else { return };
    const STEPS: i64 = 16;
    let offset = |rng: &mut ChaCha8Rng| &rho * &q(rng.gen_range(-STEPS..=STEPS), STEPS);
    for _ in 0..samples {
        let d = Point::new((0..inst.m()).map(|_| offset(rng)).collect(), (0..inst.n()).map(|_| offset(rng)).collect());
        let moved = eval_f_unchecked(inst, &p.add_scaled(&Rational::one(), &d));
        let Some(bound) = c.attempt("probe bound", spurious_lower_bound(inst, p, &d)) else { return };
        c.expect(&moved >= f, "perturbation decreases f at a spurious minimum");
        c.expect(moved >= bound, "perturbation beats the spurious lower bound");
    }
}
