//! Problem instances `M = u vᵀ`, candidate points `(x, y)` and the objective
//! `f(x, y) = Σᵢⱼ |xᵢyⱼ − Mᵢⱼ|`.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rational::Rational;

/// Dense row-major matrix of rationals.
pub type Matrix = Vec<Vec<Rational>>;

/// A rank-at-most-one target matrix together with a factorization `M = u vᵀ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    m: usize,
    n: usize,
    matrix: Matrix,
    u: Vec<Rational>,
    v: Vec<Rational>,
}

/// A candidate point `(x, y) ∈ ℚᵐ × ℚⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
}

impl Point {
    pub fn new(x: Vec<Rational>, y: Vec<Rational>) -> Self {
        Point { x, y }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Point { x: vec![Rational::zero(); m], y: vec![Rational::zero(); n] }
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.y).all(Rational::is_zero)
    }

    /// `self + t·d`.
    pub fn add_scaled(&self, t: &Rational, d: &Point) -> Point {
        let step = |a: &[Rational], b: &[Rational]| a.iter().zip(b).map(|(a, b)| a + &(t * b)).collect();
        Point { x: step(&self.x, &d.x), y: step(&self.y, &d.y) }
    }

    pub fn scale(&self, c: &Rational) -> Point {
        Point {
            x: self.x.iter().map(|a| a * c).collect(),
            y: self.y.iter().map(|a| a * c).collect(),
        }
    }

    /// `(θx, y/θ)`, the rescaling that leaves `x yᵀ` unchanged.
    pub fn rebalance(&self, theta: &Rational) -> Result<Point, CoreError> {
        let inv = theta.recip()?;
        Ok(Point {
            x: self.x.iter().map(|a| a * theta).collect(),
            y: self.y.iter().map(|b| b * &inv).collect(),
        })
    }
}

impl Instance {
    /// Builds an instance from explicit factors.
    pub fn from_factors(u: Vec<Rational>, v: Vec<Rational>) -> Result<Self, CoreError> {
        if u.is_empty() || v.is_empty() {
            return Err(CoreError::EmptyMatrix);
        }
        let matrix = outer(&u, &v);
        Ok(Instance { m: u.len(), n: v.len(), matrix, u, v })
    }

    /// Builds an instance from a matrix and factors that must reproduce it exactly.
    pub fn from_parts(matrix: Matrix, u: Vec<Rational>, v: Vec<Rational>) -> Result<Self, CoreError> {
        check_shape(&matrix)?;
        let inst = Self::from_factors(u, v)?;
        if inst.m != matrix.len() || inst.n != matrix[0].len() {
            return Err(CoreError::DimensionMismatch {
                expected: format!("{}x{}", inst.m, inst.n),
                found: format!("{}x{}", matrix.len(), matrix[0].len()),
            });
        }
        if inst.matrix != matrix {
            return Err(CoreError::FactorizationMismatch);
        }
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn u(&self) -> &[Rational] {
        &self.u
    }

    pub fn v(&self) -> &[Rational] {
        &self.v
    }

    /// True when `M = 0`.
    pub fn is_zero_matrix(&self) -> bool {
        self.u.iter().all(Rational::is_zero) || self.v.iter().all(Rational::is_zero)
    }

    /// True when `u ≠ 0` and `v ≠ 0`, i.e. `M ≠ 0`.
    pub fn has_nonzero_factors(&self) -> bool {
        !self.is_zero_matrix()
    }

    pub fn check_point(&self, p: &Point) -> Result<(), CoreError> {
        if p.x.len() != self.m || p.y.len() != self.n {
            return Err(CoreError::DimensionMismatch {
                expected: format!("x in Q^{}, y in Q^{}", self.m, self.n),
                found: format!("x in Q^{}, y in Q^{}", p.x.len(), p.y.len()),
            });
        }
        Ok(())
    }
}

fn outer(u: &[Rational], v: &[Rational]) -> Matrix {
    u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect()
}

fn check_shape(matrix: &Matrix) -> Result<(), CoreError> {
    if matrix.is_empty() || matrix[0].is_empty() {
        return Err(CoreError::EmptyMatrix);
    }
    if matrix.iter().any(|row| row.len() != matrix[0].len()) {
        return Err(CoreError::RaggedMatrix);
    }
    Ok(())
}

/// Canonical rank-one factorization of `matrix`.
///
/// `u` is the first nonzero column and `v` the first nonzero row of that
/// column rescaled so that its pivot entry is one. The zero matrix factors as
/// `u = 0, v = 0`.
pub fn factor_rank_one(matrix: &Matrix) -> Result<Instance, CoreError> {
    check_shape(matrix)?;
    let (m, n) = (matrix.len(), matrix[0].len());
    let pivot_col = (0..n).find(|&j| matrix.iter().any(|row| !row[j].is_zero()));
    let Some(jc) = pivot_col else {
        return Instance::from_factors(vec![Rational::zero(); m], vec![Rational::zero(); n]);
    };
    let ir = (0..m).find(|&i| !matrix[i][jc].is_zero()).expect("column is nonzero");
    let u: Vec<Rational> = matrix.iter().map(|row| row[jc].clone()).collect();
    let pivot = &matrix[ir][jc];
    let v = matrix[ir].iter().map(|a| a.checked_div(pivot)).collect::<Result<Vec<_>, _>>()?;
    let inst = Instance::from_factors(u, v)?;
    if &inst.matrix != matrix {
        return Err(CoreError::RankTooHigh);
    }
    Ok(inst)
}

/// `x yᵀ − M`, entrywise.
pub fn residual(inst: &Instance, p: &Point) -> Result<Matrix, CoreError> {
    inst.check_point(p)?;
    Ok(residual_unchecked(inst, p))
}

pub(crate) fn residual_unchecked(inst: &Instance, p: &Point) -> Matrix {
    p.x.iter()
        .zip(&inst.matrix)
        .map(|(xi, row)| p.y.iter().zip(row).map(|(yj, mij)| &(xi * yj) - mij).collect())
        .collect()
}

/// `f(x, y) = Σᵢⱼ |xᵢyⱼ − Mᵢⱼ|`, exactly.
pub fn eval_f(inst: &Instance, p: &Point) -> Result<Rational, CoreError> {
    inst.check_point(p)?;
    Ok(eval_f_unchecked(inst, p))
}

pub(crate) fn eval_f_unchecked(inst: &Instance, p: &Point) -> Rational {
    residual_unchecked(inst, p).iter().flatten().map(Rational::abs).sum()
}

/// `Σ |aᵢ|`.
pub fn l1_norm(a: &[Rational]) -> Rational {
    a.iter().map(Rational::abs).sum()
}

/// On-disk representation of instances and points.
///
/// Rationals are JSON integers or strings `"p/q"`; decimal numbers are
/// rejected. An instance needs `M` or both `u` and `v`; when all three are
/// present they must agree exactly.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<Rational>>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CoreError> {
        serde_json::from_str(text).map_err(|e| CoreError::Format(e.to_string()))
    }

    pub fn from_instance(inst: &Instance, point: Option<&Point>) -> Self {
        InstanceFile {
            m: Some(inst.m),
            n: Some(inst.n),
            matrix: Some(inst.matrix.clone()),
            u: Some(inst.u.clone()),
            v: Some(inst.v.clone()),
            x: point.map(|p| p.x.clone()),
            y: point.map(|p| p.y.clone()),
        }
    }

    pub fn instance(&self) -> Result<Instance, CoreError> {
        let inst = match (&self.matrix, &self.u, &self.v) {
            (Some(mat), Some(u), Some(v)) => Instance::from_parts(mat.clone(), u.clone(), v.clone())?,
            (Some(mat), None, None) => factor_rank_one(mat)?,
            (None, Some(u), Some(v)) => Instance::from_factors(u.clone(), v.clone())?,
            _ => return Err(CoreError::Format("instance needs \"M\" or both \"u\" and \"v\"".into())),
        };
        self.check_dims(inst.m, inst.n)?;
        Ok(inst)
    }

    pub fn point(&self) -> Result<Point, CoreError> {
        match (&self.x, &self.y) {
            (Some(x), Some(y)) => {
                self.check_dims(x.len(), y.len())?;
                Ok(Point::new(x.clone(), y.clone()))
            }
            _ => Err(CoreError::Format("point needs both \"x\" and \"y\"".into())),
        }
    }

    fn check_dims(&self, m: usize, n: usize) -> Result<(), CoreError> {
        let declared = (self.m.unwrap_or(m), self.n.unwrap_or(n));
        if declared != (m, n) {
            return Err(CoreError::DimensionMismatch {
                expected: format!("{}x{}", declared.0, declared.1),
                found: format!("{m}x{n}"),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ints, q};
    use proptest::prelude::*;

    fn eq13() -> (Instance, Point) {
        let inst = factor_rank_one(&vec![ints(&[2, 1]), vec![q(-1, 1), q(-1, 2)]]).unwrap();
        (inst, Point::new(ints(&[1, -1]), ints(&[1, 1])))
    }

    fn fig2() -> (Instance, Point) {
        let inst = Instance::from_factors(ints(&[-2, -1, 2, 1, -2]), ints(&[-1, 1, 1])).unwrap();
        let p = Point::new(ints(&[2, -1, -1, 1, -1]), vec![q(-1, 1), q(-1, 2), q(-1, 2)]);
        (inst, p)
    }

    #[test]
    fn factor_column_vector() {
        let inst = factor_rank_one(&vec![ints(&[0]), ints(&[1])]).unwrap();
        assert_eq!(inst.u(), &ints(&[0, 1])[..]);
        assert_eq!(inst.v(), &ints(&[1])[..]);
    }

    #[test]
    fn factor_zero_matrix() {
        let inst = factor_rank_one(&vec![ints(&[0, 0]), ints(&[0, 0])]).unwrap();
        assert_eq!(inst.u(), &ints(&[0, 0])[..]);
        assert_eq!(inst.v(), &ints(&[0, 0])[..]);
        assert!(inst.is_zero_matrix());
    }

    #[test]
    fn factor_with_fractions() {
        let (inst, _) = eq13();
        assert_eq!(inst.u(), &ints(&[2, -1])[..]);
        assert_eq!(inst.v(), &[Rational::one(), q(1, 2)][..]);
    }

    #[test]
    fn identity_is_rank_two() {
        assert_eq!(factor_rank_one(&vec![ints(&[1, 0]), ints(&[0, 1])]), Err(CoreError::RankTooHigh));
    }

    #[test]
    fn empty_and_ragged_rejected() {
        assert_eq!(factor_rank_one(&vec![]), Err(CoreError::EmptyMatrix));
        assert_eq!(factor_rank_one(&vec![ints(&[1, 2]), ints(&[1])]), Err(CoreError::RaggedMatrix));
    }

    #[test]
    fn objective_fixtures() {
        let (inst, p) = eq13();
        assert_eq!(eval_f(&inst, &p).unwrap(), q(3, 2));
        assert_eq!(residual(&inst, &p).unwrap(), vec![vec![q(-1, 1), q(0, 1)], vec![q(0, 1), q(-1, 2)]]);

        let inst = Instance::from_factors(ints(&[0, 1]), ints(&[1])).unwrap();
        let p = Point::new(ints(&[0, 3]), vec![q(1, 3)]);
        assert_eq!(eval_f(&inst, &p).unwrap(), Rational::zero());

        let (inst, p) = fig2();
        assert_eq!(eval_f(&inst, &p).unwrap(), Rational::from(24));
        let r = residual(&inst, &p).unwrap();
        assert_eq!(r[0], ints(&[-4, 1, 1]));
        assert_eq!(r[1], vec![q(0, 1), q(3, 2), q(3, 2)]);
    }

    #[test]
    fn dimension_mismatch() {
        let (inst, _) = eq13();
        let p = Point::new(ints(&[1]), ints(&[1, 1]));
        assert!(matches!(eval_f(&inst, &p), Err(CoreError::DimensionMismatch { .. })));
        assert!(residual(&inst, &p).is_err());
    }

    #[test]
    fn file_format() {
        let f = InstanceFile::parse(r#"{"m":2,"n":2,"M":[[2,1],[-1,"-1/2"]],"x":[1,-1],"y":[1,1]}"#).unwrap();
        let (inst, p) = eq13();
        assert_eq!(f.instance().unwrap(), inst);
        assert_eq!(f.point().unwrap(), p);

        let f = InstanceFile::parse(r#"{"u":[2,-1],"v":[1,"1/2"],"M":[[2,1],[-1,"-1/2"]]}"#).unwrap();
        assert_eq!(f.instance().unwrap(), inst);

        let bad = InstanceFile::parse(r#"{"u":[2,-1],"v":[1,"1/2"],"M":[[2,1],[-1,"1/2"]]}"#).unwrap();
        assert_eq!(bad.instance(), Err(CoreError::FactorizationMismatch));
        assert!(InstanceFile::parse(r#"{"M":[[0.5]]}"#).is_err());
        assert!(InstanceFile::parse(r#"{"M":[["0.5"]]}"#).is_err());
        let wrong_dims = InstanceFile::parse(r#"{"m":3,"M":[[1]]}"#).unwrap();
        assert!(wrong_dims.instance().is_err());
        assert!(InstanceFile::parse(r#"{"u":[1]}"#).unwrap().instance().is_err());
    }

    fn pool() -> impl Strategy<Value = Rational> {
        prop::sample::select(vec![q(-2, 1), q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1), q(2, 1), q(3, 2)])
    }

    fn case() -> impl Strategy<Value = (Instance, Point)> {
        (1usize..5, 1usize..5).prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(pool(), m),
                prop::collection::vec(pool(), n),
                prop::collection::vec(pool(), m),
                prop::collection::vec(pool(), n),
            )
                .prop_map(|(u, v, x, y)| (Instance::from_factors(u, v).unwrap(), Point::new(x, y)))
        })
    }

    proptest! {
        #[test]
        fn objective_is_l1_of_residual((inst, p) in case()) {
            let r = residual(&inst, &p).unwrap();
            let f = eval_f(&inst, &p).unwrap();
            let l1: Rational = r.iter().flatten().map(Rational::abs).sum();
            prop_assert_eq!(&f, &l1);
            prop_assert!(!f.is_negative());
            prop_assert_eq!(f.is_zero(), r.iter().flatten().all(Rational::is_zero));
        }

        #[test]
        fn scaling_invariance((inst, p) in case(), theta in pool()) {
            prop_assume!(!theta.is_zero());
            let scaled = p.rebalance(&theta).unwrap();
            prop_assert_eq!(eval_f(&inst, &scaled).unwrap(), eval_f(&inst, &p).unwrap());
        }

        #[test]
        fn refactoring_is_stable((inst, _) in case()) {
            let again = factor_rank_one(inst.matrix()).unwrap();
            prop_assert_eq!(again.matrix(), inst.matrix());
            let twice = factor_rank_one(again.matrix()).unwrap();
            prop_assert_eq!(twice, again);
        }
    }
}
