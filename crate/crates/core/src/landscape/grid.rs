use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_float_point, eval_f_float, FloatPoint};
use crate::error::AnalysisError;
use crate::instance::Instance;

const MAX_SAMPLES: usize = 50_000_000;

/// A coordinate of `(x, y)`, written `x1`, `y2`, … (one-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X(usize),
    Y(usize),
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::X(i) => write!(f, "x{}", i + 1),
            Coord::Y(j) => write!(f, "y{}", j + 1),
        }
    }
}

impl FromStr for Coord {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalysisError::PreconditionViolated(format!("coordinate must look like x1 or y2, got {s:?}"));
        let (side, index) = s.split_at_checked(1).ok_or_else(bad)?;
        let index: usize = index.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        match side {
            "x" => Ok(Coord::X(index - 1)),
            "y" => Ok(Coord::Y(index - 1)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Coord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub coord: Coord,
    pub lo: f64,
    pub hi: f64,
}

/// Two or three swept coordinates; the rest stay at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    pub base: FloatPoint,
    /// Samples per axis, ends included.
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridFormat {
    #[default]
    Csv,
    Json,
}

/// Samples of `f` on a tensor grid, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub axes: Vec<Coord>,
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl Grid {
    /// Iterates over `(node coordinates, value)` in storage order.
    pub fn samples(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.values.iter().enumerate().map(move |(flat, &value)| (node_coords(&self.nodes, flat), value))
    }

    /// One line per sample: the swept coordinates followed by `f`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.axes {
            let _ = write!(out, "{a},");
        }
        out.push_str("f\n");
        for (coords, value) in self.samples() {
            for c in coords {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{value}");
        }
        out
    }

    pub fn render(&self, format: GridFormat) -> String {
        match format {
            GridFormat::Csv => self.to_csv(),
            GridFormat::Json => serde_json::to_string(self).expect("grid serializes"),
        }
    }
}

fn node_coords(nodes: &[Vec<f64>], flat: usize) -> Vec<f64> {
    let mut rest = flat;
    let mut coords = vec![0.0; nodes.len()];
    for (a, axis) in nodes.iter().enumerate().rev() {
        coords[a] = axis[rest % axis.len()];
        rest /= axis.len();
    }
    coords
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

pub fn grid_sample(inst: &Instance, spec: &GridSpec) -> Result<Grid, AnalysisError> {
    let bad = |msg: String| Err(AnalysisError::PreconditionViolated(msg));
    check_float_point(inst, &spec.base)?;
    if !(2..=3).contains(&spec.axes.len()) {
        return bad(format!("expected 2 or 3 axes, got {}", spec.axes.len()));
    }
    if spec.resolution == 0 {
        return bad("resolution must be positive".into());
    }
    for (k, axis) in spec.axes.iter().enumerate() {
        let in_range = match axis.coord {
            Coord::X(i) => i < inst.m(),
            Coord::Y(j) => j < inst.n(),
        };
        if !in_range {
            return bad(format!("axis {} is out of range", axis.coord));
        }
        if spec.axes[..k].iter().any(|other| other.coord == axis.coord) {
            return bad(format!("axis {} repeated", axis.coord));
        }
        if !(axis.lo.is_finite() && axis.hi.is_finite() && axis.lo < axis.hi) {
            return bad(format!("empty range [{}, {}] on {}", axis.lo, axis.hi, axis.coord));
        }
    }

    let nodes: Vec<Vec<f64>> = spec.axes.iter().map(|a| linspace(a.lo, a.hi, spec.resolution)).collect();
    let total = match spec.resolution.checked_pow(spec.axes.len() as u32) {
        Some(t) if t <= MAX_SAMPLES => t,
        _ => return bad(format!("grid exceeds {MAX_SAMPLES} samples")),
    };
    let mut values = Vec::with_capacity(total);
    let mut p = spec.base.clone();
    for flat in 0..total {
        for (axis, c) in spec.axes.iter().zip(node_coords(&nodes, flat)) {
            match axis.coord {
                Coord::X(i) => p.x[i] = c,
                Coord::Y(j) => p.y[j] = c,
            }
        }
        values.push(eval_f_float(inst, &p)?);
    }
    Ok(Grid { axes: spec.axes.iter().map(|a| a.coord).collect(), nodes, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{eval_f, Point};
    use crate::landscape::snap_value;
    use crate::rational::ints;

    fn column() -> Instance {
        Instance::from_factors(ints(&[0, 1]), ints(&[1])).unwrap()
    }

    fn axis(name: &str, lo: f64, hi: f64) -> Axis {
        Axis { coord: name.parse().unwrap(), lo, hi }
    }

    #[test]
    fn plane_y_zero_is_flat() {
        let spec = GridSpec {
            axes: vec![axis("x1", -2.0, 2.0), axis("x2", -2.0, 2.0)],
            base: FloatPoint::new(vec![0.0, 0.0], vec![0.0]),
            resolution: 9,
        };
        let grid = grid_sample(&column(), &spec).unwrap();
        assert_eq!(grid.values.len(), 81);
        assert!(grid.values.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn hyperbola_is_the_minimum() {
        let one = Instance::from_factors(ints(&[1]), ints(&[1])).unwrap();
        let spec = GridSpec {
            axes: vec![axis("x1", -2.0, 2.0), axis("y1", -2.0, 2.0)],
            base: FloatPoint::new(vec![0.0], vec![0.0]),
            resolution: 5,
        };
        let grid = grid_sample(&one, &spec).unwrap();
        for (coords, f) in grid.samples() {
            assert_eq!(f, (coords[0] * coords[1] - 1.0).abs());
        }
        let min = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.0);
    }

    #[test]
    fn grid_nodes_match_exact_values() {
        let inst = Instance::from_factors(vec![crate::rational::q(1, 2), ints(&[-2])[0].clone()], ints(&[1, 2])).unwrap();
        let spec = GridSpec {
            axes: vec![axis("x2", -1.0, 1.0), axis("y1", -2.0, 2.0), axis("y2", 0.0, 1.0)],
            base: FloatPoint::new(vec![0.5, 0.0], vec![0.0, 0.0]),
            resolution: 5,
        };
        let grid = grid_sample(&inst, &spec).unwrap();
        assert_eq!(grid.values.len(), 125);
        for (coords, f) in grid.samples() {
            let s = |a: f64| snap_value(a, 1000).unwrap();
            let p = Point::new(vec![s(0.5), s(coords[0])], vec![s(coords[1]), s(coords[2])]);
            let exact = eval_f(&inst, &p).unwrap().to_f64();
            assert!((f - exact).abs() <= 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn csv_layout() {
        let spec = GridSpec {
            axes: vec![axis("x1", 0.0, 1.0), axis("y1", 0.0, 1.0)],
            base: FloatPoint::new(vec![0.0, 0.0], vec![0.0]),
            resolution: 2,
        };
        let csv = grid_sample(&column(), &spec).unwrap().to_csv();
        assert_eq!(csv, "x1,y1,f\n0,0,1\n0,1,1\n1,0,1\n1,1,2\n");
    }

    #[test]
    fn invalid_specs() {
        let base = FloatPoint::new(vec![0.0, 0.0], vec![0.0]);
        let mk = |axes, resolution| GridSpec { axes, base: base.clone(), resolution };
        let inst = column();
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 0.0, 1.0), axis("x2", 0.0, 1.0)], 0)).is_err());
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 1.0, 1.0), axis("x2", 0.0, 1.0)], 3)).is_err());
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 2.0, 1.0), axis("x2", 0.0, 1.0)], 3)).is_err());
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 0.0, 1.0)], 3)).is_err());
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 0.0, 1.0), axis("x1", 0.0, 1.0)], 3)).is_err());
        assert!(grid_sample(&inst, &mk(vec![axis("x1", 0.0, 1.0), axis("y2", 0.0, 1.0)], 3)).is_err());
        assert!("z1".parse::<Coord>().is_err());
        assert!("x0".parse::<Coord>().is_err());
        assert!("x".parse::<Coord>().is_err());
    }
}
