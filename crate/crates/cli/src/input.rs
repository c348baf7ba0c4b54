//! Reading instance files and parsing point and range arguments.

use std::fs;

use rankone_core::landscape::FloatPoint;
use rankone_core::{Instance, InstanceFile, Point, Rational};

use crate::error::CliError;

pub fn read_instance_file(path: &str) -> Result<InstanceFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_string(), source })?;
    Ok(InstanceFile::parse(&text)?)
}

/// The instance, plus the point stored alongside it if any.
pub fn load(path: &str) -> Result<(Instance, Option<Point>), CliError> {
    let file = read_instance_file(path)?;
    let inst = file.instance()?;
    let point = match (&file.x, &file.y) {
        (None, None) => None,
        _ => Some(file.point()?),
    };
    Ok((inst, point))
}

fn split_xy(spec: &str) -> Result<(&str, &str), CliError> {
    let mut x = None;
    let mut y = None;
    for part in spec.split(';') {
        match part.trim().split_once('=') {
            Some(("x", vals)) => x = Some(vals),
            Some(("y", vals)) => y = Some(vals),
            _ => return Err(CliError::Usage(format!("expected \"x=...;y=...\", got {spec:?}"))),
        }
    }
    match (x, y) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(CliError::Usage(format!("point {spec:?} needs both x and y"))),
    }
}

fn parse_list<T>(vals: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, CliError> {
    if vals.trim().is_empty() {
        return Err(CliError::Usage("empty coordinate list".into()));
    }
    vals.split(',').map(|v| parse(v.trim()).map_err(CliError::Usage)).collect()
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_float(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("not a finite number: {s:?}")),
    }
}

/// An exact point, inline as `x=1,-1/2;y=2` or as a JSON file with `x` and `y`.
pub fn parse_point(spec: &str) -> Result<Point, CliError> {
    if spec.contains('=') {
        let (x, y) = split_xy(spec)?;
        return Ok(Point::new(parse_list(x, parse_rational)?, parse_list(y, parse_rational)?));
    }
    Ok(read_instance_file(spec)?.point()?)
}

pub fn parse_float_point(spec: &str) -> Result<FloatPoint, CliError> {
    let (x, y) = split_xy(spec)?;
    Ok(FloatPoint::new(parse_list(x, parse_float)?, parse_list(y, parse_float)?))
}

/// The point from `--point`, else the one stored in the instance file.
pub fn resolve_point(flag: Option<&str>, stored: Option<Point>) -> Result<Point, CliError> {
    match (flag, stored) {
        (Some(spec), _) => parse_point(spec),
        (None, Some(p)) => Ok(p),
        (None, None) => Err(CliError::Usage("no point given: pass --point or add x and y to the instance file".into())),
    }
}

/// `lo:hi` ranges separated by commas.
pub fn parse_ranges(spec: &str) -> Result<Vec<(f64, f64)>, CliError> {
    spec.split(',')
        .map(|r| {
            let (lo, hi) = r
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("range must look like lo:hi, got {r:?}")))?;
            Ok((parse_float(lo.trim()).map_err(CliError::Usage)?, parse_float(hi.trim()).map_err(CliError::Usage)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_points() {
        let p = parse_point("x=1,-1/2;y=3").unwrap();
        assert_eq!(p.x, vec![Rational::one(), Rational::new(-1, 2).unwrap()]);
        assert_eq!(p.y, vec![Rational::from(3)]);
        assert!(parse_point("x=0.5;y=1").is_err());
        assert!(parse_point("x=1").is_err());
        assert!(parse_point("x=;y=1").is_err());
        assert!(matches!(parse_point("/nonexistent/point.json"), Err(CliError::File { .. })));
    }

    #[test]
    fn float_points_and_ranges() {
        let p = parse_float_point("x=5, 0.1;y=-0.01").unwrap();
        assert_eq!(p.x, vec![5.0, 0.1]);
        assert!(parse_float_point("x=nan;y=1").is_err());
        assert_eq!(parse_ranges("-2:2, 0:1.5").unwrap(), vec![(-2.0, 2.0), (0.0, 1.5)]);
        assert!(parse_ranges("-2..2").is_err());
    }
}
