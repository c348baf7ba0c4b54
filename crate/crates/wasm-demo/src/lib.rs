//! Browser bindings: a landscape heatmap, step functions and exact
//! classification, all exchanged as JSON strings.

use rankone_core::classify::{classify_point, descent_direction, PointKind};
use rankone_core::criticality::is_critical_lp;
use rankone_core::landscape::{grid_sample, Axis, Coord, FloatPoint, GridSpec};
use rankone_core::subdiff::{roots, step_alpha, step_beta, StepFunction};
use rankone_core::{Instance, InstanceFile, Point};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn instance(text: &str) -> Result<(Instance, Option<Point>), String> {
    let file = InstanceFile::parse(text).map_err(|e| e.to_string())?;
    let inst = file.instance().map_err(|e| e.to_string())?;
    let point = file.point().ok();
    Ok((inst, point))
}

fn point_or_stored(inst_text: &str, point_text: &str) -> Result<(Instance, Point), String> {
    let (inst, stored) = instance(inst_text)?;
    let p = if point_text.trim().is_empty() {
        stored.ok_or("no point given")?
    } else {
        InstanceFile::parse(point_text).and_then(|f| f.point()).map_err(|e| e.to_string())?
    };
    inst.check_point(&p).map_err(|e| e.to_string())?;
    Ok((inst, p))
}

#[derive(Deserialize)]
struct HeatmapRequest {
    x_axis: String,
    y_axis: String,
    lo: f64,
    hi: f64,
    resolution: usize,
    #[serde(default)]
    base: Option<FloatPoint>,
}

pub fn heatmap_json(inst_text: &str, request: &str) -> Result<String, String> {
    let (inst, _) = instance(inst_text)?;
    let req: HeatmapRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let coord = |s: &str| s.parse::<Coord>().map_err(|e| e.to_string());
    let axis = |s: &str| -> Result<Axis, String> { Ok(Axis { coord: coord(s)?, lo: req.lo, hi: req.hi }) };
    let spec = GridSpec {
        axes: vec![axis(&req.x_axis)?, axis(&req.y_axis)?],
        base: req.base.clone().unwrap_or_else(|| FloatPoint::new(vec![0.0; inst.m()], vec![0.0; inst.n()])),
        resolution: req.resolution,
    };
    let grid = grid_sample(&inst, &spec).map_err(|e| e.to_string())?;
    serde_json::to_string(&grid).map_err(|e| e.to_string())
}

fn step_value(sf: &StepFunction) -> Value {
    json!({
        "breakpoints": sf.breakpoints.iter().map(|b| b.to_f64()).collect::<Vec<_>>(),
        "plateaus": sf.plateaus.iter().map(|p| p.to_f64()).collect::<Vec<_>>(),
        "exact": sf,
        "roots": roots(sf),
    })
}

pub fn steps_json(inst_text: &str, point_text: &str) -> Result<String, String> {
    let (inst, p) = point_or_stored(inst_text, point_text)?;
    let alpha = step_alpha(&inst, &p).map_err(|e| e.to_string())?;
    let beta = step_beta(&inst, &p).map_err(|e| e.to_string())?;
    Ok(json!({ "alpha": step_value(&alpha), "beta": step_value(&beta) }).to_string())
}

pub fn classify_json(inst_text: &str, point_text: &str) -> Result<String, String> {
    let (inst, p) = point_or_stored(inst_text, point_text)?;
    let class = classify_point(&inst, &p).map_err(|e| e.to_string())?;
    let verdict = is_critical_lp(&inst, &p).map_err(|e| e.to_string())?;
    let mut out = json!({ "classification": class, "lambda_lp": verdict });
    if class.kind == PointKind::Saddle && inst.has_nonzero_factors() {
        out["descent"] = serde_json::to_value(descent_direction(&inst, &p).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    }
    Ok(out.to_string())
}

/// Grid of `f` over two coordinates; `request` is
/// `{"x_axis": "x1", "y_axis": "x2", "lo": -2, "hi": 2, "resolution": 64, "base": {...}}`.
#[wasm_bindgen]
pub fn heatmap(instance: &str, request: &str) -> Result<String, JsValue> {
    heatmap_json(instance, request).map_err(|e| JsValue::from_str(&e))
}

/// Step functions of both sections at the point.
#[wasm_bindgen]
pub fn steps(instance: &str, point: &str) -> Result<String, JsValue> {
    steps_json(instance, point).map_err(|e| JsValue::from_str(&e))
}

/// Exact classification, with a descent plan at saddles.
#[wasm_bindgen]
pub fn classify(instance: &str, point: &str) -> Result<String, JsValue> {
    classify_json(instance, point).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLUMN: &str = r#"{"M": [[0], [1]]}"#;

    #[test]
    fn heatmap_on_the_plane_y_zero() {
        let req = r#"{"x_axis": "x1", "y_axis": "x2", "lo": -1, "hi": 1, "resolution": 5}"#;
        let v: Value = serde_json::from_str(&heatmap_json(COLUMN, req).unwrap()).unwrap();
        let values = v["values"].as_array().unwrap();
        assert_eq!(values.len(), 25);
        assert!(values.iter().all(|f| f.as_f64() == Some(1.0)));
        let bad = r#"{"x_axis": "x1", "y_axis": "x2", "lo": 1, "hi": 1, "resolution": 5}"#;
        assert!(heatmap_json(COLUMN, bad).is_err());
    }

    #[test]
    fn step_functions() {
        let inst = r#"{"u": [-2, -1, 2, 1, -2], "v": [-1, 1, 1]}"#;
        let point = r#"{"x": [2, -1, -1, 1, -1], "y": [-1, "-1/2", "-1/2"]}"#;
        let v: Value = serde_json::from_str(&steps_json(inst, point).unwrap()).unwrap();
        assert_eq!(v["alpha"]["breakpoints"], json!([-2.0, 1.0]));
        assert_eq!(v["alpha"]["exact"]["plateaus"], json!(["-2", "0", "2"]));
    }

    #[test]
    fn classification() {
        let v: Value = serde_json::from_str(&classify_json(COLUMN, r#"{"x": [0, 0], "y": [0]}"#).unwrap()).unwrap();
        assert_eq!(v["classification"]["kind"], "Saddle");
        assert_eq!(v["descent"]["theta"], "1");
        let v: Value = serde_json::from_str(&classify_json(COLUMN, r#"{"x": [1, 0], "y": [0]}"#).unwrap()).unwrap();
        assert_eq!(v["classification"]["kind"], "SpuriousLocalMin");
        assert!(classify_json(COLUMN, r#"{"x": [1], "y": [0]}"#).is_err());
        assert!(classify_json(COLUMN, "").is_err());
    }
}
