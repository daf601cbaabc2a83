//! Browser bindings for the demo page in `www/`.
//!
//! Every entry point takes a JSON request and returns a JSON string, so the
//! page needs no generated glue beyond the three exported functions. The
//! `*_json` functions are the same operations without the wasm wrapper.

use homoclinic_core::bifurcation::{scan_roots, FrameWorkspace, LsBifurcation, LsOptions, Slice};
use homoclinic_core::conditions::{evaluate_all, ConditionOptions};
use homoclinic_core::homoclinic::HomoclinicOrbit;
use homoclinic_core::systems::{FieldPreset, ForcingPreset};
use homoclinic_core::variational::{build_frame, FrameNormalization, FrameOptions, VariationalFrame};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Request {
    pub field: FieldPreset,
    pub forcing: ForcingPreset,
    pub window: f64,
    pub normalization: FrameNormalization,
    pub beta: f64,
    pub epsilon: f64,
    pub slice: Option<Slice>,
    /// Rows returned by `frame`; the grid is thinned to about this many.
    pub max_points: usize,
}

impl Default for Request {
    fn default() -> Self {
        Request {
            field: FieldPreset::default(),
            forcing: ForcingPreset::A1,
            window: 20.0,
            normalization: FrameNormalization::default(),
            beta: 0.0,
            epsilon: 1e-3,
            slice: None,
            max_points: 400,
        }
    }
}

type Result<T> = std::result::Result<T, String>;

fn parse(request: &str) -> Result<Request> {
    if request.trim().is_empty() {
        return Ok(Request::default());
    }
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn build(req: &Request) -> Result<VariationalFrame> {
    let sys = req.field.system(&req.forcing).map_err(|e| e.to_string())?;
    let orbit = HomoclinicOrbit::for_preset(&req.field).map_err(|e| e.to_string())?;
    let opts = FrameOptions {
        normalization: req.normalization,
        ..Default::default()
    };
    build_frame(&sys, &orbit, req.window, &opts).map_err(|e| e.to_string())
}

/// Loop and frame samples: rows `[t, γ₁, γ₂, ζ₁, ζ₂, Δ]`.
pub fn frame_json(request: &str) -> Result<String> {
    let req = parse(request)?;
    let frame = build(&req)?;
    let grid = frame.grid();
    let step = (grid.len() / req.max_points.max(2)).max(1);
    let rows: Vec<[f64; 6]> = grid
        .iter()
        .step_by(step)
        .map(|&t| {
            let (g, z) = (frame.gamma(t), frame.zeta(t));
            [t, g.x, g.y, z.x, z.y, frame.delta(t)]
        })
        .collect();
    Ok(json!({ "omega": frame.omega, "window": frame.window, "rows": rows, "diagnostics": frame.diagnostics }).to_string())
}

/// `B` along the requested slice at one ε, with the roots found.
pub fn b_curve_json(request: &str) -> Result<String> {
    let req = parse(request)?;
    let slice = req.slice.ok_or("b_curve needs a slice")?;
    let frame = build(&req)?;
    let ws = FrameWorkspace::new(&frame);
    let func = LsBifurcation {
        ws: &ws,
        opts: LsOptions::default(),
    };
    let scan = scan_roots(&func, &slice, &[req.epsilon]).map_err(|e| e.to_string())?;
    let e = &scan.scans[0];
    Ok(json!({ "epsilon": e.epsilon, "samples": e.samples, "roots": e.roots }).to_string())
}

/// Verdicts and values of every condition at the requested β.
pub fn conditions_json(request: &str) -> Result<String> {
    let req = parse(request)?;
    let frame = build(&req)?;
    let report = evaluate_all(&frame, req.beta, &ConditionOptions::default()).map_err(|e| e.to_string())?;
    let verdicts: Vec<Value> = report
        .verdicts()
        .iter()
        .map(|(name, v)| json!({ "name": name, "verdict": v }))
        .collect();
    Ok(json!({ "verdicts": verdicts, "report": report }).to_string())
}

#[wasm_bindgen]
pub fn frame(request: &str) -> std::result::Result<String, JsError> {
    frame_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn b_curve(request: &str) -> std::result::Result<String, JsError> {
    b_curve_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn conditions(request: &str) -> std::result::Result<String, JsError> {
    conditions_json(request).map_err(|e| JsError::new(&e))
}
