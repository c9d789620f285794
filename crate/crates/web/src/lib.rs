//! Browser bindings: each export returns a JSON string for the page in
//! `www/` to draw.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use trl_core::graphgen::EdgeList;
use trl_core::pipeline::{Kind, PipelineConfig, RunOptions};
use trl_core::probability::{exact_sphere_closure, mc_ball_closure, optimize_dim, theory_curves, Curve};
use trl_core::Result;

/// Graphs with more edges than this are summarized without their edge list.
pub const MAX_DRAWN_EDGES: usize = 600;

/// The three density curves for `D = 1..=grid_max` and their optimal `D`.
pub fn curves(n: f64) -> Result<Value> {
    let optima = Curve::ALL.iter().map(|&c| optimize_dim(n, c)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<Value> = (1..=optima[0].grid_max)
        .map(|d| {
            let t = theory_curves(d, n);
            json!({ "D": d, "behrend": t.behrend, "green": t.green, "new": t.new })
        })
        .collect();
    Ok(json!({ "n": n, "rows": rows, "optima": optima }))
}

/// Box closure `(3/4)^D`, ball closure by Monte Carlo and sphere closure
/// by quadrature, for `D = 1..=max_dim`.
pub fn closures(max_dim: usize, samples: u64, seed: u64) -> Result<Value> {
    let mut rows = Vec::new();
    for d in 1..=max_dim {
        let box_value = 0.75f64.powi(d as i32);
        let ball = mc_ball_closure(d, samples, seed)?;
        let sphere = if d >= 2 { Some(exact_sphere_closure(d)?.value) } else { None };
        rows.push(json!({
            "D": d,
            "box": box_value,
            "ball": ball.value,
            "ball_stderr": ball.stderr,
            "sphere": sphere,
        }));
    }
    Ok(json!({ "samples": samples, "seed": seed, "rows": rows }))
}

/// Runs one construction and returns its report, plus the edges and part
/// sizes when the graph is small enough to draw.
pub fn build(kind: &str, dim: usize, size: u64, seed: u64) -> Result<Value> {
    let kind = match kind {
        "box" => Kind::Box,
        "ball" => Kind::Ball,
        "abstract" => Kind::Abstract,
        other => return Err(trl_core::Error::InvalidInput(format!("unknown construction '{other}'"))),
    };
    let mut cfg = PipelineConfig::new(kind, dim, size);
    cfg.seed = seed;
    cfg.options = RunOptions {
        mc_samples: 100_000,
        ..RunOptions::default()
    };
    let out = cfg.run()?;
    let edges = out.graph.edges();
    let drawn = (edges.len() <= MAX_DRAWN_EDGES).then(|| edges.to_vec());
    Ok(json!({
        "report": out.report,
        "part_sizes": out.graph.part_sizes(),
        "edges": drawn,
    }))
}

fn to_js(r: Result<Value>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = curves)]
pub fn curves_js(n: f64) -> std::result::Result<String, JsError> {
    to_js(curves(n))
}

#[wasm_bindgen(js_name = closures)]
pub fn closures_js(max_dim: usize, samples: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(closures(max_dim, samples as u64, seed as u64))
}

#[wasm_bindgen(js_name = build)]
pub fn build_js(kind: &str, dim: usize, size: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(build(kind, dim, size as u64, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_pick_fourteen_at_one_million() {
        let v = curves(1e6).unwrap();
        let new = v["optima"].as_array().unwrap().iter().find(|o| o["curve"] == "new").unwrap();
        assert_eq!(new["d_best"], 14);
        assert!(v["rows"].as_array().unwrap().len() >= 14);
    }

    #[test]
    fn closures_order() {
        let v = closures(6, 20_000, 1).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 6);
        let last = &rows[5];
        assert!(last["ball"].as_f64().unwrap() > last["box"].as_f64().unwrap());
        assert!(rows[0]["sphere"].is_null());
    }

    #[test]
    fn small_builds_carry_edges() {
        let v = build("box", 1, 2, 0).unwrap();
        assert_eq!(v["edges"].as_array().unwrap().len(), 12);
        assert_eq!(v["report"]["graph"]["verified"], true);
        let v = build("box", 2, 10, 0).unwrap();
        assert_eq!(v["report"]["graph"]["edges"], 1080);
        assert!(v["edges"].is_null());
        assert!(build("torus", 1, 2, 0).is_err());
    }
}
