//! Browser bindings. Every export takes DSL text or plain numbers and returns
//! a JSON string; errors surface as JavaScript exceptions.

use std::collections::BTreeMap;

use mzsim_core::builtins::builtin;
use mzsim_core::scan::{phase_scan, splitter_sweep};
use mzsim_core::stats::{compare, DEFAULT_ALPHA};
use mzsim_core::{enumerate_outcomes, parse, run_ensemble, serialize, OutcomeDistribution};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Trials above this are refused to keep the page responsive.
pub const MAX_TRIALS: u64 = 2_000_000;

fn dist(d: &OutcomeDistribution) -> Value {
    json!(d.as_map())
}

fn table(rows: Vec<(f64, OutcomeDistribution)>, key: &str) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|(x, d)| json!({ key: x, "distribution": dist(d) }))
        .collect();
    Value::Array(rows).to_string()
}

pub fn builtin_text(name: &str) -> Result<String, String> {
    builtin(name).map(|d| serialize(&d)).map_err(|e| e.to_string())
}

pub fn analyze_text(dsl: &str) -> Result<String, String> {
    let doc = parse(dsl).map_err(|e| e.to_string())?;
    let (d, _) = enumerate_outcomes(&doc.apparatus).map_err(|e| e.to_string())?;
    Ok(json!({ "distribution": dist(&d), "warnings": doc.apparatus.warnings() }).to_string())
}

pub fn fringe_text(dsl: &str, stage: usize, points: usize) -> Result<String, String> {
    let doc = parse(dsl).map_err(|e| e.to_string())?;
    phase_scan(&doc.apparatus, stage, points)
        .map(|rows| table(rows, "phi"))
        .map_err(|e| e.to_string())
}

pub fn sweep_text(points: usize, which_way: bool) -> Result<String, String> {
    splitter_sweep(points, which_way)
        .map(|rows| table(rows, "t"))
        .map_err(|e| e.to_string())
}

pub fn sample_text(dsl: &str, trials: u64, seed: u64) -> Result<String, String> {
    if trials > MAX_TRIALS {
        return Err(format!("at most {MAX_TRIALS} trials in the browser"));
    }
    let doc = parse(dsl).map_err(|e| e.to_string())?;
    let report = run_ensemble(&doc.apparatus, trials, seed).map_err(|e| e.to_string())?;
    let verdict = compare(&report, DEFAULT_ALPHA).map_err(|e| e.to_string())?;
    let sigma: BTreeMap<&String, Option<f64>> = verdict
        .per_outcome
        .iter()
        .map(|(k, c)| (k, c.sigma_distance.is_finite().then_some(c.sigma_distance)))
        .collect();
    Ok(json!({
        "counts": report.counts,
        "frequencies": report.frequencies,
        "predicted": dist(&report.predicted),
        "sigma_distance": sigma,
        "chi_square": report.chi_square,
        "dof": report.dof,
        "p_value": verdict.p_value,
        "pass": verdict.pass,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Canonical DSL text of a built-in experiment.
#[wasm_bindgen(js_name = builtinSource)]
pub fn builtin_source(name: &str) -> Result<String, JsError> {
    js(builtin_text(name))
}

#[wasm_bindgen]
pub fn analyze(dsl: &str) -> Result<String, JsError> {
    js(analyze_text(dsl))
}

/// Phase fringe at `phi = 2 pi k / points`; `stage` is 1-based.
#[wasm_bindgen(js_name = phaseFringe)]
pub fn phase_fringe(dsl: &str, stage: usize, points: usize) -> Result<String, JsError> {
    js(fringe_text(dsl, stage, points))
}

/// Interferometer outputs as both splitters sweep transmission 0..1.
#[wasm_bindgen(js_name = splitterSweep)]
pub fn splitter_sweep_js(points: usize, which_way: bool) -> Result<String, JsError> {
    js(sweep_text(points, which_way))
}

#[wasm_bindgen]
pub fn sample(dsl: &str, trials: u32, seed: u32) -> Result<String, JsError> {
    js(sample_text(dsl, trials as u64, seed as u64))
}
