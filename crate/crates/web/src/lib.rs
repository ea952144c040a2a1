//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and slices and returns a JSON document;
//! the computation lives in [`demo`] so it can be tested natively.

use wasm_bindgen::prelude::*;

pub mod demo;

fn to_js<T: serde::Serialize>(r: freechoice_core::Result<T>) -> Result<String, JsValue> {
    r.map(|v| serde_json::to_string(&v).expect("demo output serializes"))
        .map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Posterior and certainty-equivalent curve of a lottery. See [`demo::lottery`].
#[wasm_bindgen]
pub fn lottery(
    p0: &[f64],
    utility: &[f64],
    beta: f64,
    beta_span: f64,
    points: usize,
) -> Result<String, JsValue> {
    to_js(demo::lottery(p0, utility, beta, beta_span, points))
}

/// Penalized expected maximum for a truncated Poisson source. See [`demo::satisficing`].
#[wasm_bindgen]
pub fn satisficing(lambda: f64, high: u32, cost: f64, m_max: usize) -> Result<String, JsValue> {
    to_js(demo::satisficing(lambda, high, cost, m_max))
}

/// Gibbs-versus-maximum distances with the fitted decay. See [`demo::gibbs_vs_max`].
#[wasm_bindgen]
pub fn gibbs_vs_max(prior: &[f64], source: &[f64], alpha_max: u32) -> Result<String, JsValue> {
    to_js(demo::gibbs_vs_max(prior, source, alpha_max))
}
