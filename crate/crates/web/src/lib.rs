//! WebAssembly bindings for the browser demo in `www/`.

pub mod demo;

use polysample::analytic_refs::ReferencePdf;
use wasm_bindgen::prelude::*;

fn js_error(e: polysample::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A random planar arm and its path to closure.
#[wasm_bindgen]
pub struct ClosureDemo(demo::Closure);

#[wasm_bindgen]
impl ClosureDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, seed: u64) -> Result<ClosureDemo, JsError> {
        demo::Closure::random(n, seed).map(ClosureDemo).map_err(js_error)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    /// Edge directions as angles in radians.
    pub fn angles(&self) -> Vec<f64> {
        self.0.angles().to_vec()
    }

    #[wasm_bindgen(js_name = setAngle)]
    pub fn set_angle(&mut self, i: usize, angle: f64) {
        if i < self.0.n() {
            self.0.set_angle(i, angle);
        }
    }

    /// Flattened vertex coordinates at fraction `t` of the way to the closure.
    pub fn vertices(&self, t: f64) -> Result<Vec<f64>, JsError> {
        self.0.vertices(t).map_err(js_error)
    }

    pub fn barycenter(&self) -> Result<Vec<f64>, JsError> {
        self.0.barycenter().map_err(js_error)
    }
}

#[wasm_bindgen]
pub struct HistogramResult(demo::ChordHistogram);

#[wasm_bindgen]
impl HistogramResult {
    pub fn centers(&self) -> Vec<f64> {
        self.0.centers.clone()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.0.densities.clone()
    }

    #[wasm_bindgen(js_name = standardErrors)]
    pub fn standard_errors(&self) -> Vec<f64> {
        self.0.standard_errors.clone()
    }

    pub fn reference(&self) -> Vec<f64> {
        self.0.reference.clone()
    }
}

/// `reference` is one of `hexagon-eq`, `hexagon-neq`, `tetragon-full`,
/// `tetragon-quotient`.
#[wasm_bindgen(js_name = chordHistogram)]
pub fn chord_histogram(reference: &str, count: usize, bins: usize, seed: u64) -> Result<HistogramResult, JsError> {
    let pdf: ReferencePdf = reference.parse().map_err(js_error)?;
    demo::chord_histogram(pdf, count, bins, seed)
        .map(HistogramResult)
        .map_err(js_error)
}

#[wasm_bindgen]
pub struct GyradiusResult {
    pub mean: f64,
    #[wasm_bindgen(js_name = ciRadius)]
    pub ci_radius: f64,
    #[wasm_bindgen(js_name = nSamples)]
    pub n_samples: f64,
    pub exact: f64,
}

#[wasm_bindgen(js_name = estimateGyradius)]
pub fn estimate_gyradius(
    n: usize,
    d: usize,
    rel_radius: f64,
    max_samples: f64,
    seed: u64,
) -> Result<GyradiusResult, JsError> {
    let e = demo::gyradius_estimate(n, d, rel_radius, max_samples as u64, seed).map_err(js_error)?;
    Ok(GyradiusResult {
        mean: e.mean,
        ci_radius: e.ci_radius,
        n_samples: e.n_samples,
        exact: e.exact,
    })
}
