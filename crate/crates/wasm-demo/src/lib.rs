//! Browser bindings for the demo page in `www/`.
//!
//! Three operations: the density of an AEP law on a grid, sampling from a
//! law and refitting it, and binned volatility scaling of a synthetic
//! subunit panel.

use emission_dynamics::distributions::{fit_mle, AepParams, FitOptions};
use emission_dynamics::panel::{build_panel, Variable};
use emission_dynamics::scaling::{binned_volatility, fit_scaling, Pooling};
use emission_dynamics::synth::{generate_panel, GdpProcess, GeneratorSpec};
use wasm_bindgen::prelude::*;

/// `n` evenly spaced points on `[lo, hi]` and the density at each, packed
/// as `[x_0 .. x_{n-1}, f_0 .. f_{n-1}]`.
pub fn density_grid(params: [f64; 5], lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = AepParams::from_array(params).map_err(|e| e.to_string())?;
    if n < 2 || !(lo < hi) {
        return Err("need at least two points on a non-empty interval".into());
    }
    let xs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| p.pdf(x)).collect();
    Ok([xs, fs].concat())
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SampleFit {
    samples: Vec<f64>,
    params: Vec<f64>,
    std_errors: Vec<f64>,
    log_likelihood: f64,
}

#[wasm_bindgen]
impl SampleFit {
    pub fn samples(&self) -> Vec<f64> {
        self.samples.clone()
    }
    /// `[a_l, a_r, b_l, b_r, m]`
    pub fn params(&self) -> Vec<f64> {
        self.params.clone()
    }
    pub fn std_errors(&self) -> Vec<f64> {
        self.std_errors.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }
}

pub fn sample_fit(params: [f64; 5], n: usize, seed: u64) -> Result<SampleFit, String> {
    let p = AepParams::from_array(params).map_err(|e| e.to_string())?;
    let samples = p.sample(n, seed);
    let fit = fit_mle(&samples, &FitOptions { seed, ..FitOptions::default() }).map_err(|e| e.to_string())?;
    Ok(SampleFit {
        samples,
        params: fit.params.to_array().to_vec(),
        std_errors: fit.std_errors.to_vec(),
        log_likelihood: fit.log_likelihood,
    })
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ScalingDemo {
    centers: Vec<f64>,
    sigmas: Vec<f64>,
    beta: f64,
    beta_se: f64,
}

#[wasm_bindgen]
impl ScalingDemo {
    pub fn centers(&self) -> Vec<f64> {
        self.centers.clone()
    }
    pub fn sigmas(&self) -> Vec<f64> {
        self.sigmas.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn beta(&self) -> f64 {
        self.beta
    }
    #[wasm_bindgen(getter)]
    pub fn beta_se(&self) -> f64 {
        self.beta_se
    }
}

/// GDP growth volatility against size for regions built from up to 256
/// subunits; `common_share` is the weight of the region-wide shock.
pub fn scaling(common_share: f64, n_regions: usize, n_bins: usize, seed: u64) -> Result<ScalingDemo, String> {
    let spec = GeneratorSpec {
        n_regions,
        gdp_process: GdpProcess::Subunits {
            max_subunits: 256,
            common_share,
            shock_sd: 0.03,
        },
        ..GeneratorSpec::regional(0.0, 0.0, 0.0, seed)
    };
    let out = generate_panel(&spec).map_err(|e| e.to_string())?;
    let last = spec.first_year + spec.n_years as i32 - 1;
    let panel = build_panel(&out.observations, spec.first_year..=last).map_err(|e| e.to_string())?;
    let bins =
        binned_volatility(&panel.full_view(), Variable::Gdp, n_bins, Pooling::RegionYears).map_err(|e| e.to_string())?;
    let fit = fit_scaling(&bins).map_err(|e| e.to_string())?;
    Ok(ScalingDemo {
        centers: bins.iter().map(|b| b.bin_center).collect(),
        sigmas: bins.iter().map(|b| b.sigma).collect(),
        beta: fit.beta,
        beta_se: fit.beta_se,
    })
}

#[wasm_bindgen(js_name = densityGrid)]
#[allow(clippy::too_many_arguments)]
pub fn density_grid_js(a_l: f64, a_r: f64, b_l: f64, b_r: f64, m: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    density_grid([a_l, a_r, b_l, b_r, m], lo, hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sampleFit)]
#[allow(clippy::too_many_arguments)]
pub fn sample_fit_js(a_l: f64, a_r: f64, b_l: f64, b_r: f64, m: f64, n: usize, seed: u32) -> Result<SampleFit, JsError> {
    sample_fit([a_l, a_r, b_l, b_r, m], n, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scalingDemo)]
pub fn scaling_js(common_share: f64, n_regions: usize, n_bins: usize, seed: u32) -> Result<ScalingDemo, JsError> {
    scaling(common_share, n_regions, n_bins, seed as u64).map_err(|e| JsError::new(&e))
}
