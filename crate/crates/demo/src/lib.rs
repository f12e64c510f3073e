//! Browser demo: fit a 1-D kriging curve to clicked points, draw maximin
//! designs and compare correlation functions.

use gpbench::designs::{maximin_lhs, min_pairwise_distance, random_lhs};
use gpbench::kernels::Correlation;
use gpbench::model::nugget::DEFAULT_NUGGET_START;
use gpbench::{fit, Family, FitConfig, Nugget, NuggetStrategy, Parameterization};
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

fn family(name: &str) -> Result<Family, String> {
    match name {
        "gauss" => Ok(Family::GAUSSIAN),
        "pexp195" => Ok(Family::PowerExponential { exponent: 1.95 }),
        "pexp1" => Ok(Family::PowerExponential { exponent: 1.0 }),
        "matern52" => Ok(Family::Matern52),
        _ => Err(format!("unknown kernel {name}")),
    }
}

fn nugget(name: &str) -> Result<NuggetStrategy, String> {
    match name {
        "none" => Ok(NuggetStrategy::Fixed(0.0)),
        "estimate" => Ok(NuggetStrategy::Estimated { start: DEFAULT_NUGGET_START }),
        "dlb" => Ok(NuggetStrategy::StabilityLowerBound),
        "dace" => Ok(NuggetStrategy::DaceDefault),
        _ => Err(format!("unknown nugget {name}")),
    }
}

/// Fitted curve sampled on an even grid over [0, 1].
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CurveFit {
    grid: Vec<f64>,
    mean: Vec<f64>,
    sd: Vec<f64>,
    theta: f64,
    nugget: f64,
    deviance: f64,
}

#[wasm_bindgen]
impl CurveFit {
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone()
    }
    pub fn mean(&self) -> Vec<f64> {
        self.mean.clone()
    }
    /// Root of the predicted MSE.
    pub fn sd(&self) -> Vec<f64> {
        self.sd.clone()
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn nugget(&self) -> f64 {
        self.nugget
    }
    pub fn deviance(&self) -> f64 {
        self.deviance
    }
}

pub fn fit_curve(xs: &[f64], ys: &[f64], kernel: &str, nugget_name: &str, points: usize) -> Result<CurveFit, String> {
    if xs.len() != ys.len() {
        return Err("x and y lengths differ".into());
    }
    if points < 2 {
        return Err("need at least two grid points".into());
    }
    let x = DMatrix::from_column_slice(xs.len(), 1, xs);
    let cfg = FitConfig::default().with_nugget(nugget(nugget_name)?);
    let model = fit(&x, ys, family(kernel)?, Parameterization::Log10Theta, &cfg).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let preds: Vec<_> = grid.iter().map(|&g| model.predict(&[g])).collect();
    Ok(CurveFit {
        mean: preds.iter().map(|p| p.mean).collect(),
        sd: preds.iter().map(|p| p.mse.sqrt()).collect(),
        grid,
        theta: model.theta()[0],
        nugget: match model.nugget() {
            Nugget::Scalar(v) => *v,
            Nugget::PerPoint(v) => v.iter().copied().fold(0.0, f64::max),
        },
        deviance: model.diagnostics().deviance,
    })
}

/// Row-major `n × 2` design; `iters = 0` gives a plain random LHS.
pub fn design_2d(n: usize, seed: u64, iters: usize) -> Vec<f64> {
    let x = if iters == 0 { random_lhs(n, 2, seed) } else { maximin_lhs(n, 2, seed, iters) };
    (0..n).flat_map(|i| [x[(i, 0)], x[(i, 1)]]).collect()
}

pub fn design_min_distance(flat: &[f64]) -> f64 {
    min_pairwise_distance(&DMatrix::from_row_slice(flat.len() / 2, 2, flat))
}

/// Correlation at distances `0..=max_h` in `points` even steps.
pub fn correlation_profile(kernel: &str, theta: f64, max_h: f64, points: usize) -> Result<Vec<f64>, String> {
    let c = Correlation::new(family(kernel)?, vec![theta]).map_err(|e| e.to_string())?;
    let steps = points.max(2) - 1;
    Ok((0..=steps).map(|i| c.eval(&[0.0], &[max_h * i as f64 / steps as f64])).collect())
}

#[wasm_bindgen(js_name = fitCurve)]
pub fn fit_curve_js(xs: Vec<f64>, ys: Vec<f64>, kernel: &str, nugget: &str, points: usize) -> Result<CurveFit, JsError> {
    fit_curve(&xs, &ys, kernel, nugget, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = design2d)]
pub fn design_2d_js(n: usize, seed: u32, iters: usize) -> Vec<f64> {
    design_2d(n, seed as u64, iters)
}

#[wasm_bindgen(js_name = designMinDistance)]
pub fn design_min_distance_js(flat: Vec<f64>) -> f64 {
    design_min_distance(&flat)
}

#[wasm_bindgen(js_name = correlationProfile)]
pub fn correlation_profile_js(kernel: &str, theta: f64, max_h: f64, points: usize) -> Result<Vec<f64>, JsError> {
    correlation_profile(kernel, theta, max_h, points).map_err(|e| JsError::new(&e))
}
