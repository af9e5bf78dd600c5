//! Browser bindings for three interactive views: a synthetic power-law tail
//! with its fit, the expected-maximum curve, and the family independence
//! test. Each export returns a JSON string for the page to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use bugtail::synth;
use bugtail::tail_stats::{
    ccdf, chi_square_independence, expected_max, fit_power_law_tail, loglog_slope, FitMode, TailFit,
};

/// Upper bound on points sent to the page per curve.
const MAX_POINTS: usize = 400;

#[derive(Debug, Serialize)]
pub struct TailView {
    /// Empirical CCDF, thinned on a log grid.
    pub ccdf: Vec<(f64, f64)>,
    pub fit: TailFit,
    /// Least-squares log-log slope of the CCDF down to p = 1e-3.
    pub slope: Option<f64>,
    pub expected_max: f64,
    pub observed_max: f64,
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(MAX_POINTS + 1);
    let lo = points[0].0.max(1e-300).ln();
    let hi = points[points.len() - 1].0.ln();
    let step = (hi - lo) / MAX_POINTS as f64;
    let mut next = lo;
    for &(x, p) in points {
        if x.max(1e-300).ln() >= next {
            out.push((x, p));
            next += step;
        }
    }
    if out.last() != points.last() {
        out.push(points[points.len() - 1]);
    }
    out
}

pub fn tail_view(gamma: f64, n: usize, x_min: f64, seed: u64, discrete: bool) -> Result<TailView, String> {
    if !(gamma > 1.0 && gamma < 10.0) || !(x_min >= 1.0) || !(50..=1_000_000).contains(&n) {
        return Err("need 1 < gamma < 10, x_min ≥ 1 and 50 ≤ n ≤ 1e6".into());
    }
    let mut rng = synth::rng(seed);
    let (samples, mode) = if discrete {
        (synth::discrete_power_law(&mut rng, n, gamma, x_min.round() as u64), FitMode::Discrete)
    } else {
        (synth::pareto(&mut rng, n, gamma, x_min), FitMode::Continuous)
    };
    let x_min = if discrete { x_min.round() } else { x_min };
    let fit = fit_power_law_tail(&samples, mode, Some(x_min)).map_err(|e| e.to_string())?;
    let curve = ccdf(&samples).map_err(|e| e.to_string())?;
    Ok(TailView {
        slope: loglog_slope(&curve, x_min, 1e-3).ok(),
        ccdf: thin(&curve.points),
        expected_max: x_min * expected_max(n as u64, fit.gamma).map_err(|e| e.to_string())?,
        observed_max: samples.iter().copied().fold(f64::MIN, f64::max),
        fit,
    })
}

#[derive(Debug, Serialize)]
pub struct MaxPoint {
    pub n: u64,
    /// `n^(1/(gamma-1))`
    pub scaling: f64,
    /// Mean of the largest draw over the repetitions.
    pub simulated: f64,
}

pub fn max_curve(gamma: f64, n_max: u64, reps: usize, seed: u64) -> Result<Vec<MaxPoint>, String> {
    if !(gamma > 1.0 && gamma < 10.0) || !(10..=100_000).contains(&n_max) || !(1..=2_000).contains(&reps) {
        return Err("need 1 < gamma < 10, 10 ≤ n ≤ 1e5 and 1 ≤ repetitions ≤ 2000".into());
    }
    let mut rng = synth::rng(seed);
    let mut points = Vec::new();
    let mut n = 10u64;
    while n <= n_max {
        points.push(MaxPoint {
            n,
            scaling: expected_max(n, gamma).map_err(|e| e.to_string())?,
            simulated: synth::mean_max(&mut rng, n as usize, reps, gamma, 1.0),
        });
        n = if n * 2 > n_max && n < n_max { n_max } else { n * 2 };
    }
    Ok(points)
}

#[derive(Debug, Serialize)]
pub struct FamilyView {
    pub rates: [f64; 3],
    pub chi2: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Independence test on family sizes and infected counts, in the order
/// updated, unchanged, added.
pub fn family_view(sizes: [u32; 3], infected: [u32; 3]) -> Result<FamilyView, String> {
    if sizes.iter().zip(&infected).any(|(n, k)| *n == 0 || k > n) {
        return Err("every family needs members and at most that many infected".into());
    }
    let table: Vec<Vec<f64>> =
        sizes.iter().zip(&infected).map(|(&n, &k)| vec![f64::from(k), f64::from(n - k)]).collect();
    let r = chi_square_independence(&table).map_err(|e| e.to_string())?;
    Ok(FamilyView {
        rates: [0, 1, 2].map(|i| f64::from(infected[i]) / f64::from(sizes[i])),
        chi2: r.chi2,
        dof: r.dof,
        p_value: r.p_value,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = tailView)]
pub fn tail_view_js(gamma: f64, n: u32, x_min: f64, seed: u32, discrete: bool) -> Result<String, JsValue> {
    to_js(tail_view(gamma, n as usize, x_min, u64::from(seed), discrete))
}

#[wasm_bindgen(js_name = maxCurve)]
pub fn max_curve_js(gamma: f64, n_max: u32, reps: u32, seed: u32) -> Result<String, JsValue> {
    to_js(max_curve(gamma, u64::from(n_max), reps as usize, u64::from(seed)))
}

#[wasm_bindgen(js_name = familyTest)]
pub fn family_test_js(
    n_updated: u32,
    infected_updated: u32,
    n_unchanged: u32,
    infected_unchanged: u32,
    n_added: u32,
    infected_added: u32,
) -> Result<String, JsValue> {
    to_js(family_view(
        [n_updated, n_unchanged, n_added],
        [infected_updated, infected_unchanged, infected_added],
    ))
}
