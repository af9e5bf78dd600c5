//! Maximum-likelihood power-law tail fits, with the lower cutoff chosen by
//! minimum Kolmogorov–Smirnov distance when it is not given.

use serde::{Deserialize, Serialize};

use super::special::hurwitz_zeta_with_derivative;
use super::StatsError;

/// Smallest tail accepted by the fitter.
pub const MIN_TAIL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// Integer-valued data (counts), density ∝ k^-γ for k ≥ x_min.
    Discrete,
    /// Real-valued data, density ∝ x^-γ for x ≥ x_min.
    Continuous,
}

/// Fitted tail `p(x) ∝ x^-gamma` for `x ≥ x_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub gamma: f64,
    pub x_min: f64,
    /// KS distance between the empirical and the fitted tail CCDF.
    pub ks: f64,
    pub n_tail: usize,
    pub mode: FitMode,
}

/// Expected largest value among `n` draws, in units of `x_min`:
/// `n^(1 / (gamma - 1))`.
pub fn expected_max(n: u64, gamma: f64) -> Result<f64, StatsError> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(StatsError::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    if n == 0 {
        return Err(StatsError::Domain("n must be positive".into()));
    }
    Ok((n as f64).powf(1.0 / (gamma - 1.0)))
}

/// Closed-form discrete estimate `1 + n / Σ ln(x / (x_min - 1/2))`.
///
/// Accurate for large `x_min`; biased low near `x_min = 1`. Used as the
/// starting bracket for the exact discrete MLE.
pub fn discrete_exponent_approx(tail: &[f64], x_min: f64) -> f64 {
    let s: f64 = tail.iter().map(|x| (x / (x_min - 0.5)).ln()).sum();
    1.0 + tail.len() as f64 / s
}

fn continuous_mle(tail: &[f64], x_min: f64) -> Option<f64> {
    let s: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    (s > 0.0 && tail.iter().any(|&x| x > x_min)).then(|| 1.0 + tail.len() as f64 / s)
}

/// Exact discrete MLE: solves `-ζ'(γ, x_min) / ζ(γ, x_min) = mean ln x`.
fn discrete_mle(tail: &[f64], x_min: f64) -> Option<f64> {
    if tail.iter().all(|&x| x <= x_min) {
        return None;
    }
    let target = tail.iter().map(|x| x.ln()).sum::<f64>() / tail.len() as f64;
    // model mean of ln x; strictly decreasing in gamma
    let mean_ln = |g: f64| {
        let (z, dz) = hurwitz_zeta_with_derivative(g, x_min);
        -dz / z
    };
    let mut lo = 1.0 + 1e-9;
    let approx = discrete_exponent_approx(tail, x_min);
    let mut hi = if approx.is_finite() && approx > lo { approx.max(2.0) } else { 2.0 };
    while mean_ln(hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_ln(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// KS distance on a sorted tail. Compares P(X ≥ v) and P(X > v) against the
/// model survival at each distinct value `v`.
fn ks_distance(sorted_tail: &[f64], survival: impl Fn(f64) -> f64, discrete: bool) -> f64 {
    let n = sorted_tail.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted_tail.len() {
        let v = sorted_tail[i];
        let mut j = i;
        while j < sorted_tail.len() && sorted_tail[j] == v {
            j += 1;
        }
        let s_model = survival(v);
        let at = (sorted_tail.len() - i) as f64 / n;
        d = d.max((at - s_model).abs());
        if !discrete {
            let above = (sorted_tail.len() - j) as f64 / n;
            d = d.max((above - s_model).abs());
        }
        i = j;
    }
    d.min(1.0)
}

/// Exponent and KS distance for a sorted tail cut at `x_min`.
fn fit_tail(tail: &[f64], x_min: f64, mode: FitMode) -> Option<(f64, f64)> {
    let gamma = match mode {
        FitMode::Continuous => continuous_mle(tail, x_min)?,
        FitMode::Discrete => discrete_mle(tail, x_min)?,
    };
    if !gamma.is_finite() || gamma <= 1.0 {
        return None;
    }
    let ks = match mode {
        FitMode::Continuous => ks_distance(tail, |x| (x / x_min).powf(1.0 - gamma), false),
        FitMode::Discrete => {
            let norm = hurwitz_zeta_with_derivative(gamma, x_min).0;
            ks_distance(tail, |x| hurwitz_zeta_with_derivative(gamma, x).0 / norm, true)
        }
    };
    Some((gamma, ks))
}

/// Fits a power-law tail.
///
/// With `x_min` given, only the exponent is estimated. Without it, every
/// distinct sample value leaving at least [`MIN_TAIL`] samples in the tail
/// is tried and the fit with the smallest KS distance wins; ties go to the
/// smaller `x_min`.
pub fn fit_power_law_tail(
    samples: &[f64],
    mode: FitMode,
    x_min: Option<f64>,
) -> Result<TailFit, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::Domain(format!("non-finite sample {bad}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let admissible = |x: f64| match mode {
        FitMode::Continuous => x > 0.0,
        FitMode::Discrete => x >= 1.0 && x.fract() == 0.0,
    };

    if let Some(xm) = x_min {
        if !admissible(xm) {
            return Err(StatsError::Domain(format!("x_min {xm} not admissible for {mode:?} data")));
        }
        let start = sorted.partition_point(|&x| x < xm);
        let n_tail = sorted.len() - start;
        if n_tail < MIN_TAIL {
            return Err(StatsError::InsufficientTail { needed: MIN_TAIL, found: n_tail });
        }
        if mode == FitMode::Discrete && sorted[start..].iter().any(|x| x.fract() != 0.0) {
            return Err(StatsError::Domain("discrete fit needs integer samples".into()));
        }
        let (gamma, ks) = fit_tail(&sorted[start..], xm, mode)
            .ok_or_else(|| StatsError::DegenerateInput("no spread above x_min".into()))?;
        return Ok(TailFit { gamma, x_min: xm, ks, n_tail, mode });
    }

    let mut best: Option<TailFit> = None;
    let mut largest_tail = 0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let n_tail = sorted.len() - i;
        if n_tail < MIN_TAIL {
            break;
        }
        if admissible(v) {
            largest_tail = largest_tail.max(n_tail);
            let tail = &sorted[i..];
            let integral = mode == FitMode::Continuous || tail.iter().all(|x| x.fract() == 0.0);
            if let Some((gamma, ks)) = integral.then(|| fit_tail(tail, v, mode)).flatten() {
                if best.is_none_or(|b| ks < b.ks) {
                    best = Some(TailFit { gamma, x_min: v, ks, n_tail, mode });
                }
            }
        }
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    best.ok_or_else(|| {
        let found = if largest_tail > 0 {
            largest_tail
        } else {
            sorted.iter().filter(|x| admissible(**x)).count()
        };
        StatsError::InsufficientTail { needed: MIN_TAIL, found }
    })
}
