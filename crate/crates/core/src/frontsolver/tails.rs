//! Exponential tail fits against the characteristic rates.

use serde::{Deserialize, Serialize};

use super::operators::{tail_models, ProductIntegrand};
use super::quadrature::{right_conv, Rule};
use crate::charspec::{chi_roots, leading_stable_root};
use crate::domain::{GridProfile, Params};
use crate::error::{Error, Result};
use crate::numeric::{fit_line, fit_plane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub side: TailSide,
    /// Decay rate of `φ` (left) or of `|1 - φ|` (right), as a positive number.
    pub fitted_rate: f64,
    /// Left: `φ e^{-λt}` averaged over the tail. Right: `|1-φ| e^{-λ₀t}` from the fit.
    pub fitted_coefficient: f64,
    pub predicted_rate: f64,
    pub relative_rate_error: f64,
    pub polynomial_factor_detected: bool,
    /// Left only, `c > 2`: `(1/(μ-λ)) ∫ e^{-λs} φ(s) φ(s-h) ds`.
    pub predicted_coefficient: Option<f64>,
    pub relative_coefficient_error: Option<f64>,
    pub samples: usize,
}

/// Amplitude below which samples count as tail samples.
const TAIL_LEVEL: f64 = 1e-6;
/// Below this `|1 - φ|` is round-off.
const NOISE_FLOOR: f64 = 1e-13;
const MIN_SAMPLES: usize = 50;

/// Exponent of a power-law factor `|t|^k` detected next to the exponential.
fn power_exponent(t: &[f64], y: &[f64]) -> Option<f64> {
    let lt: Vec<f64> = t.iter().map(|v| v.abs().ln()).collect();
    if t.iter().any(|v| *v == 0.0) {
        return None;
    }
    fit_plane(t, &lt, y).ok().map(|(_, _, k)| k)
}

pub fn tail_asymptotics(phi: &GridProfile, p: &Params) -> Result<(TailReport, TailReport)> {
    Ok((left_tail(phi, p)?, right_tail(phi, p)?))
}

fn left_tail(phi: &GridProfile, p: &Params) -> Result<TailReport> {
    let (lambda, mu) = chi_roots(p.c)?;
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (i, &v) in phi.values.iter().enumerate() {
        if v > TAIL_LEVEL {
            break;
        }
        if v > 1e-280 {
            t.push(phi.t(i));
            y.push(v.ln());
        }
    }
    if t.len() < MIN_SAMPLES {
        return Err(Error::Fit(format!(
            "only {} left-tail samples below {TAIL_LEVEL:e}",
            t.len()
        )));
    }
    let line = fit_line(&t, &y)?;
    let k = if t.iter().all(|v| *v < 0.0) {
        power_exponent(&t, &y)
    } else {
        None
    };
    let poly = k.is_some_and(|k| k > 0.5);
    let fitted_rate = if poly {
        let lt: Vec<f64> = t.iter().map(|v| (-v).ln()).collect();
        fit_plane(&t, &lt, &y)?.1
    } else {
        line.slope
    };
    let mean: f64 = t.iter().zip(&y).map(|(ti, yi)| yi - lambda * ti).sum::<f64>() / t.len() as f64;
    let fitted_coefficient = mean.exp();
    let predicted_coefficient = if mu > lambda {
        Some(af1_integral(phi, p, lambda)? / (mu - lambda))
    } else {
        None
    };
    Ok(TailReport {
        side: TailSide::Left,
        fitted_rate,
        fitted_coefficient,
        predicted_rate: lambda,
        relative_rate_error: (fitted_rate - lambda).abs() / lambda,
        polynomial_factor_detected: poly,
        predicted_coefficient,
        relative_coefficient_error: predicted_coefficient
            .map(|q| (fitted_coefficient - q).abs() / q.abs()),
        samples: t.len(),
    })
}

/// `∫_ℝ e^{-λs} φ(s) φ(s-h) ds` with closed-form tails.
fn af1_integral(phi: &GridProfile, p: &Params, lambda: f64) -> Result<f64> {
    let tails = tail_models(phi);
    let pi = ProductIntegrand::new(&phi.values, &tails, p.h(), phi.dt);
    let r = right_conv(pi.samples(phi.dt), lambda, phi.dt, pi.right.right_integral(lambda, 0), Rule::Cubic);
    let left = pi.left.left_integral(-lambda);
    Ok((-lambda * phi.t0).exp() * (r[0] + left))
}

fn right_tail(phi: &GridProfile, p: &Params) -> Result<TailReport> {
    let lambda0 = leading_stable_root(p)?;
    if lambda0.re >= 0.0 {
        return Err(Error::Precondition(format!(
            "leading zero {lambda0} is not in the left half-plane"
        )));
    }
    let oscillating = lambda0.im != 0.0;
    let dev: Vec<f64> = phi.values.iter().map(|v| (v - 1.0).abs()).collect();
    let n = dev.len();
    // start after the last sample above the tail level
    let start = dev.iter().rposition(|&d| d > TAIL_LEVEL).map_or(0, |i| i + 1);
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for i in start..n {
        let d = dev[i];
        if d <= NOISE_FLOOR {
            continue;
        }
        if oscillating {
            let is_peak = i > 0 && i + 1 < n && d >= dev[i - 1] && d >= dev[i + 1];
            if !is_peak {
                continue;
            }
        }
        t.push(phi.t(i));
        y.push(d.ln());
    }
    let need = if oscillating { 5 } else { MIN_SAMPLES };
    if t.len() < need {
        return Err(Error::Fit(format!(
            "only {} right-tail samples in ({NOISE_FLOOR:e}, {TAIL_LEVEL:e}]",
            t.len()
        )));
    }
    let line = fit_line(&t, &y)?;
    let k = if t.iter().all(|v| *v > 0.0) {
        power_exponent(&t, &y)
    } else {
        None
    };
    let predicted = -lambda0.re;
    let fitted = -line.slope;
    Ok(TailReport {
        side: TailSide::Right,
        fitted_rate: fitted,
        fitted_coefficient: line.intercept.exp(),
        predicted_rate: predicted,
        relative_rate_error: (fitted - predicted).abs() / predicted,
        polynomial_factor_detected: k.is_some_and(|k| k > 0.5),
        predicted_coefficient: None,
        relative_coefficient_error: None,
        samples: t.len(),
    })
}
