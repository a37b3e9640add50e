//! Monotone fronts by upward iteration of `B` / `B₂`.
//!
//! The iteration starts from `max(0, 1 - e^{λ₀t} + a e^{σt})` with
//! `λ₀ < σ < 0`. The extra term keeps it strictly below its image by more
//! than the quadrature error, so the discrete iterates increase too. Samples
//! beyond `T_R`, where `e^{λ₀T_R}` is negligible, stay pinned to the start.
//! The pin fixes the translation; without it every translate is a fixed
//! point and the iteration drifts.

use super::operators::{apply_b_raw, ode_residual, sup_norm, tail_models};
use super::{FrontReport, FrontSolution, Mode, SolveOptions};
use crate::charspec::{chi_roots, real_roots_psi};
use crate::domain::{GridOptions, GridProfile, LeftTail, Params, RightTail};
use crate::error::{Error, Result};
use crate::mapbounds::apriori_bounds;

/// Size of `1 - φ` where the right tail is pinned.
const PIN_AMPLITUDE: f64 = 1e-10;
/// Size of the margin term relative to `e^{λ₀t}` at `T_R`. Across the pinned
/// samples it changes by a fraction of this, so the pin stays consistent
/// with a single front.
const MARGIN: f64 = 0.01;
/// Decay rate of the margin term, as a fraction of `λ₀`.
const MARGIN_RATE: f64 = 0.9;
/// Round-off allowance when checking that iterates increase; the kernel of
/// `B` carries a factor `1/(μ-λ)` that scales it up near `c = 2`.
const MONOTONE_SLACK: f64 = 1e-11;

pub fn monotone_front(p: &Params, tol: f64, max_iter: usize) -> Result<FrontSolution> {
    monotone_front_with(
        p,
        &SolveOptions {
            tol,
            max_iter,
            ..SolveOptions::default()
        },
    )
}

pub fn monotone_front_with(p: &Params, opts: &SolveOptions) -> Result<FrontSolution> {
    p.require_admissible()?;
    let (c, h) = (p.c, p.h());
    let (lambda, mu) = chi_roots(c)?;
    let slack = MONOTONE_SLACK / (mu - lambda).clamp(1e-3, 1.0);
    let lambda0 = real_roots_psi(p)?
        .iter()
        .find(|r| r.re < 0.0)
        .map(|r| r.re)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "no negative real characteristic zero at (c, τ) = ({c}, {}): c exceeds c*(τ)",
                p.tau
            ))
        })?;
    let t_pin = PIN_AMPLITUDE.ln() / lambda0;
    let mut gopts = opts.grid;
    if gopts.window.is_none() {
        let left = (-gopts.tail_span / lambda).max(-gopts.clip);
        gopts = GridOptions {
            window: Some((left, t_pin + h + 1.0)),
            ..gopts
        };
    }
    let grid = gopts.build(p, lambda, None)?;
    let sigma = MARGIN_RATE * lambda0;
    let t_end = grid.t(grid.n - 1);
    let a = MARGIN * ((lambda0 - sigma) * t_pin).exp();
    let lower: Vec<f64> = (0..grid.n)
        .map(|i| {
            let t = grid.t(i);
            (-(lambda0 * t).exp_m1() + a * (sigma * t).exp()).clamp(0.0, 1.0)
        })
        .collect();
    let i_pin = (0..grid.n).find(|&i| grid.t(i) >= t_pin).unwrap_or(grid.n);
    let left_tail = LeftTail {
        coefficient: 1.0,
        rate: lambda,
        poly_degree: if c > 2.0 { 0 } else { 1 },
    };
    let right_tail = RightTail::ExponentialApproach {
        limit: 1.0,
        amplitude: 1.0 - a * ((sigma - lambda0) * t_end).exp(),
        rate: lambda0,
    };
    let mut prof = GridProfile {
        t0: grid.t0,
        dt: grid.dt,
        values: lower.clone(),
        left_tail,
        right_tail,
        params: *p,
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let tails = tail_models(&prof);
        let mut next = apply_b_raw(&prof.values, &tails, c, h, grid.dt)?;
        next[i_pin..].copy_from_slice(&lower[i_pin..]);
        next.iter_mut().for_each(|v| *v = v.max(0.0));
        let (mut inc, mut dec) = (0.0f64, 0.0f64);
        for (a, b) in next.iter().zip(&prof.values) {
            inc = inc.max((a - b).abs());
            dec = dec.min(a - b);
        }
        if dec < -slack {
            return Err(Error::InvariantViolation(format!(
                "iterate {iterations} decreased by {:e}",
                -dec
            )));
        }
        prof.values = next;
        history.push(inc);
        if inc <= opts.tol {
            converged = true;
            break;
        }
    }
    let residual = *history.last().unwrap_or(&f64::INFINITY);
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            history,
        });
    }
    // the pinned samples only anchor the translation; continue the front
    // past them with its own exponential approach
    let keep = i_pin.min(grid.n).max(2);
    prof.values.truncate(keep);
    let (tk, vk) = (prof.t(keep - 1), prof.values[keep - 1]);
    prof.right_tail = RightTail::ExponentialApproach {
        limit: 1.0,
        amplitude: (1.0 - vk) * (-lambda0 * tk).exp(),
        rate: lambda0,
    };
    if let Some(i) = prof.values.windows(2).position(|w| w[1] < w[0] - 1e-12) {
        return Err(Error::InvariantViolation(format!(
            "front is not monotone near t = {}",
            prof.t(i)
        )));
    }
    let (profile, shift) = prof.normalized()?;
    let ode = sup_norm(&ode_residual(&profile));
    Ok(FrontSolution {
        profile,
        report: FrontReport {
            mode: Mode::Monotone,
            residual,
            ode_residual: ode,
            iterations,
            history,
            normalized_shift: shift,
            beta_used: None,
            clamp_active: false,
            bounds_box: if h > 0.0 { apriori_bounds(p).ok() } else { None },
            tail_reports: Vec::new(),
        },
    })
}
