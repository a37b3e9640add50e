//! Integral operators whose fixed points are wave profiles, and the
//! residuals of the profile equation.

use serde::{Deserialize, Serialize};

use super::quadrature::{
    left_conv, right_conv, right_conv_gap, right_conv_linear, ExpPoly, Rule, Samples, Term,
};
use crate::charspec::{chi, chi_roots, quadratic_roots_b};
use crate::domain::{lag_steps, GridProfile, LeftTail, Params, RightTail};
use crate::error::{Error, Result};
use crate::mapbounds::apriori_bounds;
use crate::numeric::{first_derivative_at, second_derivative_at};

/// Constants of the clamped operator `A_m` and of its cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub c: f64,
    pub h: f64,
    pub b: f64,
    pub beta: f64,
    pub z1: f64,
    pub z2: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Zero at `c = 2`, where the lower solution degenerates to 0.
    pub eps: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub eps_prime: f64,
}

impl OperatorConfig {
    /// Defaults: `β = max(2 U_e, e^{ch}) + 1`, `b = 2β + 3`,
    /// `ε = min(λ, μ - λ)/2`, `M` large enough for both lower-solution
    /// constraints and for `φ₋ ≤ φ₊`.
    pub fn new(p: &Params) -> Result<Self> {
        p.require_admissible()?;
        let u_e = apriori_bounds(p)?.u_e;
        let beta = (2.0 * u_e).max((p.c * p.h()).exp()) + 1.0;
        Self::with_beta(p, beta)
    }

    pub fn with_beta(p: &Params, beta: f64) -> Result<Self> {
        p.require_admissible()?;
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::Domain(format!("clamp level must exceed 1, got {beta}")));
        }
        let b = 2.0 * beta + 3.0;
        let (z1, z2) = quadratic_roots_b(p.c, b)?;
        let (lambda, mu) = chi_roots(p.c)?;
        let mut cfg = Self {
            c: p.c,
            h: p.h(),
            b,
            beta,
            z1,
            z2,
            lambda,
            mu,
            eps: 0.0,
            m: 0.0,
            eps_prime: z2 - z1,
        };
        if mu > lambda {
            let eps = 0.5 * lambda.min(mu - lambda);
            let k = UpperSolution::new(&cfg).k;
            let m = 2f64
                .max(2.0 / -chi(lambda + eps, p.c))
                .max(2.0 * k.max(1.0).powf(eps / (mu - lambda)));
            cfg.eps = eps;
            cfg.m = m;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let (lo, hi) = (self.z1, self.z2);
        if !(self.b > 2.0 * self.beta + 2.0 && lo < 0.0 && hi > 0.0) {
            return Err(Error::InvariantViolation(format!(
                "need b > 2β + 2 (b = {}, β = {})",
                self.b, self.beta
            )));
        }
        if self.mu > self.lambda {
            let ok = self.eps > 0.0
                && self.eps < self.lambda
                && self.lambda + self.eps < self.mu
                && -chi(self.lambda + self.eps, self.c) > 1.0 / self.m;
            if !ok {
                return Err(Error::InvariantViolation(format!(
                    "lower-solution constants ε = {}, M = {} are inconsistent",
                    self.eps, self.m
                )));
            }
        }
        Ok(())
    }
}

/// Clamped nonlinearity: `u` on `[0, β]`, `max(0, 2β - u)` beyond.
pub fn g_clamp(u: f64, beta: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("g_clamp needs u >= 0, got {u}")));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("g_clamp needs beta > 0, got {beta}")));
    }
    Ok(g_raw(u, beta))
}

#[inline]
pub(crate) fn g_raw(u: f64, beta: f64) -> f64 {
    if u <= beta {
        u
    } else {
        (2.0 * beta - u).max(0.0)
    }
}

#[inline]
pub(crate) fn g_slope(u: f64, beta: f64) -> f64 {
    if u <= beta {
        1.0
    } else if u <= 2.0 * beta {
        -1.0
    } else {
        0.0
    }
}

/// `r(u, v) = b u + g(u)(1 - v)`.
pub fn r_nonlinearity(u: f64, v: f64, cfg: &OperatorConfig) -> Result<f64> {
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::Domain(format!("r needs non-negative arguments, got ({u}, {v})")));
    }
    Ok(cfg.b * u + g_raw(u, cfg.beta) * (1.0 - v))
}

/// Tail models of a profile: `left` in `v = t - t0` for `v <= 0`, `right`
/// in `v = t - t_end` for `v >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct TailModels {
    pub left: ExpPoly,
    pub right: ExpPoly,
}

pub(crate) fn tail_models(phi: &GridProfile) -> TailModels {
    let t0 = phi.t0;
    let lt = phi.left_tail;
    let phi0 = phi.values[0];
    let deg = if t0 != 0.0 { lt.poly_degree as usize } else { 0 };
    // (1 + v/t0)^deg
    let mut poly = vec![0.0; deg + 1];
    for (k, a) in poly.iter_mut().enumerate() {
        let binom: f64 = (0..k).map(|i| (deg - i) as f64 / (i + 1) as f64).product();
        *a = phi0 * binom / t0.powi(k as i32);
    }
    let left = ExpPoly {
        terms: vec![Term {
            rate: lt.rate,
            poly,
        }],
    };
    let t_end = phi.t_max();
    let last = phi.values[phi.len() - 1];
    let right = match phi.right_tail {
        RightTail::ConstantLimit { limit, .. } => ExpPoly::constant(limit),
        RightTail::ExponentialGrowth { rate } => ExpPoly::exp(last, rate),
        RightTail::ExponentialApproach {
            limit,
            amplitude,
            rate,
        } => ExpPoly::constant(limit).add(&ExpPoly::exp(-amplitude * (rate * t_end).exp(), rate)),
    };
    TailModels { left, right }
}

/// `φ(t_i - h)` on the grid, using the left tail model before `t0`.
pub(crate) fn lagged(values: &[f64], left: &ExpPoly, nh: usize, dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n.min(nh) {
        out.push(left.eval((i as f64 - nh as f64) * dt));
    }
    if n > nh {
        out.extend_from_slice(&values[..n - nh]);
    }
    out
}

/// Integrand `F(s) = φ(s) φ(s - h)` on the grid with its tail models.
pub(crate) struct ProductIntegrand {
    pub f: Vec<f64>,
    pub left: ExpPoly,
    pub right: ExpPoly,
}

impl ProductIntegrand {
    pub fn new(values: &[f64], tails: &TailModels, h: f64, dt: f64) -> Self {
        let nh = lag_steps(h, dt);
        let lag = lagged(values, &tails.left, nh, dt);
        let f = values.iter().zip(&lag).map(|(a, b)| a * b).collect();
        Self {
            f,
            left: tails.left.mul(&tails.left.translate(-h)),
            right: tails.right.mul(&tails.right.translate(-h)),
        }
    }

    pub fn samples(&self, dt: f64) -> Samples<'_> {
        Samples {
            f: &self.f,
            ghost_left: self.left.eval(-dt),
            ghost_right: self.right.eval(dt),
        }
    }
}

fn check_right_rates(model: &ExpPoly, kappa: f64) -> Result<()> {
    if let Some(t) = model.terms.iter().find(|t| t.rate >= kappa) {
        return Err(Error::Tail(format!(
            "right tail grows at rate {} which the kernel e^(-{kappa} s) does not absorb",
            t.rate
        )));
    }
    Ok(())
}

/// Core of `B` on raw samples. Uses the linear rule, whose non-negative
/// weights make the discrete operator order-preserving like `B` itself.
pub(crate) fn apply_b_raw(values: &[f64], tails: &TailModels, c: f64, h: f64, dt: f64) -> Result<Vec<f64>> {
    let (lambda, mu) = chi_roots(c)?;
    let pi = ProductIntegrand::new(values, tails, h, dt);
    check_right_rates(&pi.right, lambda)?;
    let s = pi.samples(dt);
    if mu > lambda {
        let tail = (pi.right.right_integral(lambda, 0) - pi.right.right_integral(mu, 0)) / (mu - lambda);
        let tail_mu = pi.right.right_integral(mu, 0);
        Ok(right_conv_gap(s, lambda, mu, dt, tail, tail_mu, Rule::Linear))
    } else {
        let r = right_conv(s, 1.0, dt, pi.right.right_integral(1.0, 0), Rule::Linear);
        Ok(right_conv_linear(s, 1.0, dt, &r, pi.right.right_integral(1.0, 1), Rule::Linear))
    }
}

fn with_values(phi: &GridProfile, values: Vec<f64>) -> GridProfile {
    GridProfile {
        t0: phi.t0,
        dt: phi.dt,
        values,
        left_tail: phi.left_tail,
        right_tail: phi.right_tail,
        params: phi.params,
    }
}

/// Quadrature undershoot of a positivity-preserving operator is clipped.
fn non_negative(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    v
}

/// `(Bφ)(t) = 1/(μ-λ) ∫_t^∞ (e^{λ(t-s)} - e^{μ(t-s)}) φ(s)φ(s-h) ds`, `c > 2`.
#[allow(non_snake_case)]
pub fn apply_B(phi: &GridProfile) -> Result<GridProfile> {
    let p = phi.params;
    p.require_admissible()?;
    if p.c <= 2.0 {
        return Err(Error::WrongOperator("B needs c > 2; use B₂ at c = 2".into()));
    }
    let tails = tail_models(phi);
    let v = apply_b_raw(&phi.values, &tails, p.c, p.h(), phi.dt)?;
    Ok(with_values(phi, non_negative(v)))
}

/// `(B₂φ)(t) = ∫_t^∞ (s-t) e^{t-s} φ(s)φ(s-h) ds`, `c = 2`.
#[allow(non_snake_case)]
pub fn apply_B2(phi: &GridProfile) -> Result<GridProfile> {
    let p = phi.params;
    if p.c != 2.0 {
        return Err(Error::WrongOperator(format!("B₂ needs c = 2, got {}", p.c)));
    }
    let tails = tail_models(phi);
    let v = apply_b_raw(&phi.values, &tails, 2.0, p.h(), phi.dt)?;
    Ok(with_values(phi, non_negative(v)))
}

/// Samples of `r(φ, φ_h)` and its tails, assuming `φ ≤ β` on the tails.
struct RIntegrand {
    r: Vec<f64>,
    left: ExpPoly,
    right: ExpPoly,
}

impl RIntegrand {
    fn new(values: &[f64], lag: &[f64], tails: &TailModels, cfg: &OperatorConfig) -> Self {
        let r = values
            .iter()
            .zip(lag)
            .map(|(&u, &v)| cfg.b * u + g_raw(u.max(0.0), cfg.beta) * (1.0 - v))
            .collect();
        let side = |m: &ExpPoly| m.scale(cfg.b + 1.0).add(&m.mul(&m.translate(-cfg.h)).scale(-1.0));
        Self {
            r,
            left: side(&tails.left),
            right: side(&tails.right),
        }
    }
}

/// Kernel of `A_m` applied to integrand samples with given tail integrals
/// and ghosts: `(1/ε') (∫_{-∞}^t e^{z1(t-s)} F + ∫_t^∞ e^{z2(t-s)} F)`.
pub(crate) fn am_kernel(s: Samples, cfg: &OperatorConfig, dt: f64, left_tail: f64, right_tail: f64) -> Vec<f64> {
    let l = left_conv(s, -cfg.z1, dt, left_tail, Rule::Cubic);
    let r = right_conv(s, cfg.z2, dt, right_tail, Rule::Cubic);
    let inv = 1.0 / cfg.eps_prime;
    l.iter().zip(&r).map(|(a, b)| (a + b) * inv).collect()
}

pub(crate) fn apply_am_raw(values: &[f64], tails: &TailModels, cfg: &OperatorConfig, dt: f64) -> Result<Vec<f64>> {
    let nh = lag_steps(cfg.h, dt);
    let lag = lagged(values, &tails.left, nh, dt);
    let ri = RIntegrand::new(values, &lag, tails, cfg);
    check_right_rates(&ri.right, cfg.z2)?;
    let s = Samples {
        f: &ri.r,
        ghost_left: ri.left.eval(-dt),
        ghost_right: ri.right.eval(dt),
    };
    Ok(am_kernel(
        s,
        cfg,
        dt,
        ri.left.left_integral(-cfg.z1),
        ri.right.right_integral(cfg.z2, 0),
    ))
}

/// Directional derivative of `A_m` at `φ` along `v` (tails frozen).
pub(crate) fn am_jvp(values: &[f64], lag: &[f64], v: &[f64], cfg: &OperatorConfig, dt: f64) -> Vec<f64> {
    let nh = lag_steps(cfg.h, dt);
    let n = values.len();
    let mut rv = Vec::with_capacity(n);
    for i in 0..n {
        let u = values[i].max(0.0);
        let vh = if i >= nh { v[i - nh] } else { 0.0 };
        rv.push((cfg.b + g_slope(u, cfg.beta) * (1.0 - lag[i])) * v[i] - g_raw(u, cfg.beta) * vh);
    }
    let s = Samples {
        f: &rv,
        ghost_left: 0.0,
        ghost_right: 0.0,
    };
    am_kernel(s, cfg, dt, 0.0, 0.0)
}

/// Pointwise cone check `φ₋ ≤ φ ≤ φ₊` with a relative slack.
pub fn check_cone(phi: &GridProfile, cfg: &OperatorConfig, slack: f64) -> Result<()> {
    let up = UpperSolution::new(cfg);
    for (i, &v) in phi.values.iter().enumerate() {
        let t = phi.t(i);
        let (lo, hi) = (lower_value(cfg, t), up.value(t));
        if v < lo - slack * hi || v > hi * (1.0 + slack) {
            return Err(Error::Cone(format!(
                "sample {i} (t = {t}) = {v:e} outside [{lo:e}, {hi:e}]"
            )));
        }
    }
    Ok(())
}

/// `A_m φ`. With `cone` set, the input is first checked against the cone.
#[allow(non_snake_case)]
pub fn apply_Am(phi: &GridProfile, cfg: &OperatorConfig, cone: bool) -> Result<GridProfile> {
    if phi.values.iter().any(|&v| v > 2.0 * cfg.beta) {
        return Err(Error::Domain("A_m input exceeds 2β".into()));
    }
    if cone {
        check_cone(phi, cfg, 1e-12)?;
    }
    let tails = tail_models(phi);
    let v = apply_am_raw(&phi.values, &tails, cfg, phi.dt)?;
    Ok(with_values(phi, non_negative(v)))
}

/// `φ₋(t) = max(0, e^{λt}(1 - M e^{εt}))`; identically 0 at `c = 2`.
pub fn lower_value(cfg: &OperatorConfig, t: f64) -> f64 {
    if cfg.eps == 0.0 {
        return 0.0;
    }
    ((cfg.lambda * t).exp() * (1.0 - cfg.m * (cfg.eps * t).exp())).max(0.0)
}

/// Samples the lower solution. Needs `c > 2` and a grid reaching past the
/// zero `T_c = -ln(M)/ε`.
pub fn lower_solution(cfg: &OperatorConfig, grid: &crate::domain::Grid, params: Params) -> Result<GridProfile> {
    if cfg.mu <= cfg.lambda {
        return Err(Error::Precondition("the lower solution needs c > 2".into()));
    }
    let tc = -cfg.m.ln() / cfg.eps;
    if grid.t_max() < tc || grid.t0 > tc {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not cover T_c = {tc}",
            grid.t0,
            grid.t_max()
        )));
    }
    let values = (0..grid.n).map(|i| lower_value(cfg, grid.t(i))).collect();
    GridProfile::new(
        grid.t0,
        grid.dt,
        values,
        LeftTail::exponential(cfg.lambda),
        RightTail::ConstantLimit { limit: 0.0, tol: 0.0 },
        params,
    )
}

/// Monotone front of `φ'' - cφ' + g(φ) = 0` joining 0 to `2β`, in closed
/// form: the linear branch below `β`, `2β - β e^{ν(t - T)}` above, where
/// `ν < 0` solves `ν² - cν - 1 = 0` and `φ(T) = β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperSolution {
    pub c: f64,
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    /// Second coefficient: `e^{λt} - K e^{μt}` (`c > 2`) or `(K - t) e^t` (`c = 2`).
    pub k: f64,
    /// Crossing time of the level `β`.
    pub t_beta: f64,
    pub nu: f64,
}

impl UpperSolution {
    pub fn new(cfg: &OperatorConfig) -> Self {
        let (c, lambda, mu, beta) = (cfg.c, cfg.lambda, cfg.mu, cfg.beta);
        let nu = 0.5 * (c - (c * c + 4.0).sqrt());
        let a = -nu;
        let (k, t_beta) = if mu > lambda {
            let e = beta * (mu - a) / (mu - lambda);
            let t = e.ln() / lambda;
            (((e - beta) * (-mu * t).exp()).max(0.0), t)
        } else {
            let t = (beta * (1.0 - a)).ln();
            (t + 1.0 / (1.0 - a), t)
        };
        Self {
            c,
            lambda,
            mu,
            beta,
            k,
            t_beta,
            nu,
        }
    }

    /// `(φ, φ', φ'')` at `t`.
    pub fn jet(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.t_beta {
            if self.mu > self.lambda {
                let (el, em) = ((self.lambda * t).exp(), self.k * (self.mu * t).exp());
                (
                    el - em,
                    self.lambda * el - self.mu * em,
                    self.lambda * self.lambda * el - self.mu * self.mu * em,
                )
            } else {
                let e = t.exp();
                let a = self.k - t;
                (a * e, (a - 1.0) * e, (a - 2.0) * e)
            }
        } else {
            let e = self.beta * (self.nu * (t - self.t_beta)).exp();
            (2.0 * self.beta - e, -self.nu * e, -self.nu * self.nu * e)
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t).0
    }

    /// `φ'' - cφ' + g(φ)` from the exact derivatives.
    pub fn residual(&self, t: f64) -> f64 {
        let (v, d1, d2) = self.jet(t);
        d2 - self.c * d1 + g_raw(v, self.beta)
    }
}

/// Samples the upper solution `φ₊` on the grid.
pub fn upper_solution(cfg: &OperatorConfig, grid: &crate::domain::Grid, params: Params) -> Result<GridProfile> {
    let up = UpperSolution::new(cfg);
    if !(up.t_beta.is_finite() && up.k.is_finite()) {
        return Err(Error::Construction("upper solution matching failed".into()));
    }
    let values = (0..grid.n).map(|i| up.value(grid.t(i)).max(0.0)).collect();
    let left_tail = LeftTail {
        coefficient: 1.0,
        rate: cfg.lambda,
        poly_degree: if cfg.mu > cfg.lambda { 0 } else { 1 },
    };
    GridProfile::new(
        grid.t0,
        grid.dt,
        values,
        left_tail,
        RightTail::ExponentialApproach {
            limit: 2.0 * cfg.beta,
            amplitude: cfg.beta * (-up.nu * up.t_beta).exp(),
            rate: up.nu,
        },
        params,
    )
}

/// Pointwise residual `φ'' - cφ' + φ(1 - φ(t-h))` by fourth-order central
/// differences; the two samples at each end are reported as 0.
pub fn ode_residual(phi: &GridProfile) -> Vec<f64> {
    let n = phi.len();
    let mut out = vec![0.0; n];
    if n < 5 {
        return out;
    }
    let p = phi.params;
    let tails = tail_models(phi);
    let lag = lagged(&phi.values, &tails.left, lag_steps(p.h(), phi.dt), phi.dt);
    let v = &phi.values;
    for i in 2..n - 2 {
        let d1 = first_derivative_at(v, i, phi.dt);
        let d2 = second_derivative_at(v, i, phi.dt);
        out[i] = d2 - p.c * d1 + v[i] * (1.0 - lag[i]);
    }
    out
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual of the log form `x'' - cx' - (x')² + (e^{-x(t-h)} - 1) = 0`
/// with `x = -ln φ`, at samples where `φ > floor`; other entries are 0.
pub fn log_residual(phi: &GridProfile, floor: f64) -> Result<Vec<f64>> {
    let n = phi.len();
    let p = phi.params;
    let nh = lag_steps(p.h(), phi.dt);
    let mut out = vec![0.0; n];
    if n < 5 {
        return Ok(out);
    }
    let x: Vec<f64> = phi
        .values
        .iter()
        .map(|&v| if v > 0.0 { -v.ln() } else { f64::INFINITY })
        .collect();
    let tails = tail_models(phi);
    for i in 2..n - 2 {
        if !(phi.values[i - 2..=i + 2].iter().all(|&v| v > floor)) {
            continue;
        }
        let lagv = if i >= nh {
            phi.values[i - nh]
        } else {
            tails.left.eval((i as f64 - nh as f64) * phi.dt)
        };
        if !(lagv > 0.0) {
            continue;
        }
        let d1 = first_derivative_at(&x, i, phi.dt);
        let d2 = second_derivative_at(&x, i, phi.dt);
        out[i] = d2 - p.c * d1 - d1 * d1 + (lagv - 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridOptions;

    fn cfg(c: f64, tau: f64) -> (Params, OperatorConfig) {
        let p = Params::new(c, tau).unwrap();
        (p, OperatorConfig::new(&p).unwrap())
    }

    #[test]
    fn clamp_examples() {
        let beta = 3.0;
        assert_eq!(g_clamp(1.5, beta).unwrap(), 1.5);
        assert_eq!(g_clamp(6.0, beta).unwrap(), 0.0);
        assert_eq!(g_clamp(4.5, beta).unwrap(), 1.5);
        assert_eq!(g_clamp(9.0, beta).unwrap(), 0.0);
        assert!(g_clamp(-1e-9, beta).is_err());
    }

    #[test]
    fn r_examples() {
        let (_, c) = cfg(3.0, 1.0);
        assert_eq!(r_nonlinearity(0.0, 7.0, &c).unwrap(), 0.0);
        assert!((r_nonlinearity(1.0, 1.0, &c).unwrap() - c.b).abs() < 1e-12);
        for u in [1.01 * c.beta, 1.5 * c.beta, 2.0 * c.beta] {
            for v in [0.0, c.beta, 2.0 * c.beta] {
                assert!(r_nonlinearity(u, v, &c).unwrap() > c.beta);
            }
        }
        assert!(r_nonlinearity(1.0, -1.0, &c).is_err());
    }

    #[test]
    fn config_invariants() {
        for (c, tau) in [(2.0, 0.5), (2.01, 1.0), (3.0, 1.0), (6.0, 0.05), (2.5, 0.0)] {
            let (p, k) = cfg(c, tau);
            assert!(k.b > 2.0 * k.beta + 2.0);
            assert!(k.beta > apriori_bounds(&p).unwrap().u_e);
            assert!((k.z1 * k.z2 + k.b).abs() < 1e-9 * k.b);
            if c > 2.0 {
                assert!(k.eps > 0.0 && k.lambda + k.eps < k.mu);
                assert!(-chi(k.lambda + k.eps, c) > 1.0 / k.m);
            }
        }
        assert!(OperatorConfig::new(&Params::new(1.9, 0.5).unwrap()).is_err());
    }

    #[test]
    fn upper_solution_solves_clamped_kpp() {
        for (c, tau) in [(2.0, 0.5), (2.3, 0.2), (3.0, 1.0)] {
            let (_, k) = cfg(c, tau);
            let up = UpperSolution::new(&k);
            assert!(up.k >= 0.0);
            assert!((up.value(up.t_beta) - k.beta).abs() < 1e-9 * k.beta);
            let mut t = up.t_beta - 60.0;
            while t < up.t_beta + 40.0 {
                assert!(up.residual(t).abs() <= 1e-8 * (1.0 + up.value(t)), "c = {c}, t = {t}");
                assert!(up.jet(t).1 > 0.0);
                t += 0.37;
            }
            // C¹ matching at the level β
            let (a, b) = (up.jet(up.t_beta - 1e-9), up.jet(up.t_beta + 1e-9));
            assert!((a.1 - b.1).abs() < 1e-6 * a.1.abs().max(1.0));
        }
    }

    #[test]
    fn lower_below_upper() {
        let (p, k) = cfg(3.0, 1.0);
        let g = GridOptions::default().build(&p, k.lambda, None).unwrap();
        let lo = lower_solution(&k, &g, p).unwrap();
        let up = upper_solution(&k, &g, p).unwrap();
        for i in 0..g.n {
            assert!(lo.values[i] <= up.values[i]);
        }
        let tc = -k.m.ln() / k.eps;
        assert!(lower_value(&k, tc + 1e-9) == 0.0 && lower_value(&k, tc - 1.0) > 0.0);
    }
}
