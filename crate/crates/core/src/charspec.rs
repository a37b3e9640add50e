//! Characteristic functions of the linearisations at 0 and at 1, their
//! roots, and the two critical-speed curves.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::Params;
use crate::error::{Error, Result};
use crate::numeric::{bisect, newton_bracketed};

/// Delay at which `c*` reaches the minimal speed 2.
pub const TAU_1: f64 = 0.560771160;

/// Delay at which `c⋆` reaches 2: `arccos(2 - √5) / (2 √(√5 - 2))`.
pub fn tau_2() -> f64 {
    let s5 = 5f64.sqrt();
    (2.0 - s5).acos() / (2.0 * (s5 - 2.0).sqrt())
}

/// Two real negative roots closer than this (in value of ψ at the local
/// maximum) are reported as one double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-8;

/// `ψ(z) = z² - cz - exp(-zh)`.
pub fn eval_psi(z: Complex64, p: &Params) -> Complex64 {
    z * z - p.c * z - (-z * p.h()).exp()
}

/// `ψ'(z) = 2z - c + h exp(-zh)`.
pub fn eval_psi_prime(z: Complex64, p: &Params) -> Complex64 {
    let h = p.h();
    2.0 * z - p.c + h * (-z * h).exp()
}

#[inline]
fn psi_real(x: f64, c: f64, h: f64) -> f64 {
    x * x - c * x - (-x * h).exp()
}

#[inline]
fn psi_real_prime(x: f64, c: f64, h: f64) -> f64 {
    2.0 * x - c + h * (-x * h).exp()
}

/// `χ(z) = z² - cz + 1`.
#[inline]
pub fn chi(z: f64, c: f64) -> f64 {
    z * z - c * z + 1.0
}

/// Roots `λ ≤ μ` of `z² - cz + 1`.
pub fn chi_roots(c: f64) -> Result<(f64, f64)> {
    if !(c >= 2.0) {
        return Err(Error::ComplexRoots { c });
    }
    let mu = 0.5 * (c + ((c - 2.0) * (c + 2.0)).sqrt());
    Ok((1.0 / mu, mu))
}

/// Roots `z1 < 0 < z2` of `z² - cz - b`.
pub fn quadratic_roots_b(c: f64, b: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) {
        return Err(Error::InvalidShift { b });
    }
    let z2 = 0.5 * (c + (c * c + 4.0 * b).sqrt());
    Ok((-b / z2, z2))
}

/// A zero of ψ in the closed upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharRoot {
    pub re: f64,
    pub im: f64,
    /// `-1` for the positive real root, `j >= 0` for `λ_j`. `None` when
    /// `τ = 0` (no strip structure).
    pub strip_index: Option<i32>,
    pub multiplicity: u8,
    pub residual: f64,
}

impl CharRoot {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn real(x: f64, p: &Params, strip: Option<i32>, multiplicity: u8) -> Self {
        Self {
            re: x,
            im: 0.0,
            strip_index: strip,
            multiplicity,
            residual: psi_real(x, p.c, p.h()).abs(),
        }
    }
}

/// Roots located strip by strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub params: Params,
    pub roots: Vec<CharRoot>,
}

/// Critical speed: finite, infinite, or a finite threshold below the
/// minimal speed 2 (no admissible speed in the corresponding regime).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalSpeed {
    Infinite,
    Finite(f64),
    BelowMinimal(f64),
}

impl CriticalSpeed {
    pub fn is_infinite(&self) -> bool {
        matches!(self, CriticalSpeed::Infinite)
    }

    /// The threshold value; `+∞` for the infinite variant.
    pub fn value(&self) -> f64 {
        match *self {
            CriticalSpeed::Infinite => f64::INFINITY,
            CriticalSpeed::Finite(v) | CriticalSpeed::BelowMinimal(v) => v,
        }
    }

    /// Text used in CSV/JSON output.
    pub fn label(&self) -> String {
        match *self {
            CriticalSpeed::Infinite => "inf".to_string(),
            CriticalSpeed::Finite(v) => format!("{v:.16e}"),
            CriticalSpeed::BelowMinimal(_) => "below2".to_string(),
        }
    }

    fn classify(v: f64) -> Self {
        if v >= 2.0 {
            CriticalSpeed::Finite(v)
        } else {
            CriticalSpeed::BelowMinimal(v)
        }
    }
}

impl Serialize for CriticalSpeed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            CriticalSpeed::Infinite => s.serialize_str("inf"),
            CriticalSpeed::Finite(v) => s.serialize_f64(v),
            CriticalSpeed::BelowMinimal(_) => s.serialize_str("below2"),
        }
    }
}

impl<'de> Deserialize<'de> for CriticalSpeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(CriticalSpeed::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(CriticalSpeed::Infinite),
            Raw::Text(t) if t == "below2" => Ok(CriticalSpeed::BelowMinimal(f64::NAN)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown speed sentinel {t}"))),
        }
    }
}

/// Unique positive zero `λ₋₁` of ψ.
pub fn positive_root(c: f64, h: f64) -> f64 {
    // ψ(0) = -1 and ψ(c + 2) = 2(c + 2) - exp(-(c+2)h) > 0.
    newton_bracketed(
        |x| (psi_real(x, c, h), psi_real_prime(x, c, h)),
        0.0,
        c + 2.0,
        1e-16,
    )
    .expect("ψ changes sign on [0, c + 2]")
}

/// Local maximum of ψ on the negative axis, if any: `(x*, ψ(x*))`.
fn negative_local_max(c: f64, h: f64) -> Option<(f64, f64)> {
    if h <= 0.0 {
        return None;
    }
    // ψ' is convex with minimum at ln(h²/2)/h; ψ' → +∞ as x → -∞.
    let x_min = (h * h / 2.0).ln() / h;
    let right = x_min.min(0.0);
    if psi_real_prime(right, c, h) >= 0.0 {
        return None;
    }
    let mut left = right - 1.0;
    while psi_real_prime(left, c, h) <= 0.0 {
        left = right + 2.0 * (left - right);
        if left < -1e12 {
            return None;
        }
    }
    let xs = bisect(|x| psi_real_prime(x, c, h), left, right, 1e-15).ok()?;
    let xs = polish_critical(xs, c, h);
    Some((xs, psi_real(xs, c, h)))
}

fn polish_critical(mut x: f64, c: f64, h: f64) -> f64 {
    for _ in 0..3 {
        let d2 = 2.0 - h * h * (-x * h).exp();
        if d2 == 0.0 {
            break;
        }
        let step = psi_real_prime(x, c, h) / d2;
        if !step.is_finite() || step.abs() > 1e-6 * (1.0 + x.abs()) {
            break;
        }
        x -= step;
    }
    x
}

/// Real zeros of ψ: always `λ₋₁ > 0`; additionally the negative zeros
/// `λ₁ ≤ λ₀ < 0` when they exist (a double zero is reported once with
/// multiplicity 2). For `τ = 0` the quadratic's two roots are returned
/// without strip indices.
pub fn real_roots_psi(p: &Params) -> Result<Vec<CharRoot>> {
    if !(p.c > 0.0) {
        return Err(Error::Domain(format!("real_roots_psi needs c > 0, got {}", p.c)));
    }
    let (c, h) = (p.c, p.h());
    if h == 0.0 {
        let d = (c * c + 4.0).sqrt();
        let pos = 0.5 * (c + d);
        let neg = -1.0 / pos;
        return Ok(vec![
            CharRoot::real(pos, p, None, 1),
            CharRoot::real(neg, p, None, 1),
        ]);
    }
    let mut out = vec![CharRoot::real(positive_root(c, h), p, Some(-1), 1)];
    let Some((xs, m)) = negative_local_max(c, h) else {
        return Ok(out);
    };
    if m.abs() <= DOUBLE_ROOT_TOL {
        out.push(CharRoot::real(xs, p, Some(0), 2));
        return Ok(out);
    }
    if m < 0.0 {
        return Ok(out);
    }
    let f = |x: f64| (psi_real(x, c, h), psi_real_prime(x, c, h));
    let l0 = newton_bracketed(f, xs, 0.0, 1e-16)?;
    let mut left = xs - 1.0;
    while psi_real(left, c, h) > 0.0 {
        left = xs + 2.0 * (left - xs);
    }
    let l1 = newton_bracketed(f, left, xs, 1e-16)?;
    out.push(CharRoot::real(l0, p, Some(0), 1));
    out.push(CharRoot::real(l1, p, Some(1), 1));
    Ok(out)
}

/// Height of the local maximum of ψ on the negative axis, `-1` if none.
fn double_root_gap(c: f64, tau: f64) -> f64 {
    negative_local_max(c, c * tau).map_or(-1.0, |(_, m)| m)
}

/// The double-root point `(c, x)` solving `ψ = ψ' = 0` with `x < 0`, for
/// `τ > 1/e`. Returns `None` for `τ ≤ 1/e`.
pub fn double_root_point(tau: f64) -> Result<Option<(f64, f64)>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("delay must be >= 0, got {tau}")));
    }
    if tau <= 1.0 / E {
        return Ok(None);
    }
    let mut lo = 1.0;
    while double_root_gap(lo, tau) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::Bracket("no double-root regime at small c".into()));
        }
    }
    let mut hi = 2.0 * lo;
    while double_root_gap(hi, tau) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket("double-root curve escapes to infinity".into()));
        }
    }
    let c0 = bisect(|c| double_root_gap(c, tau), lo, hi, 1e-14 * hi)?;
    let x0 = negative_local_max(c0, c0 * tau)
        .map(|(x, _)| x)
        .unwrap_or_else(|| (c0 * c0 * tau * tau / 2.0).ln() / (c0 * tau));
    Ok(Some(newton_double_root(c0, x0, tau)))
}

/// Newton polish of `(ψ, ψ_z) = 0` in the unknowns `(x, c)`.
fn newton_double_root(mut c: f64, mut x: f64, tau: f64) -> (f64, f64) {
    for _ in 0..20 {
        let e = (-x * c * tau).exp();
        let f1 = x * x - c * x - e;
        let f2 = 2.0 * x - c + c * tau * e;
        let a11 = f2;
        let a12 = -x + x * tau * e;
        let a21 = 2.0 - c * c * tau * tau * e;
        let a22 = -1.0 + tau * e - x * c * tau * tau * e;
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = (f1 * a22 - a12 * f2) / det;
        let dc = (a11 * f2 - a21 * f1) / det;
        if !(dx.is_finite() && dc.is_finite()) || dx.abs() > 1e-3 * (1.0 + x.abs()) {
            break;
        }
        x -= dx;
        c -= dc;
        if dx.abs() < 1e-16 * (1.0 + x.abs()) && dc.abs() < 1e-16 * c {
            break;
        }
    }
    (c, x)
}

/// Residual `max(|ψ|, |ψ'|)` of the double-root system at `(c, x)`.
pub fn double_root_residual(c: f64, x: f64, tau: f64) -> f64 {
    let h = c * tau;
    psi_real(x, c, h).abs().max(psi_real_prime(x, c, h).abs())
}

/// `c*(τ)`: the speed at which the two negative zeros of ψ merge.
pub fn c_star(tau: f64) -> Result<CriticalSpeed> {
    Ok(match double_root_point(tau)? {
        None => CriticalSpeed::Infinite,
        Some((c, _)) => CriticalSpeed::classify(c),
    })
}

/// `w²(c) = (√(c⁴+4) - c²)/2`, evaluated without cancellation.
pub fn omega_sq(c: f64) -> f64 {
    let c2 = c * c;
    2.0 / ((c2 * c2 + 4.0).sqrt() + c2)
}

/// Frequency of the imaginary-axis crossing at speed `c`.
pub fn omega(c: f64) -> f64 {
    omega_sq(c).sqrt()
}

/// Delay at which the leading complex root crosses the imaginary axis for
/// speed `c`: `arccos(-w²)/(c w)`. Decreases from `+∞` to `π/2`.
pub fn tau_of_crossing(c: f64) -> f64 {
    let w2 = omega_sq(c);
    (0.5 * PI + w2.asin()) / (c * w2.sqrt())
}

/// `c⋆(τ)`: inverse of [`tau_of_crossing`].
pub fn c_starstar(tau: f64) -> Result<CriticalSpeed> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("delay must be >= 0, got {tau}")));
    }
    if tau <= 0.5 * PI {
        return Ok(CriticalSpeed::Infinite);
    }
    let mut hi = 2.0;
    while tau_of_crossing(hi) >= tau {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Bracket("crossing speed escapes to infinity".into()));
        }
    }
    let mut lo = hi * 0.5;
    while tau_of_crossing(lo) <= tau {
        lo *= 0.5;
    }
    let c = bisect(|c| tau_of_crossing(c) - tau, lo, hi, 1e-15 * hi)?;
    Ok(CriticalSpeed::classify(c))
}

/// `Re λ'(c₀)` at an imaginary-axis crossing `λ = iw`.
pub fn transversality(c0: f64, tau: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Precondition(format!("frequency must be positive, got {w}")));
    }
    let arg = c0 * tau * w;
    let e1 = (arg.cos() + w * w).abs();
    let e2 = (arg.sin() - c0 * w).abs();
    if e1 > 1e-8 || e2 > 1e-8 {
        return Err(Error::Precondition(format!(
            "(c, τ, w) = ({c0}, {tau}, {w}) is off the crossing manifold (defects {e1:e}, {e2:e})"
        )));
    }
    let w2 = w * w;
    let a = 1.0 + tau * w2;
    let num = 2.0 * w2 * a;
    let den = c0 * c0 * a * a + w2 * (c0 * c0 * tau - 2.0).powi(2);
    Ok(num / den)
}

/// Largest `R` needed so that `|exp(-zh)| > |z² - cz|` on `Re z = -R` for
/// `0 ≤ Im z ≤ y_top`.
fn left_edge(c: f64, h: f64, y_top: f64) -> f64 {
    let mut r: f64 = 1.0;
    while (r * h) <= (4.0 * ((r + y_top).powi(2) + c * (r + y_top)) + 4.0).ln() {
        r *= 1.5;
    }
    r
}

/// Change of argument of ψ along the segment `a → b`, with adaptive
/// refinement of sub-steps whose argument jump exceeds 0.3 rad.
fn arg_change(p: &Params, a: Complex64, b: Complex64, segments: usize) -> f64 {
    fn piece(p: &Params, a: Complex64, fa: Complex64, b: Complex64, fb: Complex64, depth: u32) -> f64 {
        let d = (fb / fa).arg();
        if d.abs() <= 0.3 || depth >= 40 {
            return d;
        }
        let m = 0.5 * (a + b);
        let fm = eval_psi(m, p);
        piece(p, a, fa, m, fm, depth + 1) + piece(p, m, fm, b, fb, depth + 1)
    }
    let mut total = 0.0;
    let mut za = a;
    let mut fa = eval_psi(a, p);
    for k in 1..=segments {
        let zb = a + (b - a) * (k as f64 / segments as f64);
        let fb = eval_psi(zb, p);
        total += piece(p, za, fa, zb, fb, 0);
        za = zb;
        fa = fb;
    }
    total
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

/// Number of zeros of ψ inside the rectangle (argument principle).
fn count_zeros(p: &Params, r: Rect, segments: usize) -> i64 {
    let c = [
        Complex64::new(r.x0, r.y0),
        Complex64::new(r.x1, r.y0),
        Complex64::new(r.x1, r.y1),
        Complex64::new(r.x0, r.y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        total += arg_change(p, c[k], c[(k + 1) % 4], segments);
    }
    (total / (2.0 * PI)).round() as i64
}

fn newton_complex(p: &Params, mut z: Complex64, rect: Rect) -> Option<Complex64> {
    for _ in 0..200 {
        let f = eval_psi(z, p);
        let df = eval_psi_prime(z, p);
        if df.norm() == 0.0 {
            return None;
        }
        let step = f / df;
        let mut damp = 1.0;
        let fn0 = f.norm();
        let mut next = z - step;
        while eval_psi(next, p).norm() > fn0 && damp > 1e-4 {
            damp *= 0.5;
            next = z - step * damp;
        }
        let moved = (next - z).norm();
        z = next;
        if moved <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let pad = 1e-9 * (1.0 + z.norm());
    let inside = z.re >= rect.x0 - pad && z.re <= rect.x1 + pad && z.im >= rect.y0 - pad && z.im <= rect.y1 + pad;
    inside.then_some(z)
}

/// Locate the single zero inside `rect` by argument-principle bisection
/// followed by damped Newton.
fn isolate(p: &Params, mut rect: Rect, segments: usize) -> Option<Complex64> {
    let tol = 1e-3;
    for _ in 0..200 {
        let w = rect.x1 - rect.x0;
        let hgt = rect.y1 - rect.y0;
        if w.max(hgt) < tol {
            break;
        }
        let (a, b) = if w >= hgt {
            let m = 0.5 * (rect.x0 + rect.x1);
            (Rect { x1: m, ..rect }, Rect { x0: m, ..rect })
        } else {
            let m = 0.5 * (rect.y0 + rect.y1);
            (Rect { y1: m, ..rect }, Rect { y0: m, ..rect })
        };
        let seg = (segments / 8).max(64);
        let ca = count_zeros(p, a, seg);
        if ca >= 1 {
            rect = a;
        } else if count_zeros(p, b, seg) >= 1 {
            rect = b;
        } else {
            // the zero sits on the cut; Newton from the current centre
            break;
        }
    }
    let z0 = Complex64::new(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1));
    newton_complex(p, z0, rect)
}

/// Complex zeros `λ_j`, `j = 0..=j_max`, one per strip
/// `h Im λ_j ∈ (2jπ, (2j+1)π)`. Requires `c > C*(τ)`.
pub fn complex_roots_in_strips(p: &Params, j_max: usize) -> Result<RootSet> {
    let (c, h) = (p.c, p.h());
    if !(c > 0.0 && h > 0.0) {
        return Err(Error::Precondition("complex strips need c > 0 and τ > 0".into()));
    }
    let cs = c_star(p.tau)?;
    if c <= cs.value() {
        return Err(Error::Precondition(format!(
            "c = {c} does not exceed C*(τ) = {}; the leading zeros are real",
            cs.value()
        )));
    }
    let css = c_starstar(p.tau)?;
    let lam_pos = positive_root(c, h);
    let segments = 1024;
    let mut roots: Vec<CharRoot> = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let (y0, y1) = (2.0 * j as f64 * PI / h, (2 * j + 1) as f64 * PI / h);
        let x1 = if j == 0 { lam_pos * (1.0 - 1e-6) } else { lam_pos };
        let x0 = -left_edge(c, h, y1);
        let rect = Rect { x0, x1, y0, y1 };
        let n = count_zeros(p, rect, segments);
        if n != 1 {
            return Err(Error::SearchFailure { strip: j });
        }
        let z = isolate(p, rect, segments).ok_or(Error::SearchFailure { strip: j })?;
        let residual = eval_psi(z, p).norm();
        if residual > 1e-10 {
            return Err(Error::SearchFailure { strip: j });
        }
        let hy = h * z.im;
        if !(hy > 2.0 * j as f64 * PI && hy < (2 * j + 1) as f64 * PI) {
            return Err(Error::SearchFailure { strip: j });
        }
        roots.push(CharRoot {
            re: z.re,
            im: z.im,
            strip_index: Some(j as i32),
            multiplicity: 1,
            residual,
        });
    }
    for w in roots.windows(2) {
        if !(w[1].re < w[0].re) {
            return Err(Error::InvariantViolation(format!(
                "real parts not decreasing across strips: {} then {}",
                w[0].re, w[1].re
            )));
        }
    }
    if c > css.value() {
        for r in &roots {
            if r.re <= 0.0 && r.im.abs() <= 2.0 * PI / h {
                return Err(Error::InvariantViolation(format!(
                    "root {} + {}i with Re ≤ 0 lies below 2π/h beyond c⋆",
                    r.re, r.im
                )));
            }
        }
    }
    Ok(RootSet { params: *p, roots })
}

/// The zero governing the approach to 1: the real `λ₀` when the negative
/// real zeros exist, otherwise the complex `λ₀` of strip 0. `τ = 0` gives
/// the negative root of the quadratic.
pub fn leading_stable_root(p: &Params) -> Result<Complex64> {
    let real = real_roots_psi(p)?;
    if let Some(r) = real.iter().find(|r| r.re < 0.0) {
        return Ok(r.z());
    }
    let set = complex_roots_in_strips(p, 0)?;
    Ok(set.roots[0].z())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, tau: f64) -> Params {
        Params::new(c, tau).unwrap()
    }

    #[test]
    fn psi_at_origin_is_minus_one() {
        let v = eval_psi(Complex64::new(0.0, 0.0), &params(3.7, 0.4));
        assert_eq!(v, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn psi_vanishes_on_quadratic_root() {
        let z = 1.0 + 2f64.sqrt();
        assert!(eval_psi(Complex64::new(z, 0.0), &params(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chi_roots_examples() {
        assert_eq!(chi_roots(2.0).unwrap(), (1.0, 1.0));
        let (l, m) = chi_roots(2.5).unwrap();
        assert!((l - 0.5).abs() < 1e-15 && (m - 2.0).abs() < 1e-15);
        let (l, m) = chi_roots(10.0).unwrap();
        assert!((l * m - 1.0).abs() < 1e-14 && ((l + m) - 10.0).abs() < 1e-14 * 10.0);
        assert!(matches!(chi_roots(1.5), Err(Error::ComplexRoots { .. })));
    }

    #[test]
    fn quadratic_roots_examples() {
        assert_eq!(quadratic_roots_b(0.0, 1.0).unwrap(), (-1.0, 1.0));
        let (a, b) = quadratic_roots_b(3.0, 4.0).unwrap();
        assert!((a + 1.0).abs() < 1e-15 && (b - 4.0).abs() < 1e-15);
        assert!(matches!(quadratic_roots_b(2.0, 0.0), Err(Error::InvalidShift { .. })));
    }

    #[test]
    fn tau_zero_roots() {
        let r = real_roots_psi(&params(2.0, 0.0)).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].re - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((r[1].re - (1.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!(r.iter().all(|x| x.strip_index.is_none()));
    }

    #[test]
    fn two_negative_roots_at_half() {
        let p = params(2.0, 0.5);
        let r = real_roots_psi(&p).unwrap();
        assert_eq!(r.len(), 3);
        // brute-force oracle: count sign changes of ψ on a fine negative grid
        let h = p.h();
        let mut changes = 0;
        let mut prev = psi_real(-60.0, 2.0, h);
        for k in 1..=600_000 {
            let x = -60.0 + k as f64 * 1e-4;
            let v = psi_real(x, 2.0, h);
            if v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
        assert_eq!(changes, 2);
        for x in &r {
            assert!(x.residual <= 1e-10, "{x:?}");
        }
        assert!(r[2].re < r[1].re && r[1].re < 0.0);
    }

    #[test]
    fn double_root_at_tau1() {
        let r = real_roots_psi(&params(2.0, TAU_1)).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].multiplicity, 2);
    }

    #[test]
    fn c_star_thresholds() {
        assert!(c_star(0.3).unwrap().is_infinite());
        assert!(c_star(1.0 / E).unwrap().is_infinite());
        assert!(!c_star(1.0 / E + 1e-3).unwrap().is_infinite());
        let v = c_star(TAU_1).unwrap().value();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
        assert!(matches!(c_star(0.7).unwrap(), CriticalSpeed::BelowMinimal(_)));
        assert!(c_star(-0.1).is_err());
    }

    #[test]
    fn c_star_solves_double_root_system() {
        let (c, x) = double_root_point(0.45).unwrap().unwrap();
        assert!(c > 2.0 && x < 0.0);
        assert!(double_root_residual(c, x, 0.45) <= 1e-10);
    }

    #[test]
    fn c_starstar_thresholds() {
        assert!(c_starstar(1.0).unwrap().is_infinite());
        assert!(c_starstar(0.5 * PI).unwrap().is_infinite());
        assert!(!c_starstar(0.5 * PI + 1e-3).unwrap().is_infinite());
        let v = c_starstar(tau_2()).unwrap().value();
        assert!((v - 2.0).abs() < 1e-4, "{v}");
        let c = c_starstar(1.7).unwrap().value();
        assert!((tau_of_crossing(c) - 1.7).abs() < 1e-10);
        assert!((tau_2() - 1.86173).abs() < 1e-5);
    }

    #[test]
    fn crossing_point_is_on_imaginary_axis() {
        let tau = 1.7;
        let c = c_starstar(tau).unwrap().value();
        let w = omega(c);
        let z = Complex64::new(0.0, w);
        assert!(eval_psi(z, &params(c, tau)).norm() < 1e-12);
    }

    #[test]
    fn transversality_rejects_off_manifold() {
        let c0 = 2.0;
        let tau = tau_2();
        let w = omega(c0);
        assert!(transversality(c0, tau, w).unwrap() > 0.0);
        assert!(matches!(
            transversality(c0, tau + 1e-3, w),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn strips_at_three_one() {
        let p = params(3.0, 1.0);
        let set = complex_roots_in_strips(&p, 3).unwrap();
        assert_eq!(set.roots.len(), 4);
        for (j, r) in set.roots.iter().enumerate() {
            assert!(r.residual <= 1e-10);
            let hy = p.h() * r.im;
            assert!(hy > 2.0 * j as f64 * PI && hy < (2 * j + 1) as f64 * PI);
        }
    }

    #[test]
    fn leading_root_crosses_at_c_starstar() {
        let tau = 1.7;
        let cs = c_starstar(tau).unwrap().value();
        let below = complex_roots_in_strips(&params(cs - 1e-3, tau), 0).unwrap();
        let above = complex_roots_in_strips(&params(cs + 1e-3, tau), 0).unwrap();
        assert!(below.roots[0].re < 0.0);
        assert!(above.roots[0].re > 0.0);
        let at = complex_roots_in_strips(&params(cs, tau), 0).unwrap();
        assert!(at.roots[0].re.abs() < 1e-6);
    }

    #[test]
    fn speed_sentinel_serializes_as_text() {
        assert_eq!(serde_json::to_string(&CriticalSpeed::Infinite).unwrap(), "\"inf\"");
        let back: CriticalSpeed = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, CriticalSpeed::Infinite);
        let v: CriticalSpeed = serde_json::from_str("2.5").unwrap();
        assert_eq!(v, CriticalSpeed::Finite(2.5));
    }
}
