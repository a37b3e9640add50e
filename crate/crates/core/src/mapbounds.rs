//! One-dimensional map behind the a priori bounds on oscillating
//! profiles: `x ↦ h f(w(x))` with `f(A) = 2A/(c + √(c² + 4A))` and
//! `w(x) = e^{-x} - 1`.

use serde::{Deserialize, Serialize};

use crate::domain::Params;
use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Root of `y² + cy - A = 0` nearest to zero.
///
/// Evaluated in the rationalised form, which has no cancellation for small
/// `|A|` and is finite at the branch point `c² + 4A = 0`.
pub fn f_bound(a: f64, c: f64) -> Result<f64> {
    let disc = c * c + 4.0 * a;
    if disc < 0.0 {
        return Err(Error::Domain(format!("c² + 4A = {disc} < 0")));
    }
    let den = c + disc.sqrt();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * a / den)
}

/// `f'(A) = 1/√(c² + 4A)`.
pub fn f_bound_prime(a: f64, c: f64) -> f64 {
    1.0 / (c * c + 4.0 * a).sqrt()
}

/// `w(x) = e^{-x} - 1`.
#[inline]
pub fn w_map(x: f64) -> f64 {
    (-x).exp_m1()
}

/// Schwarzian derivative of `f ∘ w` in closed form.
pub fn schwarzian_fg(x: f64, c: f64) -> f64 {
    let d = x.exp() * (c * c - 4.0) + 4.0;
    6.0 / (d * d) - 0.5
}

/// One step of `x ↦ h f(w(x))`. Defined for all real `x` when `c ≥ 2`.
#[inline]
pub fn map_step(x: f64, c: f64, h: f64) -> f64 {
    let a = w_map(x);
    let disc = (c * c + 4.0 * a).max(0.0);
    h * 2.0 * a / (c + disc.sqrt())
}

/// A priori box for oscillating semi-wavefronts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "L_e")]
    pub l_e: f64,
    #[serde(rename = "U_e")]
    pub u_e: f64,
    #[serde(rename = "B_star")]
    pub b_star: f64,
}

impl MapBounds {
    /// Strict containment `L_e < v < U_e`.
    pub fn contains(&self, v: f64) -> bool {
        v > self.l_e && v < self.u_e
    }
}

pub fn apriori_bounds(p: &Params) -> Result<MapBounds> {
    p.require_admissible()?;
    let (c, h) = (p.c, p.h());
    let b_star = -2.0 * h / (c + (c * c - 4.0).sqrt());
    let l = (-c * h).min(b_star);
    let u = h * f_bound(w_map(l), c)?;
    Ok(MapBounds {
        l,
        u,
        l_e: (-u).exp(),
        u_e: (-l).exp(),
        b_star,
    })
}

/// Orbit of the map: all `2k + 1` points and the even-step subsequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<f64>,
    pub even: Vec<f64>,
}

pub fn map_iterate(m0: f64, p: &Params, k: usize) -> Result<Orbit> {
    p.require_admissible()?;
    let (c, h) = (p.c, p.h());
    let mut points = Vec::with_capacity(2 * k + 1);
    let mut x = m0;
    points.push(x);
    for _ in 0..2 * k {
        x = map_step(x, c, h);
        points.push(x);
    }
    let even = points.iter().step_by(2).copied().collect();
    Ok(Orbit { points, even })
}

/// Second iterate minus identity.
fn second_iterate_gap(x: f64, c: f64, h: f64) -> f64 {
    map_step(map_step(x, c, h), c, h) - x
}

const CYCLE_SEARCH_LO: f64 = 1e-8;

/// Positive point of a nontrivial 2-cycle of `h f∘w`, found by bisection of
/// `F²(x) - x` on `[1e-8, U]`. Returns `(x, |F²(x) - x|)`.
pub fn find_two_cycle(p: &Params) -> Result<Option<(f64, f64)>> {
    let b = apriori_bounds(p)?;
    let (c, h) = (p.c, p.h());
    let lo = CYCLE_SEARCH_LO;
    let hi = b.u.max(2.0 * lo);
    let (glo, ghi) = (second_iterate_gap(lo, c, h), second_iterate_gap(hi, c, h));
    if glo.signum() == ghi.signum() || glo == 0.0 || ghi == 0.0 {
        return Ok(None);
    }
    let x = bisect(|x| second_iterate_gap(x, c, h), lo, hi, 0.0)?;
    Ok(Some((x, second_iterate_gap(x, c, h).abs())))
}

fn has_two_cycle(c: f64, tau: f64) -> Result<bool> {
    Ok(find_two_cycle(&Params::new(c, tau)?)?.is_some())
}

/// Onset in `τ` of a nontrivial 2-cycle of `h f∘w`, located by bisection to
/// within `1e-6`. The returned value is the upper end of the final
/// bracket (the first delay observed with a cycle).
pub fn stability_threshold_probe(c: f64, tau_lo: f64, tau_hi: f64) -> Result<f64> {
    if !(tau_lo < tau_hi) || !(c >= 2.0) {
        return Err(Error::Domain(format!(
            "need tau_lo < tau_hi and c >= 2 (got {tau_lo}, {tau_hi}, c = {c})"
        )));
    }
    let (mut lo, mut hi) = (tau_lo, tau_hi);
    let (a, b) = (has_two_cycle(c, lo)?, has_two_cycle(c, hi)?);
    if a == b {
        return Err(Error::Bracket(format!(
            "2-cycle presence does not change on [{tau_lo}, {tau_hi}]"
        )));
    }
    let cycle_at_hi = b;
    while hi - lo > 2e-7 {
        let m = 0.5 * (lo + hi);
        if has_two_cycle(c, m)? == cycle_at_hi {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(if cycle_at_hi { hi } else { lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn f_examples() {
        assert_eq!(f_bound(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(f_bound(-1.0, 2.0).unwrap(), -1.0);
        assert!(f_bound(-2.0, 2.0).is_err());
        for (a, c) in [(0.3, 2.0), (-0.7, 2.5), (5.0, 7.0), (1e-9, 3.0)] {
            let y = f_bound(a, c).unwrap();
            assert!((y * y + c * y - a).abs() <= 1e-13 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn w_examples() {
        assert_eq!(w_map(0.0), 0.0);
        assert!((w_map(-(2f64.ln())) - 1.0).abs() < 1e-15);
        assert!((w_map(50.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn schwarzian_at_minimal_speed() {
        assert_eq!(schwarzian_fg(0.0, 2.0), -0.125);
        for x in [-5.0, -1.0, 0.3, 4.0] {
            assert_eq!(schwarzian_fg(x, 2.0), -0.125);
        }
    }

    #[test]
    fn bounds_at_c2_h1() {
        let b = apriori_bounds(&Params::new(2.0, 0.5).unwrap()).unwrap();
        assert!((b.l + 2.0).abs() < 1e-15);
        assert!((b.u - (E - 1.0)).abs() < 1e-14);
        assert!((b.u_e - E * E).abs() < 1e-13);
        assert!((b.l_e - (-(E - 1.0)).exp()).abs() < 1e-14);
    }

    #[test]
    fn bounds_collapse_for_small_lag() {
        let b = apriori_bounds(&Params::new(3.0, 1e-9).unwrap()).unwrap();
        assert!(b.l.abs() < 1e-8 && b.u.abs() < 1e-8);
        assert!((b.l_e - 1.0).abs() < 1e-8 && (b.u_e - 1.0).abs() < 1e-8);
        assert!(apriori_bounds(&Params::new(1.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn zero_is_fixed() {
        let o = map_iterate(0.0, &Params::new(2.0, 1.3).unwrap(), 10).unwrap();
        assert!(o.points.iter().all(|&x| x == 0.0));
        assert_eq!(o.even.len(), 11);
    }

    #[test]
    fn two_cycle_for_large_delay() {
        let p = Params::new(2.0, 1.6).unwrap();
        let (x, res) = find_two_cycle(&p).unwrap().unwrap();
        assert!(x > 1e-3 && res <= 1e-10);
        assert!(find_two_cycle(&Params::new(2.0, 0.9).unwrap()).unwrap().is_none());
    }

    #[test]
    fn probe_brackets_unit_multiplier() {
        let t = stability_threshold_probe(2.0, 0.5, 1.6).unwrap();
        assert!(t >= 1.0 && t < 1.0 + 1e-6, "{t}");
        assert!(stability_threshold_probe(2.0, 0.2, 0.6).is_err());
    }
}
