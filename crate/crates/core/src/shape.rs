//! Shape of wave profiles: monotone, slowly oscillating about 1, or
//! unbounded, together with the geometric predicates every semi-wavefront
//! has to satisfy.

use serde::{Deserialize, Serialize};

use crate::domain::{lag_steps, GridProfile, Params, RightTail};
use crate::error::{Error, Result};
use crate::mapbounds::{apriori_bounds, f_bound, w_map};
use crate::numeric::{cubic_at, derivative, fit_line, refine_crossing};

/// `|φ - 1|` (and `|φ'|`) at or below this count as zero.
pub const DEAD_BAND: f64 = 1e-9;
/// Oscillation amplitude below which the sign-change trace stops.
const RESOLVED: f64 = 1e3 * DEAD_BAND;
/// Absolute slack for the pointwise inequalities.
const GRID_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Monotone,
    SlowOscillating,
    UnboundedTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub t: f64,
    pub kind: ExtremumKind,
    pub phi: f64,
    /// `x(T) = -ln φ(T)`
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub predicate: String,
    pub detail: String,
}

impl Violation {
    fn new(predicate: &str, detail: String) -> Self {
        Self {
            predicate: predicate.to_string(),
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub kind: Kind,
    pub crossings: Vec<f64>,
    pub extrema: Vec<Extremum>,
    /// First time of `sc_trace`, i.e. `T₀`. The trace runs on the grid up to
    /// the last critical point with `|φ - 1| ≥ 1e-6`.
    pub sc_trace_start: Option<f64>,
    pub sc_trace: Vec<u32>,
    pub violations: Vec<Violation>,
    /// Set when the window ends before the shape can be decided.
    pub inconclusive: Option<String>,
}

/// Number of sign changes of a sampled function on `[-h, 0] ∪ {1}`, the
/// last sample being the value at `1`. Zeros are skipped.
pub fn sign_changes(v: &[f64]) -> Result<usize> {
    let mut last = 0.0f64;
    let mut count = 0;
    let mut any = false;
    for &x in v {
        if x == 0.0 {
            continue;
        }
        if any && x.signum() != last {
            count += 1;
        }
        last = x.signum();
        any = true;
    }
    if !any {
        return Err(Error::UndefinedSc);
    }
    Ok(count)
}

fn band(x: f64) -> f64 {
    if x.abs() <= DEAD_BAND {
        0.0
    } else {
        x
    }
}

/// Samples of `φ̄_t`: `φ(t+s) - 1` on the grid points of `[t-h, t]`, then `φ'(t)`.
fn segment(values: &[f64], dphi: &[f64], i: usize, nh: usize) -> Vec<f64> {
    let mut seg: Vec<f64> = values[i - nh..=i].iter().map(|v| band(v - 1.0)).collect();
    seg.push(band(dphi[i]));
    seg
}

/// `sc(φ̄_t)` at the grid point nearest `t`.
pub fn sc_profile(phi: &GridProfile, t: f64) -> Result<usize> {
    let nh = lag_steps(phi.params.h(), phi.dt);
    let i = ((t - phi.t0) / phi.dt).round();
    if !(i >= nh as f64) || i >= phi.len() as f64 {
        return Err(Error::Window(format!(
            "t = {t} needs history back to t - h inside [{}, {}]",
            phi.t0,
            phi.t_max()
        )));
    }
    let dphi = derivative(&phi.values, phi.dt);
    sign_changes(&segment(&phi.values, &dphi, i as usize, nh))
}

/// Level-1 crossings outside the dead-band, refined by cubic interpolation.
fn crossings(phi: &GridProfile) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for (i, &v) in phi.values.iter().enumerate() {
        let s = band(v - 1.0);
        if s == 0.0 {
            continue;
        }
        if let Some((j, ps)) = prev {
            if ps.signum() != s.signum() {
                let x = if j + 1 == i {
                    refine_crossing(&phi.values, j, 1.0)
                } else {
                    // crossed inside the dead-band: take its midpoint
                    0.5 * (j + i) as f64
                };
                out.push(phi.t0 + x * phi.dt);
            }
        }
        prev = Some((i, s));
    }
    out
}

/// Critical points with `|φ - 1|` above the dead-band. Clusters closer
/// than `2 dt` are merged: an even cluster is an inflection artefact and
/// disappears, an odd one is replaced by its middle member.
fn extrema(phi: &GridProfile, dphi: &[f64]) -> Vec<Extremum> {
    let mut raw = Vec::new();
    for i in 0..dphi.len().saturating_sub(1) {
        let (a, b) = (dphi[i], dphi[i + 1]);
        let kind = if a > 0.0 && b <= 0.0 {
            ExtremumKind::Max
        } else if a < 0.0 && b >= 0.0 {
            ExtremumKind::Min
        } else {
            continue;
        };
        let x = if b == 0.0 { (i + 1) as f64 } else { refine_crossing(dphi, i, 0.0) };
        let value = cubic_at(&phi.values, x).unwrap_or(phi.values[i]);
        if (value - 1.0).abs() <= DEAD_BAND || value <= 0.0 {
            continue;
        }
        raw.push(Extremum {
            t: phi.t0 + x * phi.dt,
            kind,
            phi: value,
            v: -value.ln(),
        });
    }
    let mut out = Vec::new();
    let mut k = 0;
    while k < raw.len() {
        let mut end = k + 1;
        while end < raw.len() && raw[end].t - raw[end - 1].t < 2.0 * phi.dt {
            end += 1;
        }
        let size = end - k;
        if size % 2 == 1 {
            out.push(raw[k + size / 2]);
        }
        k = end;
    }
    out
}

fn growing_tail(phi: &GridProfile, dphi: &[f64], p: &Params) -> bool {
    if matches!(phi.right_tail, RightTail::ExponentialGrowth { .. }) {
        return true;
    }
    let n = phi.len();
    let tail = n - (n / 10).max(2);
    let big = apriori_bounds(p).map(|b| b.u_e).unwrap_or(2.0).max(2.0);
    phi.values[n - 1] > big && dphi[tail..].iter().all(|&d| d > 0.0)
}

pub fn classify(phi: &GridProfile, p: &Params) -> Result<ClassificationReport> {
    if let Some(i) = phi.values.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Domain(format!(
            "sample {i} is negative or not finite; only non-negative profiles are classified"
        )));
    }
    let dphi = derivative(&phi.values, phi.dt);
    let q = crossings(phi);
    let ext = extrema(phi, &dphi);
    let mut violations = leading_edge_checks(phi, p)?;
    let mut inconclusive = None;

    if growing_tail(phi, &dphi, p) {
        check_unbounded(phi, &dphi, p, &mut violations);
        return Ok(ClassificationReport {
            kind: Kind::UnboundedTail,
            crossings: q,
            extrema: ext,
            sc_trace_start: None,
            sc_trace: Vec::new(),
            violations,
            inconclusive,
        });
    }
    if ext.is_empty() && q.len() <= 1 {
        if q.len() == 1 {
            inconclusive = Some("profile crosses 1 but the window ends before its first critical point".into());
        }
        return Ok(ClassificationReport {
            kind: Kind::Monotone,
            crossings: q,
            extrema: ext,
            sc_trace_start: None,
            sc_trace: Vec::new(),
            violations,
            inconclusive,
        });
    }

    let nh = lag_steps(p.h(), phi.dt);
    let t_first = ext[0].t;
    let i0 = (((t_first - phi.t0) / phi.dt).ceil() as usize).max(nh);
    // near the dead-band the segment is mostly zeroed and sc loses meaning
    let t_last = ext
        .iter()
        .rev()
        .find(|e| (e.phi - 1.0).abs() >= RESOLVED)
        .unwrap_or(&ext[0])
        .t;
    let i1 = (((t_last - phi.t0) / phi.dt).floor() as usize + 1).min(phi.len());
    let mut trace = Vec::new();
    for i in i0..i1 {
        match sign_changes(&segment(&phi.values, &dphi, i, nh)) {
            Ok(s) => trace.push(s as u32),
            // settled inside the dead-band
            Err(Error::UndefinedSc) => break,
            Err(e) => return Err(e),
        }
    }
    check_oscillation(&q, &ext, &trace, p, &mut violations)?;
    Ok(ClassificationReport {
        kind: Kind::SlowOscillating,
        crossings: q,
        extrema: ext,
        sc_trace_start: (i0 < phi.len()).then(|| phi.t(i0)),
        sc_trace: trace,
        violations,
        inconclusive,
    })
}

fn check_oscillation(
    q: &[f64],
    ext: &[Extremum],
    trace: &[u32],
    p: &Params,
    violations: &mut Vec<Violation>,
) -> Result<()> {
    let (c, h) = (p.c, p.h());
    if let Some((k, s)) = trace.iter().enumerate().find(|(_, s)| !(1..=2).contains(*s)) {
        violations.push(Violation::new(
            "sc_in_1_2",
            format!("sc = {s} at trace index {k}"),
        ));
    }
    for j in 0..q.len().saturating_sub(1) {
        let n = ext.iter().filter(|e| e.t > q[j] && e.t < q[j + 1]).count();
        if n != 1 {
            violations.push(Violation::new(
                "one_critical_point_between_crossings",
                format!("{n} critical points in ({}, {})", q[j], q[j + 1]),
            ));
        }
    }
    for j in 0..q.len().saturating_sub(2) {
        if q[j + 2] - q[j] <= h {
            violations.push(Violation::new(
                "crossing_spacing",
                format!("Q[{}] - Q[{j}] = {} <= h = {h}", j + 2, q[j + 2] - q[j]),
            ));
        }
    }
    for w in ext.windows(2) {
        if w[0].kind == w[1].kind {
            violations.push(Violation::new(
                "extrema_alternate",
                format!("two {:?} in a row at t = {} and {}", w[0].kind, w[0].t, w[1].t),
            ));
        }
    }
    // V_{2j+1} <= h f(w(V_{2j})), V_{2j} >= h f(w(V_{2j-1}))
    let first = q.first().copied().unwrap_or(f64::NEG_INFINITY);
    let v: Vec<f64> = ext.iter().filter(|e| e.t > first).map(|e| e.v).collect();
    for k in 1..v.len() {
        let bound = h * f_bound(w_map(v[k - 1]), c)?;
        let tol = GRID_TOL + 1e-6 * bound.abs();
        let ok = if k % 2 == 1 { v[k] <= bound + tol } else { v[k] >= bound - tol };
        if !ok {
            violations.push(Violation::new(
                "extrema_recursion",
                format!("V[{k}] = {} against h f(w(V[{}])) = {bound}", v[k], k - 1),
            ));
        }
    }
    Ok(())
}

fn check_unbounded(phi: &GridProfile, dphi: &[f64], p: &Params, violations: &mut Vec<Violation>) {
    let n = phi.len();
    let start = n - (n / 10).max(2);
    if dphi[start..].iter().any(|&d| d <= 0.0) {
        violations.push(Violation::new(
            "unbounded_increasing",
            "φ' is not positive over the last tenth of the window".into(),
        ));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = (start..n)
        .filter(|&i| phi.values[i] > 0.0)
        .map(|i| (phi.t(i), phi.values[i].ln()))
        .unzip();
    match fit_line(&t, &y) {
        Ok(fit) if fit.slope >= p.c * (1.0 - 1e-2) => {}
        Ok(fit) => violations.push(Violation::new(
            "unbounded_growth_rate",
            format!("ln φ grows at rate {} < c = {}", fit.slope, p.c),
        )),
        Err(e) => violations.push(Violation::new("unbounded_growth_rate", e.to_string())),
    }
}

/// Predicates on the leading edge `(-∞, Q₀ + h]`. Empty when `φ` never
/// crosses 1.
pub fn leading_edge_checks(phi: &GridProfile, p: &Params) -> Result<Vec<Violation>> {
    let q = crossings(phi);
    let Some(&q0) = q.first() else {
        return Ok(Vec::new());
    };
    let (c, h) = (p.c, p.h());
    let dphi = derivative(&phi.values, phi.dt);
    let mut out = Vec::new();
    let idx = |t: f64| (t - phi.t0) / phi.dt;

    let mut worst_slope = (f64::INFINITY, 0.0);
    let mut worst_below = (f64::INFINITY, 0.0);
    for i in 0..phi.len() {
        let t = phi.t(i);
        if t >= q0 {
            break;
        }
        if dphi[i] < worst_slope.0 {
            worst_slope = (dphi[i], t);
        }
        let gap = phi.values[i] - (c * (t - q0)).exp();
        if gap < worst_below.0 {
            worst_below = (gap, t);
        }
    }
    // φ' may underflow to 0 in the far tail, so only negative slopes count
    if worst_slope.0 < -GRID_TOL {
        out.push(Violation::new(
            "increasing_before_q0",
            format!("φ'({}) = {}", worst_slope.1, worst_slope.0),
        ));
    }
    if worst_below.0 < -GRID_TOL {
        out.push(Violation::new(
            "above_exponential_before_q0",
            format!("φ - e^{{c(t-Q₀)}} = {} at t = {}", worst_below.0, worst_below.1),
        ));
    }
    let slope_q0 = cubic_at(&dphi, idx(q0)).unwrap_or(f64::NAN);
    if !(slope_q0 < c) {
        out.push(Violation::new(
            "slope_at_q0_below_c",
            format!("φ'(Q₀) = {slope_q0} with c = {c}"),
        ));
    }
    let mut worst_above = (f64::NEG_INFINITY, 0.0);
    let mut max_edge = f64::NEG_INFINITY;
    for i in 0..phi.len() {
        let t = phi.t(i);
        if t <= q0 {
            continue;
        }
        if t > q0 + h {
            break;
        }
        let gap = phi.values[i] - (c * (t - q0)).exp();
        if gap > worst_above.0 {
            worst_above = (gap, t);
        }
        max_edge = max_edge.max(phi.values[i]);
    }
    if worst_above.0 > GRID_TOL {
        out.push(Violation::new(
            "below_exponential_after_q0",
            format!("φ - e^{{c(t-Q₀)}} = {} at t = {}", worst_above.0, worst_above.1),
        ));
    }
    if max_edge > (c * h).exp() + GRID_TOL {
        out.push(Violation::new(
            "edge_maximum_below_exp_ch",
            format!("max over [Q₀, Q₀+h] = {max_edge} > e^{{ch}} = {}", (c * h).exp()),
        ));
    }
    if h > 0.0 {
        let bounds = apriori_bounds(p)?;
        let first_min = extrema(phi, &dphi)
            .into_iter()
            .find(|e| e.t > q0 && e.kind == ExtremumKind::Min);
        if let Some(m) = first_min {
            if m.phi < bounds.l_e - GRID_TOL {
                out.push(Violation::new(
                    "first_minimum_above_lower_bound",
                    format!("φ(T₁) = {} < L_e = {}", m.phi, bounds.l_e),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LeftTail;

    fn brute_sc(v: &[f64]) -> usize {
        // longest alternating subsequence of non-zero signs
        let signs: Vec<f64> = v.iter().filter(|x| **x != 0.0).map(|x| x.signum()).collect();
        let mut best = 0;
        for start in 0..signs.len() {
            let mut cur = signs[start];
            let mut k = 0;
            for &s in &signs[start..] {
                if s != cur {
                    k += 1;
                    cur = s;
                }
            }
            best = best.max(k);
        }
        best
    }

    fn sampled(f: impl Fn(f64) -> f64, h: f64, n: usize, at_one: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..=n).map(|k| f(-h + h * k as f64 / n as f64)).collect();
        v.push(at_one);
        v
    }

    #[test]
    fn sc_of_non_negative_is_zero() {
        assert_eq!(sign_changes(&[0.0, 1.0, 2.0, 0.0, 3.0]).unwrap(), 0);
    }

    #[test]
    fn sc_of_zero_is_undefined() {
        assert!(matches!(sign_changes(&[0.0; 5]), Err(Error::UndefinedSc)));
    }

    #[test]
    fn sc_matches_brute_force() {
        let h = 1.3;
        let pi = std::f64::consts::PI;
        let a = sampled(|s| (pi * s / h).sin(), h, 400, 1.0);
        assert_eq!(sign_changes(&a).unwrap(), brute_sc(&a));
        assert_eq!(sign_changes(&a).unwrap(), 1);
        let b = sampled(|s| (3.0 * pi * s / h).sin(), h, 600, -1.0);
        assert_eq!(sign_changes(&b).unwrap(), brute_sc(&b));
        assert_eq!(sign_changes(&b).unwrap(), 2);
    }

    fn profile(f: impl Fn(f64) -> f64, p: Params, t0: f64, t1: f64, dt: f64) -> GridProfile {
        let n = ((t1 - t0) / dt).round() as usize + 1;
        GridProfile {
            t0,
            dt,
            values: (0..n).map(|i| f(t0 + i as f64 * dt)).collect(),
            left_tail: LeftTail::exponential(1.0),
            right_tail: RightTail::ConstantLimit { limit: 1.0, tol: 1.0 },
            params: p,
        }
    }

    #[test]
    fn logistic_is_monotone() {
        let p = Params::new(2.5, 0.3).unwrap();
        let phi = profile(|t| 1.0 / (1.0 + (-t).exp()), p, -30.0, 30.0, 0.01);
        let r = classify(&phi, &p).unwrap();
        assert_eq!(r.kind, Kind::Monotone);
        assert!(r.crossings.is_empty() && r.extrema.is_empty());
        assert!(r.violations.is_empty());
    }

    #[test]
    fn fast_oscillation_is_flagged() {
        // 1 + e^{-t/5} sin(5πt/h) oscillates far faster than h
        let p = Params::new(2.0, 1.0).unwrap();
        let h = p.h();
        let pi = std::f64::consts::PI;
        let phi = profile(
            |t| if t < 0.0 { (2.0 * t).exp() } else { 1.0 + 0.5 * (-t / 5.0).exp() * (5.0 * pi * t / h).sin() },
            p,
            -10.0,
            20.0,
            0.002,
        );
        let r = classify(&phi, &p).unwrap();
        assert_eq!(r.kind, Kind::SlowOscillating);
        assert!(r.sc_trace.iter().any(|&s| s >= 3));
        let names: Vec<&str> = r.violations.iter().map(|v| v.predicate.as_str()).collect();
        assert!(names.contains(&"sc_in_1_2"), "{names:?}");
        assert!(names.contains(&"crossing_spacing"), "{names:?}");
    }

    #[test]
    fn steep_crossing_is_flagged() {
        // φ'(Q₀) = 3c violates φ'(Q₀) < c
        let p = Params::new(2.0, 0.5).unwrap();
        let k = 3.0 * p.c;
        let phi = profile(|t| (k * t).exp().min(1.0 + k * t), p, -10.0, 10.0, 0.001);
        let v = leading_edge_checks(&phi, &p).unwrap();
        assert!(v.iter().any(|x| x.predicate == "slope_at_q0_below_c"), "{v:?}");
    }

    #[test]
    fn negative_profiles_are_rejected() {
        let p = Params::new(2.0, 0.5).unwrap();
        let phi = profile(|t| t.sin(), p, -3.0, 3.0, 0.01);
        assert!(classify(&phi, &p).is_err());
    }

    #[test]
    fn sc_profile_needs_history() {
        let p = Params::new(2.0, 0.5).unwrap();
        let phi = profile(|t| 1.0 / (1.0 + (-t).exp()), p, -3.0, 3.0, 0.01);
        assert!(matches!(sc_profile(&phi, -2.9), Err(Error::Window(_))));
        assert!(sc_profile(&phi, 0.0).unwrap() <= 1);
    }
}
