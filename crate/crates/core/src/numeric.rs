//! Small numerical kernels shared across modules: scalar root bracketing,
//! finite-difference derivatives on uniform grids, local interpolation and
//! least-squares line fits.

use crate::error::{Error, Result};

/// Bisection for a sign change of `f` on `[a, b]`.
///
/// Runs until the bracket is narrower than `xtol` (absolute) or cannot be
/// split further in floating point.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton iteration safeguarded by a bracket; falls back to bisection
/// whenever the Newton step leaves the bracket.
pub fn newton_bracketed<F>(mut fdf: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    let sa = fa.signum();
    let mut x = 0.5 * (a + b);
    for _ in 0..500 {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == sa {
            a = x;
        } else {
            b = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= a.min(b) || next >= a.max(b) {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= xtol * (1.0 + x.abs()) || (b - a).abs() <= xtol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Fourth-order first derivative on a uniform grid; one-sided
/// fourth-order stencils at the two points nearest each end.
pub fn derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    if n < 5 {
        for i in 0..n {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            if r > l {
                d[i] = (values[r] - values[l]) / ((r - l) as f64 * dt);
            }
        }
        return d;
    }
    let v = values;
    for i in 2..n - 2 {
        d[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dt);
    }
    let fwd = |i: usize| {
        (-25.0 * v[i] + 48.0 * v[i + 1] - 36.0 * v[i + 2] + 16.0 * v[i + 3] - 3.0 * v[i + 4])
            / (12.0 * dt)
    };
    let bwd = |i: usize| {
        (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3] + 3.0 * v[i - 4])
            / (12.0 * dt)
    };
    d[0] = fwd(0);
    d[1] = fwd(1);
    d[n - 1] = bwd(n - 1);
    d[n - 2] = bwd(n - 2);
    d
}

/// Fourth-order central second derivative at interior index `i` (needs
/// `2 <= i < n - 2`).
#[inline]
pub fn second_derivative_at(v: &[f64], i: usize, dt: f64) -> f64 {
    (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * dt * dt)
}

/// Fourth-order central first derivative at interior index `i`.
#[inline]
pub fn first_derivative_at(v: &[f64], i: usize, dt: f64) -> f64 {
    (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dt)
}

/// Cubic Lagrange interpolation at fractional index `x` (0-based).
/// Returns `None` outside `[0, n-1]`.
pub fn cubic_at(values: &[f64], x: f64) -> Option<f64> {
    let n = values.len();
    if n == 0 || !x.is_finite() || x < 0.0 || x > (n - 1) as f64 {
        return None;
    }
    if n < 4 {
        let i = (x.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Some(values[0]);
        }
        let f = x - i as f64;
        return Some(values[i] * (1.0 - f) + values[i + 1] * f);
    }
    let i = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = x - i as f64;
    let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    Some(l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3)
}

/// Locate the fractional index in `[i, i+1]` where the cubic interpolant
/// of `values - level` vanishes, given a sign change between `i` and `i+1`.
pub fn refine_crossing(values: &[f64], i: usize, level: f64) -> f64 {
    let g = |x: f64| cubic_at(values, x).unwrap_or(level) - level;
    bisect(g, i as f64, (i + 1) as f64, 1e-13).unwrap_or_else(|_| {
        let (a, b) = (values[i] - level, values[i + 1] - level);
        i as f64 + a / (a - b)
    })
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Fit(format!("need at least two paired samples, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Least squares for `y ≈ a + b x + c z`; returns `(a, b, c)`.
pub fn fit_plane(x: &[f64], z: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || z.len() != n || y.len() != n {
        return Err(Error::Fit("need at least three samples".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let mz = z.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut szz, mut sxz, mut sxy, mut szy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dz, dy) = (x[i] - mx, z[i] - mz, y[i] - my);
        sxx += dx * dx;
        szz += dz * dz;
        sxz += dx * dz;
        sxy += dx * dy;
        szy += dz * dy;
    }
    let det = sxx * szz - sxz * sxz;
    if det.abs() <= 1e-14 * sxx * szz {
        return Err(Error::Fit("collinear regressors".into()));
    }
    let b = (sxy * szz - szy * sxz) / det;
    let c = (szy * sxx - sxy * sxz) / det;
    Ok((my - b * mx - c * mz, b, c))
}

/// `(1 - e^{-x}) / x`, accurate for small `x`.
#[inline]
pub fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`; finite values stay numbers.
pub mod serde_nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("unknown float sentinel {t}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::Bracket(_))
        ));
    }

    #[test]
    fn newton_bracketed_matches_bisect() {
        let r = newton_bracketed(|x| (x.cos() - x, -x.sin() - 1.0), 0.0, 1.0, 1e-15).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
    }

    #[test]
    fn derivative_is_fourth_order() {
        let dt = 0.01;
        let v: Vec<f64> = (0..200).map(|i| (i as f64 * dt).sin()).collect();
        let d = derivative(&v, dt);
        for (i, di) in d.iter().enumerate() {
            assert!((di - (i as f64 * dt).cos()).abs() < 1e-8, "i = {i}");
        }
        let s = second_derivative_at(&v, 50, dt);
        assert!((s + (0.5f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64).powi(3) - 2.0 * i as f64).collect();
        let x = 4.37;
        assert!((cubic_at(&v, x).unwrap() - (x.powi(3) - 2.0 * x)).abs() < 1e-10);
        assert!(cubic_at(&v, 9.5).is_none());
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn plane_fit_exact() {
        let x: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let z: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 0.5 - 2.0 * a + 1.5 * b).collect();
        let (a, b, c) = fit_plane(&x, &z, &y).unwrap();
        assert!((a - 0.5).abs() < 1e-10 && (b + 2.0).abs() < 1e-10 && (c - 1.5).abs() < 1e-10);
    }
}
