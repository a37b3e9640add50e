//! Parameter pair, sampled profiles and their log transform.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wave speed `c` and delay `tau`. The scaled lag `h = c * tau` is always
/// recomputed from the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub c: f64,
    pub tau: f64,
}

impl Params {
    pub fn new(c: f64, tau: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Domain(format!("speed must be finite and >= 0, got {c}")));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Domain(format!("delay must be finite and >= 0, got {tau}")));
        }
        Ok(Self { c, tau })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.c * self.tau
    }

    /// Fronts and semi-wavefronts exist only for `c >= 2`.
    #[inline]
    pub fn admissible(&self) -> bool {
        self.c >= 2.0
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.admissible() {
            Ok(())
        } else {
            Err(Error::NotAdmissible { c: self.c })
        }
    }
}

/// Behaviour of the profile to the left of the grid:
/// `phi(t) ~ coefficient * (-t)^poly_degree * exp(rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeftTail {
    pub coefficient: f64,
    pub rate: f64,
    pub poly_degree: u32,
}

impl LeftTail {
    pub fn constant(value: f64) -> Self {
        Self {
            coefficient: value,
            rate: 0.0,
            poly_degree: 0,
        }
    }

    pub fn exponential(rate: f64) -> Self {
        Self {
            coefficient: 1.0,
            rate,
            poly_degree: 0,
        }
    }

    /// Tail shape continued from the first grid sample: for `t <= t0`
    /// returns `phi(t0) * (t/t0)^deg * exp(rate (t - t0))`.
    pub fn continue_from(&self, t0: f64, phi0: f64, t: f64) -> f64 {
        let mut v = phi0 * (self.rate * (t - t0)).exp();
        if self.poly_degree > 0 && t0 != 0.0 {
            v *= (t / t0).powi(self.poly_degree as i32);
        }
        v
    }
}

/// Behaviour of the profile to the right of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RightTail {
    /// `phi(t) -> limit`; the last 10% of samples lie within `tol` of it.
    ConstantLimit { limit: f64, tol: f64 },
    /// `phi(t) ~ C exp(rate t)`, continued from the last sample.
    ExponentialGrowth { rate: f64 },
    /// `phi(t) = limit - amplitude * exp(rate t)` with `rate < 0`, in
    /// absolute time.
    ExponentialApproach { limit: f64, amplitude: f64, rate: f64 },
}

/// A profile sampled on `t_i = t0 + i * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub left_tail: LeftTail,
    pub right_tail: RightTail,
    pub params: Params,
}

impl GridProfile {
    /// Validates and builds a profile.
    pub fn new(
        t0: f64,
        dt: f64,
        values: Vec<f64>,
        left_tail: LeftTail,
        right_tail: RightTail,
        params: Params,
    ) -> Result<Self> {
        let p = Self {
            t0,
            dt,
            values,
            left_tail,
            right_tail,
            params,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) || !self.t0.is_finite() {
            return Err(Error::Grid(format!("bad grid t0 = {}, dt = {}", self.t0, self.dt)));
        }
        if self.values.len() < 2 {
            return Err(Error::Grid("a profile needs at least two samples".into()));
        }
        if let Some((i, &v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Domain(format!("sample {i} is negative or not finite ({v})")));
        }
        if let RightTail::ConstantLimit { limit, tol } = self.right_tail {
            let n = self.values.len();
            let start = n - (n / 10).max(1);
            let worst = self.values[start..]
                .iter()
                .map(|v| (v - limit).abs())
                .fold(0.0, f64::max);
            if worst > tol {
                return Err(Error::Tail(format!(
                    "last 10% of samples deviate from the declared limit {limit} by {worst:e} > {tol:e}"
                )));
            }
        }
        Ok(())
    }

    /// Builds a profile by sampling `f` on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: &Grid,
        f: F,
        left_tail: LeftTail,
        right_tail: RightTail,
        params: Params,
    ) -> Result<Self> {
        let values = (0..grid.n).map(|i| f(grid.t(i))).collect();
        Self::new(grid.t0, grid.dt, values, left_tail, right_tail, params)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    pub fn grid(&self) -> Grid {
        Grid {
            t0: self.t0,
            dt: self.dt,
            n: self.len(),
            lag_steps: lag_steps(self.params.h(), self.dt),
        }
    }

    /// Value at an arbitrary time: cubic interpolation inside the grid,
    /// tail models outside.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x < 0.0 {
            return self.left_tail.continue_from(self.t0, self.values[0], t);
        }
        let last = (self.len() - 1) as f64;
        if x > last {
            let tn = self.t_max();
            let vn = self.values[self.len() - 1];
            return match self.right_tail {
                RightTail::ConstantLimit { limit, .. } => limit,
                RightTail::ExponentialGrowth { rate } => vn * (rate * (t - tn)).exp(),
                RightTail::ExponentialApproach {
                    limit,
                    amplitude,
                    rate,
                } => limit - amplitude * (rate * t).exp(),
            };
        }
        crate::numeric::cubic_at(&self.values, x).unwrap_or(self.values[self.len() - 1])
    }

    /// Relabel the time axis so that the sample formerly at `t` sits at
    /// `t - shift`. Values are untouched.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut p = self.clone();
        p.t0 -= shift;
        if p.left_tail.poly_degree == 0 {
            p.left_tail.coefficient *= (p.left_tail.rate * shift).exp();
        }
        if let RightTail::ExponentialApproach {
            amplitude, rate, ..
        } = &mut p.right_tail
        {
            *amplitude *= (*rate * shift).exp();
        }
        p
    }

    /// Time of the first upward crossing of `level` (sub-grid, cubic).
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let v = &self.values;
        (0..v.len() - 1)
            .find(|&i| v[i] < level && v[i + 1] >= level)
            .map(|i| self.t0 + crate::numeric::refine_crossing(v, i, level) * self.dt)
    }

    /// Translate so that the first upward crossing of 1/2 is at t = 0.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let tc = self
            .first_crossing(0.5)
            .ok_or_else(|| Error::Construction("profile never reaches 1/2".into()))?;
        Ok((self.shifted(tc), tc))
    }

    pub fn sup_distance(&self, other: &GridProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_log_profile(&self) -> Result<LogProfile> {
        to_log_profile(self)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,phi")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.t(i), v)?;
        }
        Ok(())
    }

    /// Reads a `t,phi` CSV. Tails are inferred: exponential left tail with
    /// the given rate, constant right limit if the last 10% is within
    /// `limit_tol` of 1, otherwise exponential growth fitted from the end.
    pub fn read_csv<R: BufRead>(r: R, params: Params, left_rate: f64) -> Result<Self> {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('t')) {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("line {}: missing column", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            ts.push(parse(it.next())?);
            vs.push(parse(it.next())?);
        }
        if ts.len() < 2 {
            return Err(Error::Parse("profile CSV needs at least two rows".into()));
        }
        let n = ts.len();
        let dt = (ts[n - 1] - ts[0]) / (n - 1) as f64;
        for i in 1..n {
            let expect = ts[0] + i as f64 * dt;
            if (ts[i] - expect).abs() > 1e-6 * dt.max(1e-300) + 1e-9 * expect.abs() {
                return Err(Error::Parse(format!("row {} breaks the uniform grid", i + 1)));
            }
        }
        let tail_start = n - (n / 10).max(1);
        let dev = vs[tail_start..]
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        let right_tail = if dev <= 1e-3 {
            RightTail::ConstantLimit {
                limit: 1.0,
                tol: 1e-3,
            }
        } else {
            let (a, b) = (vs[n - 2].max(1e-300), vs[n - 1].max(1e-300));
            RightTail::ExponentialGrowth {
                rate: ((b / a).ln() / dt).max(0.0),
            }
        };
        Self::new(
            ts[0],
            dt,
            vs,
            LeftTail::exponential(left_rate),
            right_tail,
            params,
        )
    }
}

/// `x(t) = -ln phi(t)` on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProfile {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub params: Params,
}

impl LogProfile {
    pub fn to_profile_values(&self) -> Vec<f64> {
        self.values.iter().map(|x| (-x).exp()).collect()
    }
}

pub fn to_log_profile(p: &GridProfile) -> Result<LogProfile> {
    let mut values = Vec::with_capacity(p.len());
    for (index, &v) in p.values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositive { index, value: v });
        }
        values.push(-v.ln());
    }
    Ok(LogProfile {
        t0: p.t0,
        dt: p.dt,
        values,
        params: p.params,
    })
}

/// Uniform grid on which `h` is an integer number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
    /// `h / dt`, exact by construction (0 when `h = 0`).
    pub lag_steps: usize,
}

impl Grid {
    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n - 1)
    }

    /// Index of the grid point nearest to `t`, clamped.
    pub fn index_of(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt).round();
        x.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Number of grid steps in the lag; `dt` must divide `h`.
pub fn lag_steps(h: f64, dt: f64) -> usize {
    if h <= 0.0 {
        0
    } else {
        (h / dt).round() as usize
    }
}

/// Grid resolution and truncation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Largest admissible step.
    pub dt_max: f64,
    /// Minimal number of steps per lag.
    pub min_lag_steps: usize,
    /// Smallest step the default rule may produce; for very short lags
    /// fewer than `min_lag_steps` steps per lag are used instead.
    pub dt_floor: f64,
    /// Explicit window; `None` uses the tail-rate rule.
    pub window: Option<(f64, f64)>,
    /// Decay budget: the window reaches `decades / rate` on each side.
    pub tail_span: f64,
    pub clip: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            dt_max: 0.005,
            min_lag_steps: 64,
            dt_floor: 1e-3,
            window: None,
            tail_span: 40.0,
            clip: 200.0,
        }
    }
}

impl GridOptions {
    /// Step for lag `h`: `h / N_h` with `N_h = max(min_lag_steps, ceil(h / dt_max))`,
    /// relaxing `min_lag_steps` only when it would push the step below `dt_floor`.
    pub fn step_for(&self, h: f64) -> (f64, usize) {
        if h <= 0.0 {
            return (self.dt_max, 0);
        }
        let coarse = (h / self.dt_max).ceil().max(1.0) as usize;
        let floor_cap = ((h / self.dt_floor).floor() as usize).max(1);
        let nh = coarse.max(self.min_lag_steps.min(floor_cap));
        (h / nh as f64, nh)
    }

    /// Window `[-span/lambda, span/|re lambda0|]` clipped to `[-clip, clip]`.
    /// `decay_right` is `|Re λ0|` or `None` when the right tail does not decay.
    pub fn window_for(&self, lambda: f64, decay_right: Option<f64>) -> (f64, f64) {
        if let Some(w) = self.window {
            return w;
        }
        let left = (-self.tail_span / lambda).max(-self.clip);
        let right = match decay_right {
            Some(r) if r > 0.0 => (self.tail_span / r).min(self.clip),
            _ => self.clip,
        };
        (left, right)
    }

    pub fn build(&self, p: &Params, lambda: f64, decay_right: Option<f64>) -> Result<Grid> {
        let (dt, nh) = self.step_for(p.h());
        let (lo, hi) = self.window_for(lambda, decay_right);
        if !(hi > lo) {
            return Err(Error::Grid(format!("empty window [{lo}, {hi}]")));
        }
        // Anchor the grid so that t = 0 is a node.
        let i_lo = (lo / dt).floor();
        let i_hi = (hi / dt).ceil();
        let n = (i_hi - i_lo) as usize + 1;
        if n > 20_000_000 {
            return Err(Error::Grid(format!("grid of {n} points is too large")));
        }
        Ok(Grid {
            t0: i_lo * dt,
            dt,
            n,
            lag_steps: nh,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::new(2.5, 0.2).unwrap()
    }

    #[test]
    fn h_is_recomputed() {
        let p = params();
        assert_eq!(p.h(), 2.5 * 0.2);
        assert!(p.admissible());
        assert!(!Params::new(1.9, 0.1).unwrap().admissible());
        assert!(Params::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn log_of_constant_one_is_zero() {
        let g = Grid { t0: -1.0, dt: 0.1, n: 21, lag_steps: 5 };
        let p = GridProfile::from_fn(
            &g,
            |_| 1.0,
            LeftTail::constant(1.0),
            RightTail::ConstantLimit { limit: 1.0, tol: 1e-12 },
            params(),
        )
        .unwrap();
        assert!(p.to_log_profile().unwrap().values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn log_of_exponential_is_linear() {
        let g = Grid { t0: -2.0, dt: 0.25, n: 17, lag_steps: 2 };
        let p = GridProfile::from_fn(
            &g,
            f64::exp,
            LeftTail::exponential(1.0),
            RightTail::ExponentialGrowth { rate: 1.0 },
            params(),
        )
        .unwrap();
        let x = p.to_log_profile().unwrap();
        for (i, xi) in x.values.iter().enumerate() {
            assert!((xi + g.t(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn nonpositive_sample_rejected() {
        let g = Grid { t0: 0.0, dt: 1.0, n: 3, lag_steps: 0 };
        let p = GridProfile::from_fn(
            &g,
            |t| t,
            LeftTail::exponential(1.0),
            RightTail::ExponentialGrowth { rate: 0.0 },
            params(),
        )
        .unwrap();
        assert!(matches!(
            p.to_log_profile(),
            Err(Error::NonPositive { index: 0, .. })
        ));
    }

    #[test]
    fn constant_limit_checked_on_last_tenth() {
        let g = Grid { t0: 0.0, dt: 1.0, n: 20, lag_steps: 0 };
        let bad = GridProfile::from_fn(
            &g,
            |t| if t > 18.5 { 0.5 } else { 1.0 },
            LeftTail::constant(1.0),
            RightTail::ConstantLimit { limit: 1.0, tol: 1e-6 },
            params(),
        );
        assert!(matches!(bad, Err(Error::Tail(_))));
    }

    #[test]
    fn json_and_csv_round_trip() {
        let g = Grid { t0: -3.0, dt: 0.01, n: 601, lag_steps: 50 };
        let p = GridProfile::from_fn(
            &g,
            |t| 1.0 / (1.0 + (-1.3 * t).exp()),
            LeftTail::exponential(1.3),
            RightTail::ConstantLimit { limit: 1.0, tol: 0.1 },
            params(),
        )
        .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: GridProfile = serde_json::from_str(&s).unwrap();
        assert!(p == q, "JSON round trip changed the profile");
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let r = GridProfile::read_csv(&buf[..], params(), 1.3).unwrap();
        assert_eq!(r.values, p.values);
        assert!((r.dt - p.dt).abs() < 1e-15);
    }

    #[test]
    fn lag_is_integer_multiple_of_step() {
        let o = GridOptions::default();
        for h in [0.3, 1.0, 2.4, 3.7, 0.05] {
            let (dt, nh) = o.step_for(h);
            assert!((nh as f64 * dt - h).abs() < 1e-12);
            assert!(dt <= o.dt_max + 1e-15);
        }
        assert_eq!(o.step_for(1.0).1, 200);
        assert_eq!(o.step_for(0.2).1, 64);
    }

    #[test]
    fn window_contains_zero_node() {
        let o = GridOptions::default();
        let p = Params::new(3.0, 0.1).unwrap();
        let g = o.build(&p, 0.38, Some(0.33)).unwrap();
        let i = g.index_of(0.0);
        assert!(g.t(i).abs() < 1e-9);
        assert!(g.t0 <= -40.0 / 0.38 && g.t0 > -40.0 / 0.38 - g.dt);
    }
}
