//! Method-of-lines simulation of `u_t = u_xx + u(t,x)(1 - u(t-τ,x))` on a
//! bounded interval with homogeneous Neumann ends.
//!
//! The default stepper is Crank–Nicolson for the linear part `u_xx + u` with
//! the delayed product `u(t)u(t-τ)` taken explicitly. It is written in
//! increment form, `(I - dt/2 (L + I)) δ = dt (L u + u - u u_τ)`, so both
//! steady states give a zero right-hand side and stay fixed bit for bit.
//! Keeping the linear growth implicit makes the leading edge, which sets the
//! speed of a pulled front, second order in time.

use crate::error::{Error, Result};
use crate::mapbounds::MapBounds;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Fronts are kept this far (in units of the diffusion length `1`) from a
/// boundary they are moving toward.
pub const BOUNDARY_CLEARANCE: f64 = 10.0;

/// A boundary counts as lying ahead of a front while `u` there is below this.
const AHEAD_LEVEL: f64 = 1e-2;

const NEGATIVITY_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialCondition {
    /// Smooth compactly supported bump `height·exp(1 - 1/(1 - r²))`, `r = (x - center)/half_width`.
    Bump {
        center: f64,
        half_width: f64,
        height: f64,
    },
    /// `1` left of `position`, `0` right of it.
    Step { position: f64 },
    /// `min(1, exp(-rate (x - position)))`; a slow decay rate selects a fast front.
    Ramp { position: f64, rate: f64 },
    /// One value per grid point.
    Samples { values: Vec<f64> },
}

impl InitialCondition {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Bump {
                center,
                half_width,
                height,
            } => {
                let r = (x - center) / half_width;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
            InitialCondition::Step { position } => {
                if x < position {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::Ramp { position, rate } => (-rate * (x - position)).exp().min(1.0),
            InitialCondition::Samples { .. } => unreachable!(),
        }
    }
}

/// Values of `u` on `[-τ, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum History {
    /// The initial profile held constant in time.
    Constant,
    /// `round(τ/dt_step) + 1` snapshots at times `-τ, -τ + dt_step, …, 0`;
    /// the last one must equal the initial condition.
    Snapshots { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt_step: f64,
    pub t_end: f64,
    pub tau: f64,
    pub initial_condition: InitialCondition,
    pub history: History,
    pub scheme: Scheme,
    /// Snapshot interval of the stored field; a multiple of `dt_step`.
    pub record_dt: f64,
    /// Abort when a front gets within [`BOUNDARY_CLEARANCE`] of a boundary
    /// ahead of it.
    pub guard_boundaries: bool,
}

impl SimConfig {
    /// Bump at the left end of `[0, x_max]`; by symmetry this is the
    /// whole-line problem with a bump at the origin.
    pub fn bump(tau: f64, x_max: f64, dx: f64, dt_step: f64, t_end: f64) -> Self {
        Self {
            x_min: 0.0,
            x_max,
            dx,
            dt_step,
            t_end,
            tau,
            initial_condition: InitialCondition::Bump {
                center: 0.0,
                half_width: 2.0,
                height: 0.1,
            },
            history: History::Constant,
            scheme: Scheme::Imex,
            record_dt: 0.5,
            guard_boundaries: true,
        }
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx).round() as usize + 1
    }

    /// Number of steps spanning the delay.
    pub fn delay_steps(&self) -> usize {
        (self.tau / self.dt_step).round() as usize
    }

    fn whole_multiple(a: f64, b: f64) -> Option<usize> {
        let k = a / b;
        let r = k.round();
        ((k - r).abs() <= 1e-9 * r.max(1.0)).then_some(r as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.dx, self.dt_step, self.t_end, self.tau, self.record_dt];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite configuration value".into()));
        }
        if self.x_max <= self.x_min || self.dx <= 0.0 || self.dt_step <= 0.0 || self.t_end <= 0.0 {
            return Err(Error::Precondition(
                "need x_min < x_max and positive dx, dt_step, t_end".into(),
            ));
        }
        if self.tau < 0.0 {
            return Err(Error::Precondition(format!("negative delay {}", self.tau)));
        }
        if self.nx() < 3 {
            return Err(Error::Grid("fewer than 3 grid points".into()));
        }
        if Self::whole_multiple(self.x_max - self.x_min, self.dx).is_none() {
            return Err(Error::Grid("dx does not divide the window".into()));
        }
        if Self::whole_multiple(self.tau, self.dt_step).is_none() {
            return Err(Error::Precondition(format!(
                "dt_step = {} does not divide tau = {}",
                self.dt_step, self.tau
            )));
        }
        match Self::whole_multiple(self.record_dt, self.dt_step) {
            Some(k) if k >= 1 => {}
            _ => {
                return Err(Error::Precondition(
                    "record_dt must be a positive multiple of dt_step".into(),
                ))
            }
        }
        if self.scheme == Scheme::Explicit && self.dt_step > 0.5 * self.dx * self.dx {
            return Err(Error::Simulation(format!(
                "CFL violation: dt_step = {} > dx²/2 = {}",
                self.dt_step,
                0.5 * self.dx * self.dx
            )));
        }
        if let InitialCondition::Samples { values } = &self.initial_condition {
            if values.len() != self.nx() {
                return Err(Error::Grid(format!(
                    "{} initial samples for {} grid points",
                    values.len(),
                    self.nx()
                )));
            }
        }
        if let History::Snapshots { rows } = &self.history {
            if rows.len() != self.delay_steps() + 1 || rows.iter().any(|r| r.len() != self.nx()) {
                return Err(Error::Grid(
                    "history needs round(tau/dt_step)+1 rows of nx samples".into(),
                ));
            }
        }
        Ok(())
    }

    fn initial_values(&self) -> Vec<f64> {
        match &self.initial_condition {
            InitialCondition::Samples { values } => values.clone(),
            ic => (0..self.nx())
                .map(|i| ic.eval(self.x_min + i as f64 * self.dx))
                .collect(),
        }
    }
}

/// Snapshots of `u` on the grid, row-major in (time, space).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
    pub tau: f64,
    /// Spacing of the stored rows.
    pub dt: f64,
    pub times: Vec<f64>,
    pub data: Vec<f64>,
}

impl Field {
    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.nx..(k + 1) * self.nx]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Time series at the grid point nearest to `x`.
    pub fn series_at(&self, x: f64) -> Result<Vec<f64>> {
        let s = (x - self.x_min) / self.dx;
        if !(s > -0.5 && s < self.nx as f64 - 0.5) {
            return Err(Error::Window(format!("x = {x} outside the field")));
        }
        let i = s.round() as usize;
        Ok((0..self.nt()).map(|k| self.data[k * self.nx + i]).collect())
    }

    pub const HEADER_LEN: usize = 64;
    pub const MAGIC: &'static [u8; 4] = b"KPPF";
    pub const VERSION: u32 = 1;

    /// Header layout (little endian): magic, version u32, nx u64, nt u64,
    /// dx f64, dt f64, tau f64, x_min f64, 8 bytes zero. Rows follow.
    pub fn write_bin<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = Vec::with_capacity(Self::HEADER_LEN);
        header.extend_from_slice(Self::MAGIC);
        header.extend_from_slice(&Self::VERSION.to_le_bytes());
        header.extend_from_slice(&(self.nx as u64).to_le_bytes());
        header.extend_from_slice(&(self.nt() as u64).to_le_bytes());
        for v in [self.dx, self.dt, self.tau, self.x_min] {
            header.extend_from_slice(&v.to_le_bytes());
        }
        header.resize(Self::HEADER_LEN, 0);
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Row times are reconstructed as `k·dt`.
    pub fn read_bin<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; Self::HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[0..4] != Self::MAGIC {
            return Err(Error::Parse("bad field magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        if u32_at(4) != Self::VERSION {
            return Err(Error::Parse(format!("unsupported field version {}", u32_at(4))));
        }
        let nx = u64_at(8) as usize;
        let nt = u64_at(16) as usize;
        let (dx, dt, tau, x_min) = (f64_at(24), f64_at(32), f64_at(40), f64_at(48));
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != nx * nt * 8 {
            return Err(Error::Parse(format!(
                "field body has {} bytes, header says {}",
                bytes.len(),
                nx * nt * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            x_min,
            dx,
            nx,
            tau,
            dt,
            times: (0..nt).map(|k| k as f64 * dt).collect(),
            data,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDiagnostics {
    pub steps: usize,
    pub min_value: f64,
    pub max_value: f64,
    /// Closest approach of a front to a boundary ahead of it (`inf` if none).
    #[serde(with = "crate::numeric::serde_nonfinite")]
    pub min_clearance: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub field: Field,
    pub diagnostics: SimDiagnostics,
}

/// Prefactored `(1 - g) I - a L` with Neumann ends.
struct ImplicitDiffusion {
    a: f64,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl ImplicitDiffusion {
    fn new(n: usize, a: f64, g: f64) -> Self {
        // row 0: (1+2a) u0 - 2a u1; row n-1: -2a u_{n-2} + (1+2a) u_{n-1}
        let upper = |i: usize| if i == 0 { -2.0 * a } else { -a };
        let lower = |i: usize| if i == n - 1 { -2.0 * a } else { -a };
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let d = 1.0 - g + 2.0 * a;
        let mut denom = d;
        inv[0] = 1.0 / denom;
        cp[0] = upper(0) * inv[0];
        for i in 1..n {
            denom = d - lower(i) * cp[i - 1];
            inv[i] = 1.0 / denom;
            cp[i] = if i + 1 < n { upper(i) * inv[i] } else { 0.0 };
        }
        Self { a, cp, inv }
    }

    fn solve_in_place(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.inv[0];
        for i in 1..n {
            let lower = if i == n - 1 { -2.0 * self.a } else { -self.a };
            d[i] = (d[i] - lower * d[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.cp[i] * d[i + 1];
        }
    }
}

/// Neumann Laplacian times `scale`.
fn laplacian(u: &[f64], scale: f64, out: &mut [f64]) {
    let n = u.len();
    out[0] = scale * 2.0 * (u[1] - u[0]);
    for i in 1..n - 1 {
        out[i] = scale * ((u[i - 1] - u[i]) + (u[i + 1] - u[i]));
    }
    out[n - 1] = scale * 2.0 * (u[n - 2] - u[n - 1]);
}

/// Distance from a level-1/2 crossing to the boundary it approaches, if that
/// boundary still lies ahead of the front.
fn boundary_clearance(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    let mut best = f64::INFINITY;
    if u[n - 1] < AHEAD_LEVEL {
        if let Some(i) = u.iter().rposition(|&v| v >= 0.5) {
            best = best.min((n - 1 - i) as f64 * dx);
        }
    }
    if u[0] < AHEAD_LEVEL {
        if let Some(i) = u.iter().position(|&v| v >= 0.5) {
            best = best.min(i as f64 * dx);
        }
    }
    best
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let nx = cfg.nx();
    let m = cfg.delay_steps();
    let dt = cfg.dt_step;
    let steps = (cfg.t_end / dt).round() as usize;
    let stride = (cfg.record_dt / dt).round() as usize;
    let scale = 1.0 / (cfg.dx * cfg.dx);

    let u0 = cfg.initial_values();
    if u0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Precondition("initial data must be finite and non-negative".into()));
    }
    // ring[(n) mod (m+1)] holds u at step n, for n in [current - m, current]
    let mut ring: Vec<Vec<f64>> = match &cfg.history {
        History::Constant => vec![u0.clone(); m + 1],
        History::Snapshots { rows } => {
            let mut ring = vec![Vec::new(); m + 1];
            for (j, row) in rows.iter().enumerate() {
                // row j sits at step j - m
                ring[(j + 1) % (m + 1)] = row.clone();
            }
            ring
        }
    };
    let mut u = u0;

    let implicit = (cfg.scheme == Scheme::Imex).then(|| ImplicitDiffusion::new(nx, 0.5 * dt * scale, 0.5 * dt));
    let mut lap = vec![0.0; nx];
    let mut rhs = vec![0.0; nx];

    let mut times = vec![0.0];
    let mut data = u.clone();
    let mut diag = SimDiagnostics {
        steps,
        min_value: u.iter().copied().fold(f64::INFINITY, f64::min),
        max_value: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_clearance: boundary_clearance(&u, cfg.dx),
    };

    for n in 0..steps {
        let delayed = &ring[(n + 1) % (m + 1)];
        laplacian(&u, dt * scale, &mut lap);
        for i in 0..nx {
            rhs[i] = lap[i] + (dt * u[i] - dt * u[i] * delayed[i]);
        }
        if let Some(imp) = &implicit {
            imp.solve_in_place(&mut rhs);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..nx {
            u[i] += rhs[i];
            lo = lo.min(u[i]);
            hi = hi.max(u[i]);
        }
        let t = (n + 1) as f64 * dt;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Simulation(format!("non-finite values at t = {t}")));
        }
        if lo < NEGATIVITY_FLOOR {
            return Err(Error::Simulation(format!(
                "negativity {lo:e} at t = {t} exceeds {NEGATIVITY_FLOOR:e}"
            )));
        }
        diag.min_value = diag.min_value.min(lo);
        diag.max_value = diag.max_value.max(hi);
        let clearance = boundary_clearance(&u, cfg.dx);
        diag.min_clearance = diag.min_clearance.min(clearance);
        if cfg.guard_boundaries && clearance < BOUNDARY_CLEARANCE {
            return Err(Error::Simulation(format!(
                "front within {clearance} of a boundary at t = {t}; widen the window"
            )));
        }
        ring[(n + 1) % (m + 1)].copy_from_slice(&u);
        if (n + 1) % stride == 0 {
            times.push(t);
            data.extend_from_slice(&u);
        }
    }

    Ok(SimOutput {
        field: Field {
            x_min: cfg.x_min,
            dx: cfg.dx,
            nx,
            tau: cfg.tau,
            dt: cfg.record_dt,
            times,
            data,
        },
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub level: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub fitted_speed: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
}

/// Rightmost point where the row drops through `level`, linearly interpolated.
pub fn level_position(row: &[f64], x_min: f64, dx: f64, level: f64) -> Option<f64> {
    let i = row.iter().rposition(|&v| v >= level)?;
    if i + 1 == row.len() {
        return Some(x_min + i as f64 * dx);
    }
    let (a, b) = (row[i], row[i + 1]);
    Some(x_min + (i as f64 + (a - level) / (a - b)) * dx)
}

/// Least-squares speed of the rightmost `level` crossing over the final third
/// of the record.
pub fn measure_speed(field: &Field, level: f64) -> Result<SpeedEstimate> {
    let nt = field.nt();
    if nt < 3 {
        return Err(Error::Fit("need at least 3 snapshots".into()));
    }
    let (t0, t1) = (field.times[0], field.times[nt - 1]);
    let start = t1 - (t1 - t0) / 3.0;
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for k in 0..nt {
        if field.times[k] < start - 1e-12 {
            continue;
        }
        let x = level_position(field.row(k), field.x_min, field.dx, level).ok_or_else(|| {
            Error::Fit(format!("level {level} absent at t = {}", field.times[k]))
        })?;
        times.push(field.times[k]);
        positions.push(x);
    }
    if times.len() < 3 {
        return Err(Error::Fit("fewer than 3 snapshots in the fit window".into()));
    }
    if positions.windows(2).any(|w| w[1] < w[0] - 1e-9) {
        return Err(Error::Fit("level set moves non-monotonically".into()));
    }
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let mx = positions.iter().sum::<f64>() / n;
    let stt: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    let stx: f64 = times.iter().zip(&positions).map(|(t, x)| (t - mt) * (x - mx)).sum();
    let sxx: f64 = positions.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = stx / stt;
    let ss_res: f64 = times
        .iter()
        .zip(&positions)
        .map(|(t, x)| (x - mx - slope * (t - mt)).powi(2))
        .sum();
    let r_squared = if sxx > 0.0 { (1.0 - ss_res / sxx).clamp(0.0, 1.0) } else { 1.0 };
    if slope < 0.0 {
        return Err(Error::Fit(format!("negative fitted speed {slope}")));
    }
    Ok(SpeedEstimate {
        level,
        fit_window: (times[0], times[times.len() - 1]),
        times,
        positions,
        fitted_speed: slope,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WakeVerdict {
    /// No extrema: the series is flat after the transient.
    Flat,
    Decaying,
    Plateau { amplitude: f64 },
    Growing,
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub x_probe: f64,
    pub arrival_time: f64,
    /// `(t, u - 1)` at successive extrema after arrival.
    pub extrema: Vec<(f64, f64)>,
    pub verdict: WakeVerdict,
}

/// Amplitudes below this count as decayed.
pub const WAKE_TOLERANCE: f64 = 1e-3;

/// Successive extrema of `u(·, x_probe) - 1` once the front has passed the
/// probe (first time `u ≥ 1/2` there).
pub fn wake_oscillation_amplitude(field: &Field, x_probe: f64) -> Result<AmplitudeRecord> {
    let s = field.series_at(x_probe)?;
    let k0 = s
        .iter()
        .position(|&v| v >= 0.5)
        .ok_or_else(|| Error::Window(format!("inconclusive: the front never reaches x = {x_probe}")))?;
    let d: Vec<f64> = s[k0..].iter().map(|v| v - 1.0).collect();
    let mut extrema = Vec::new();
    for j in 1..d.len().saturating_sub(1) {
        let (l, r) = (d[j] - d[j - 1], d[j + 1] - d[j]);
        if l * r < 0.0 || (l != 0.0 && r == 0.0 && j + 2 < d.len() && l * (d[j + 2] - d[j]) < 0.0) {
            extrema.push((field.times[k0 + j], d[j]));
        }
    }
    let amps: Vec<f64> = extrema.iter().map(|e| e.1.abs()).collect();
    let last_value = d.last().map_or(0.0, |v| v.abs());
    let verdict = if amps.is_empty() {
        if last_value < WAKE_TOLERANCE {
            WakeVerdict::Flat
        } else {
            WakeVerdict::Inconclusive {
                reason: "no extrema and u has not settled near 1".into(),
            }
        }
    } else if amps[amps.len() - 1] < WAKE_TOLERANCE && last_value < WAKE_TOLERANCE {
        WakeVerdict::Decaying
    } else if amps.len() < 4 {
        WakeVerdict::Inconclusive {
            reason: format!("only {} extrema after arrival", amps.len()),
        }
    } else {
        let n = amps.len();
        let recent = 0.5 * (amps[n - 1] + amps[n - 2]);
        let earlier = 0.5 * (amps[n - 3] + amps[n - 4]);
        let ratio = recent / earlier;
        if ratio < 0.9 {
            WakeVerdict::Decaying
        } else if ratio <= 1.1 {
            WakeVerdict::Plateau { amplitude: recent }
        } else {
            WakeVerdict::Growing
        }
    };
    Ok(AmplitudeRecord {
        x_probe,
        arrival_time: field.times[k0],
        extrema,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WakeContainment {
    pub checked_rows: usize,
    #[serde(with = "crate::numeric::serde_nonfinite")]
    pub min_value: f64,
    #[serde(with = "crate::numeric::serde_nonfinite")]
    pub max_value: f64,
    pub contained: bool,
}

/// Checks the final third of the record: in every row, the samples behind the
/// first point (from the leading edge) where `u ≥ 1` lie in `(L_e, U_e)`.
pub fn wake_containment(field: &Field, bounds: &MapBounds) -> WakeContainment {
    let nt = field.nt();
    let (t0, t1) = (field.times[0], field.times[nt.saturating_sub(1)]);
    let start = t1 - (t1 - t0) / 3.0;
    let mut out = WakeContainment {
        checked_rows: 0,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        contained: true,
    };
    for k in 0..nt {
        if field.times[k] < start - 1e-12 {
            continue;
        }
        let row = field.row(k);
        let Some(i) = row.iter().rposition(|&v| v >= 1.0) else {
            continue;
        };
        out.checked_rows += 1;
        for &v in &row[..=i] {
            out.min_value = out.min_value.min(v);
            out.max_value = out.max_value.max(v);
            if !bounds.contains(v) {
                out.contained = false;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(ic: InitialCondition, tau: f64) -> SimConfig {
        SimConfig {
            x_min: 0.0,
            x_max: 40.0,
            dx: 0.1,
            dt_step: 0.05,
            t_end: 5.0,
            tau,
            initial_condition: ic,
            history: History::Constant,
            scheme: Scheme::Imex,
            record_dt: 0.5,
            guard_boundaries: false,
        }
    }

    #[test]
    fn steady_states_are_exact() {
        for level in [0.0, 1.0] {
            let nx = small(InitialCondition::Step { position: 0.0 }, 0.3).nx();
            let cfg = small(
                InitialCondition::Samples {
                    values: vec![level; nx],
                },
                0.3,
            );
            let out = simulate(&cfg).unwrap();
            assert!(out.field.data.iter().all(|&v| v == level));
        }
    }

    #[test]
    fn delay_must_be_a_whole_number_of_steps() {
        let cfg = small(InitialCondition::Step { position: 5.0 }, 0.33);
        assert!(matches!(simulate(&cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn explicit_mode_checks_cfl() {
        let mut cfg = small(InitialCondition::Step { position: 5.0 }, 0.3);
        cfg.scheme = Scheme::Explicit;
        assert!(matches!(simulate(&cfg), Err(Error::Simulation(_))));
        cfg.dt_step = 0.005;
        assert!(simulate(&cfg).is_ok());
    }

    #[test]
    fn boundary_guard_aborts() {
        let mut cfg = small(InitialCondition::Step { position: 25.0 }, 0.0);
        cfg.guard_boundaries = true;
        assert!(matches!(simulate(&cfg), Err(Error::Simulation(_))));
    }

    #[test]
    fn binary_round_trip() {
        let out = simulate(&small(InitialCondition::Step { position: 5.0 }, 0.3)).unwrap();
        let mut buf = Vec::new();
        out.field.write_bin(&mut buf).unwrap();
        assert_eq!(buf.len(), Field::HEADER_LEN + 8 * out.field.data.len());
        assert_eq!(&buf[..4], b"KPPF");
        let back = Field::read_bin(buf.as_slice()).unwrap();
        assert_eq!(back, out.field);
    }

    #[test]
    fn constant_one_has_no_extrema() {
        let nx = small(InitialCondition::Step { position: 0.0 }, 0.3).nx();
        let cfg = small(InitialCondition::Samples { values: vec![1.0; nx] }, 0.3);
        let rec = wake_oscillation_amplitude(&simulate(&cfg).unwrap().field, 10.0).unwrap();
        assert!(rec.extrema.is_empty());
        assert_eq!(rec.verdict, WakeVerdict::Flat);
    }
}
