//! Semi-wavefronts as fixed points of the clamped operator `A_m`.
//!
//! `A_m` is compact but not contractive, so plain or damped iteration
//! stalls. We solve `φ - A_mφ = 0` by damped Newton steps whose linear
//! systems are handled by GMRES, preconditioned with the tridiagonal
//! discretisation of the linearised profile equation.

use super::linalg::{gmres, Tridiagonal};
use super::operators::{
    am_jvp, apply_am_raw, g_raw, g_slope, lagged, ode_residual, sup_norm, tail_models,
};
use super::{FrontReport, FrontSolution, Mode, OperatorConfig, SolveOptions};
use crate::charspec::leading_stable_root;
use crate::domain::{lag_steps, Grid, GridProfile, LeftTail, Params, RightTail};
use crate::error::{Error, Result};
use crate::mapbounds::apriori_bounds;

/// Starting profile for the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    /// `min(e^{λt}, 1)`
    Ramp,
    /// `1 / (1 + e^{-λt})`
    Logistic,
    /// `min(e^{λt}, 1) (1 + 0.2 sin t · e^{-t²/32})`, a ripple confined to the
    /// front so the far tail stays at 1
    Wavy,
}

impl Seed {
    fn value(self, lambda: f64, t: f64) -> f64 {
        match self {
            Seed::Ramp => (lambda * t).exp().min(1.0),
            Seed::Logistic => 1.0 / (1.0 + (-lambda * t).exp()),
            Seed::Wavy => (lambda * t).exp().min(1.0) * (1.0 + 0.2 * t.sin() * (-t * t / 32.0).exp()),
        }
    }
}

pub fn semi_wavefront(p: &Params, tol: f64, max_iter: usize, damping: f64) -> Result<FrontSolution> {
    semi_wavefront_with(
        p,
        &SolveOptions {
            tol,
            max_iter,
            damping,
            ..SolveOptions::default()
        },
        Seed::Ramp,
    )
}

pub fn semi_wavefront_with(p: &Params, opts: &SolveOptions, seed: Seed) -> Result<FrontSolution> {
    p.require_admissible()?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Domain(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    if p.c > 2.0 {
        return solve_at(p, opts, &Start::Seed(seed));
    }
    // c = 2: continue from c = 2 + 2^{-k}, k = 4..10, then solve at c = 2.
    let mut warm: Option<GridProfile> = None;
    for k in 4..=10 {
        let pk = Params::new(2.0 + (2f64).powi(-k), p.tau)?;
        let start = match &warm {
            Some(w) => Start::Profile(w),
            None => Start::Seed(seed),
        };
        warm = Some(solve_at(&pk, opts, &start)?.profile);
    }
    let w = warm.expect("continuation ran");
    solve_at(p, opts, &Start::Profile(&w))
}

enum Start<'a> {
    Seed(Seed),
    Profile(&'a GridProfile),
}

fn build_grid(p: &Params, cfg: &OperatorConfig, opts: &SolveOptions) -> Result<Grid> {
    let decay = leading_stable_root(p)
        .ok()
        .filter(|z| z.re < 0.0)
        .map(|z| -z.re);
    opts.grid.build(p, cfg.lambda, decay)
}

fn solve_at(p: &Params, opts: &SolveOptions, start: &Start) -> Result<FrontSolution> {
    let cfg = match opts.beta {
        Some(b) => OperatorConfig::with_beta(p, b)?,
        None => OperatorConfig::new(p)?,
    };
    let grid = build_grid(p, &cfg, opts)?;
    let left_tail = LeftTail {
        coefficient: 1.0,
        rate: cfg.lambda,
        poly_degree: if cfg.mu > cfg.lambda { 0 } else { 1 },
    };
    let values: Vec<f64> = (0..grid.n)
        .map(|i| {
            let t = grid.t(i);
            match start {
                Start::Seed(s) => s.value(cfg.lambda, t),
                Start::Profile(w) => w.value_at(t).max(0.0),
            }
        })
        .collect();
    let mut prof = GridProfile {
        t0: grid.t0,
        dt: grid.dt,
        values,
        left_tail,
        right_tail: RightTail::ConstantLimit { limit: 1.0, tol: f64::INFINITY },
        params: *p,
    };
    let (iterations, history) = newton(&mut prof, &cfg, opts)?;
    finish(prof, &cfg, iterations, history)
}

fn defect(values: &[f64], prof: &GridProfile, cfg: &OperatorConfig) -> Result<(Vec<f64>, f64)> {
    let mut trial = prof.clone();
    trial.values = values.to_vec();
    let tails = tail_models(&trial);
    let a = apply_am_raw(values, &tails, cfg, prof.dt)?;
    let f: Vec<f64> = values.iter().zip(&a).map(|(x, y)| x - y).collect();
    let r = sup_norm(&f);
    Ok((f, r))
}

fn preconditioner(values: &[f64], lag: &[f64], cfg: &OperatorConfig, d: f64) -> Tridiagonal {
    let n = values.len();
    let c = cfg.c;
    let mut t = Tridiagonal::new(n);
    for i in 1..n - 1 {
        let u = values[i].max(0.0);
        let a = g_slope(u, cfg.beta) * (1.0 - lag[i]) - g_raw(u, cfg.beta);
        t.lower[i] = 1.0 / (d * d) + c / (2.0 * d);
        t.diag[i] = -2.0 / (d * d) + a;
        t.upper[i] = 1.0 / (d * d) - c / (2.0 * d);
    }
    t.diag[0] = 1.0;
    t.lower[n - 1] = -1.0;
    t.diag[n - 1] = 1.0;
    t
}

/// Applies `-T⁻¹ (b - D² + cD) v / b`, an approximate inverse of `I - A_m'`.
fn apply_precond(t: &Tridiagonal, v: &[f64], cfg: &OperatorConfig, d: f64) -> Vec<f64> {
    let n = v.len();
    let (b, c) = (cfg.b, cfg.c);
    let mut w = vec![0.0; n];
    w[0] = b * v[0];
    for i in 1..n - 1 {
        w[i] = (b + 2.0 / (d * d)) * v[i]
            + (-1.0 / (d * d) - c / (2.0 * d)) * v[i - 1]
            + (-1.0 / (d * d) + c / (2.0 * d)) * v[i + 1];
    }
    let mut x = t.solve(&w);
    x.iter_mut().for_each(|e| *e = -*e / b);
    x
}

/// Consecutive Newton steps without progress before giving up.
const STALL_LIMIT: usize = 4;

fn newton(prof: &mut GridProfile, cfg: &OperatorConfig, opts: &SolveOptions) -> Result<(usize, Vec<f64>)> {
    let d = prof.dt;
    let nh = lag_steps(cfg.h, d);
    let mut history = Vec::new();
    let (mut f, mut res) = defect(&prof.values, prof, cfg)?;
    history.push(res);
    // `b (φ - A_mφ)` is the profile-equation residual, so the fixed-point
    // defect must also be small on that scale. When that target sits below
    // roundoff, measuring the profile-equation residual directly decides.
    let target = opts.tol.min(10.0 * opts.tol / cfg.b);
    let done = |res: f64, prof: &GridProfile| {
        res <= target || (res <= opts.tol && sup_norm(&ode_residual(prof)) <= 10.0 * opts.tol)
    };
    let mut it = 0;
    let mut stalled = 0;
    while !done(res, prof) {
        if it >= opts.max_iter || stalled >= STALL_LIMIT {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
                history,
            });
        }
        it += 1;
        let tails = tail_models(prof);
        let lag = lagged(&prof.values, &tails.left, nh, d);
        let tri = preconditioner(&prof.values, &lag, cfg, d);
        let phi = prof.values.clone();
        let rhs: Vec<f64> = f.iter().map(|e| -e).collect();
        let (dx, _) = gmres(
            |v| {
                let j = am_jvp(&phi, &lag, v, cfg, d);
                v.iter().zip(&j).map(|(a, b)| a - b).collect()
            },
            |v| apply_precond(&tri, v, cfg, d),
            &rhs,
            1e-7,
            60,
            10,
        );
        let mut alpha = opts.damping;
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..8 {
            let trial: Vec<f64> = phi
                .iter()
                .zip(&dx)
                .map(|(a, b)| (a + alpha * b).max(0.0))
                .collect();
            let (ft, rt) = defect(&trial, prof, cfg)?;
            let better = best.as_ref().map_or(true, |b| rt < b.2);
            if better {
                best = Some((trial, ft, rt));
            }
            if rt < res {
                break;
            }
            alpha *= 0.5;
        }
        let (v, ft, rt) = best.expect("at least one trial step");
        // Below `tol` only the roundoff floor is left to fight; demand halving.
        let progress = if res <= opts.tol { rt < 0.5 * res } else { rt < res };
        if progress {
            stalled = 0;
        } else {
            stalled += 1;
        }
        prof.values = v;
        f = ft;
        res = rt;
        history.push(res);
        if !res.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
                history,
            });
        }
    }
    Ok((it, history))
}

fn finish(prof: GridProfile, cfg: &OperatorConfig, iterations: usize, history: Vec<f64>) -> Result<FrontSolution> {
    let p = prof.params;
    let n = prof.len();
    let tail = &prof.values[n - (n / 10).max(1)..];
    let worst = tail.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let mut prof = prof;
    prof.right_tail = RightTail::ConstantLimit {
        limit: 1.0,
        tol: 2.0 * worst + 1e-15,
    };
    prof.validate()?;
    let (profile, shift) = prof.normalized()?;
    let max_v = profile.values.iter().cloned().fold(0.0, f64::max);
    let ode = sup_norm(&ode_residual(&profile));
    Ok(FrontSolution {
        profile,
        report: FrontReport {
            mode: Mode::Semi,
            residual: *history.last().unwrap_or(&f64::INFINITY),
            ode_residual: ode,
            iterations,
            history,
            normalized_shift: shift,
            beta_used: Some(cfg.beta),
            clamp_active: max_v >= cfg.beta,
            bounds_box: if p.h() > 0.0 { apriori_bounds(&p).ok() } else { None },
            tail_reports: Vec::new(),
        },
    })
}

/// Solves from every [`Seed`] and returns the largest pairwise sup-norm
/// distance between the normalised profiles, over the common window.
pub fn uniqueness_probe(p: &Params, opts: &SolveOptions) -> Result<f64> {
    let sols = [Seed::Ramp, Seed::Logistic, Seed::Wavy]
        .iter()
        .map(|&s| semi_wavefront_with(p, opts, s).map(|x| x.profile))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for a in 0..sols.len() {
        for b in a + 1..sols.len() {
            let (pa, pb) = (&sols[a], &sols[b]);
            let lo = pa.t0.max(pb.t0);
            let hi = pa.t_max().min(pb.t_max());
            for i in 0..pa.len() {
                let t = pa.t(i);
                if t >= lo && t <= hi {
                    worst = worst.max((pa.values[i] - pb.value_at(t)).abs());
                }
            }
        }
    }
    Ok(worst)
}
