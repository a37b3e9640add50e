//! Region labels over a `(τ, c)` grid with optional solver evidence.
//!
//! The analytic label comes from the critical-speed curves alone. Solver
//! outcomes are attached as evidence and never change the label; a cell
//! whose evidence disagrees with a proven statement is flagged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::charspec::{c_star, c_starstar, CriticalSpeed};
use crate::domain::{GridOptions, GridProfile, Params};
use crate::error::{Error, Result};
use crate::frontsolver::{monotone_front_with, semi_wavefront_with, Seed, SolveOptions};
use crate::shape::{classify, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    SubMinimal,
    Monotone,
    NonMonotoneCandidate,
    SemiOnly,
    NoFront,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::SubMinimal => "SubMinimal",
            Region::Monotone => "Monotone",
            Region::NonMonotoneCandidate => "NonMonotoneCandidate",
            Region::SemiOnly => "SemiOnly",
            Region::NoFront => "NoFront",
        }
    }

    fn rank(self) -> u8 {
        match self {
            Region::SubMinimal => 0,
            Region::Monotone => 1,
            Region::NonMonotoneCandidate | Region::SemiOnly => 2,
            Region::NoFront => 3,
        }
    }
}

/// Label from the curves: `c < 2`, then `2 ≤ c ≤ c*(τ)`, then
/// `c*(τ) < c ≤ c⋆(τ)`, then `c > c⋆(τ)`.
///
/// The analytic layer never returns [`Region::SemiOnly`]; that label is
/// only reported as the empirical reading of a cell whose semi-wavefront
/// does not settle at 1.
pub fn analytic_region(c: f64, c_star: CriticalSpeed, c_starstar: CriticalSpeed) -> Region {
    if c < 2.0 {
        return Region::SubMinimal;
    }
    let below = |s: CriticalSpeed| match s {
        CriticalSpeed::Infinite => true,
        CriticalSpeed::Finite(v) => c <= v,
        CriticalSpeed::BelowMinimal(_) => false,
    };
    if below(c_star) {
        Region::Monotone
    } else if below(c_starstar) {
        Region::NonMonotoneCandidate
    } else {
        Region::NoFront
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceMode {
    None,
    Sampled,
    Full,
}

impl std::str::FromStr for EvidenceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(EvidenceMode::None),
            "sampled" => Ok(EvidenceMode::Sampled),
            "full" => Ok(EvidenceMode::Full),
            _ => Err(Error::Parse(format!("unknown evidence mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub evidence: EvidenceMode,
    /// Newton step cap for semi-wavefront solves.
    pub max_iter: usize,
    /// Iteration cap for the monotone `B` iteration, which converges linearly.
    pub monotone_max_iter: usize,
    pub tol: f64,
    /// Sampled mode solves every `stride`-th cell in both directions.
    pub stride: usize,
    pub dt_max: f64,
    pub threads: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            evidence: EvidenceMode::Sampled,
            max_iter: 20,
            monotone_max_iter: 2000,
            tol: 1e-8,
            stride: 4,
            dt_max: 0.02,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolverOutcome {
    NotRun,
    Converged { solver: String, iterations: usize },
    Failed { solver: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub c_star: CriticalSpeed,
    pub c_starstar: CriticalSpeed,
    pub solver_outcome: SolverOutcome,
    pub classification_kind: Option<Kind>,
    /// Final fixed-point defect of the solve (also set on failure).
    pub residual: Option<f64>,
    /// Empirical reading: front settling at 1, or semi-wavefront only.
    pub empirical: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub tau: f64,
    pub c: f64,
    pub region: Region,
    pub evidence: Evidence,
    /// Evidence contradicts a proven statement about this cell.
    pub contradiction: Option<String>,
}

/// Parses `start:stop:step` into an inclusive ascending grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("expected start:stop:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (a, b, h) = (v[0], v[1], v[2]);
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}

/// Decaying tail: ends within `1e-6` of 1 and the last extremum is much
/// smaller than the first.
fn settles_at_one(profile: &GridProfile, kind: Kind, extrema: &[f64]) -> bool {
    let end = profile.values[profile.len() - 1];
    let decayed = match (extrema.first(), extrema.last()) {
        (Some(a), Some(b)) if extrema.len() > 1 => b.abs() <= 1e-2 * a.abs(),
        _ => true,
    };
    kind != Kind::UnboundedTail && (end - 1.0).abs() <= 1e-6 && decayed
}

fn gather_evidence(tau: f64, c: f64, region: Region, ev: &mut Evidence, budget: &Budget) -> Option<String> {
    let p = Params::new(c, tau).ok()?;
    let opts = SolveOptions {
        tol: budget.tol,
        max_iter: budget.max_iter,
        grid: GridOptions {
            dt_max: budget.dt_max,
            ..GridOptions::default()
        },
        ..SolveOptions::default()
    };
    let (solver, outcome) = if region == Region::Monotone {
        let opts = SolveOptions {
            max_iter: budget.monotone_max_iter,
            ..opts
        };
        ("monotone", monotone_front_with(&p, &opts))
    } else {
        ("semi", semi_wavefront_with(&p, &opts, Seed::Ramp))
    };
    let sol = match outcome {
        Ok(s) => s,
        Err(e) => {
            if let Error::NonConvergence { residual, .. } = &e {
                ev.residual = Some(*residual);
            }
            ev.solver_outcome = SolverOutcome::Failed {
                solver: solver.into(),
                message: e.to_string(),
            };
            // a failed solve is recorded, not read as evidence either way
            return None;
        }
    };
    ev.residual = Some(sol.report.residual);
    ev.solver_outcome = SolverOutcome::Converged {
        solver: solver.into(),
        iterations: sol.report.iterations,
    };
    let report = match classify(&sol.profile, &p) {
        Ok(r) => r,
        Err(e) => return Some(format!("classification failed: {e}")),
    };
    ev.classification_kind = Some(report.kind);
    let amps: Vec<f64> = report.extrema.iter().map(|e| e.phi - 1.0).collect();
    let front = settles_at_one(&sol.profile, report.kind, &amps);
    ev.empirical = Some(match (front, report.kind) {
        (true, Kind::Monotone) => Region::Monotone,
        (true, _) => Region::NonMonotoneCandidate,
        (false, _) => Region::SemiOnly,
    });
    match region {
        Region::Monotone if report.kind != Kind::Monotone => {
            Some(format!("classified {:?} inside the monotone region", report.kind))
        }
        Region::NonMonotoneCandidate if tau <= 1.0 && !front => {
            Some("semi-wavefront does not settle at 1 although fronts exist for tau <= 1".into())
        }
        Region::NoFront if front => Some("profile settles at 1 beyond the non-existence threshold".into()),
        _ => None,
    }
}

fn boundary_adjacent(labels: &[Vec<Region>], i: usize, j: usize) -> bool {
    let row = &labels[i];
    (j > 0 && row[j - 1] != row[j]) || (j + 1 < row.len() && row[j + 1] != row[j])
}

/// Cells ordered by `τ` index, then `c` index.
pub fn sweep_plane(tau_grid: &[f64], c_grid: &[f64], budget: &Budget) -> Result<Vec<RegionCell>> {
    let sorted = |g: &[f64]| g.windows(2).all(|w| w[0] < w[1]);
    if !sorted(tau_grid) || !sorted(c_grid) {
        return Err(Error::Precondition("grids must be strictly ascending".into()));
    }
    let curves: Vec<(CriticalSpeed, CriticalSpeed)> = tau_grid
        .iter()
        .map(|&t| Ok((c_star(t)?, c_starstar(t)?)))
        .collect::<Result<_>>()?;
    let labels: Vec<Vec<Region>> = curves
        .iter()
        .map(|&(a, b)| c_grid.iter().map(|&c| analytic_region(c, a, b)).collect())
        .collect();

    let jobs: Vec<(usize, usize)> = (0..tau_grid.len())
        .flat_map(|i| (0..c_grid.len()).map(move |j| (i, j)))
        .collect();
    let run = |&(i, j): &(usize, usize)| -> RegionCell {
        let (tau, c) = (tau_grid[i], c_grid[j]);
        let region = labels[i][j];
        let mut evidence = Evidence {
            c_star: curves[i].0,
            c_starstar: curves[i].1,
            solver_outcome: SolverOutcome::NotRun,
            classification_kind: None,
            residual: None,
            empirical: None,
        };
        let wanted = match budget.evidence {
            EvidenceMode::None => false,
            EvidenceMode::Full => true,
            EvidenceMode::Sampled => {
                (i % budget.stride == 0 && j % budget.stride == 0) || boundary_adjacent(&labels, i, j)
            }
        };
        let contradiction = if wanted && region != Region::SubMinimal {
            gather_evidence(tau, c, region, &mut evidence, budget)
        } else {
            None
        };
        RegionCell {
            tau,
            c,
            region,
            evidence,
            contradiction,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(budget.threads.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    // par_iter + collect keeps the input order
    Ok(pool.install(|| jobs.par_iter().map(run).collect()))
}

/// True when every `τ` row reads SubMinimal, Monotone, candidate, NoFront
/// in that order.
pub fn labels_are_ordered(cells: &[RegionCell]) -> bool {
    cells
        .windows(2)
        .filter(|w| w[0].tau == w[1].tau)
        .all(|w| w[0].region.rank() <= w[1].region.rank())
}

fn speed_field(s: CriticalSpeed) -> String {
    match s {
        CriticalSpeed::Finite(v) => format!("{v:.16e}"),
        other => other.label(),
    }
}

/// CSV with header `tau,c,region,c_star,c_starstar,residual,kind`. The
/// `kind` column holds the classification, `failed`, or is empty; a flagged
/// cell gets `;contradiction` appended.
pub fn write_csv<W: Write>(cells: &[RegionCell], mut w: W) -> Result<()> {
    writeln!(w, "tau,c,region,c_star,c_starstar,residual,kind")?;
    for cell in cells {
        let ev = &cell.evidence;
        let residual = ev.residual.map(|r| format!("{r:.16e}")).unwrap_or_default();
        let mut kind = match (&ev.solver_outcome, ev.classification_kind) {
            (_, Some(k)) => format!("{k:?}"),
            (SolverOutcome::Failed { .. }, None) => "failed".to_string(),
            _ => String::new(),
        };
        if cell.contradiction.is_some() {
            kind.push_str(";contradiction");
        }
        writeln!(
            w,
            "{:.16e},{:.16e},{},{},{},{},{}",
            cell.tau,
            cell.c,
            cell.region.name(),
            speed_field(ev.c_star),
            speed_field(ev.c_starstar),
            residual,
            kind
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_range("0:2:0.01").unwrap().len(), 201);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn analytic_labels() {
        let cell = |tau: f64, c: f64| {
            analytic_region(c, c_star(tau).unwrap(), c_starstar(tau).unwrap())
        };
        assert_eq!(cell(0.2, 3.0), Region::Monotone);
        assert_eq!(cell(0.8, 2.5), Region::NonMonotoneCandidate);
        assert_eq!(cell(1.9, 2.0), Region::NoFront);
        assert_eq!(cell(0.2, 1.9), Region::SubMinimal);
    }

    #[test]
    fn rows_are_ordered_without_evidence() {
        let taus = parse_range("0:2:0.1").unwrap();
        let cs = parse_range("1.5:6:0.25").unwrap();
        let budget = Budget {
            evidence: EvidenceMode::None,
            ..Budget::default()
        };
        let cells = sweep_plane(&taus, &cs, &budget).unwrap();
        assert_eq!(cells.len(), taus.len() * cs.len());
        assert!(labels_are_ordered(&cells));
        assert!(cells.iter().all(|c| (c.region == Region::SubMinimal) == (c.c < 2.0)));
        let mut buf = Vec::new();
        write_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau,c,region,c_star,c_starstar,residual,kind\n"));
        assert_eq!(text.lines().count(), cells.len() + 1);
    }
}
