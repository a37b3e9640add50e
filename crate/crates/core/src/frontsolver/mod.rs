//! Wave profiles as fixed points of integral operators.
//!
//! Monotone fronts come from iterating `B` (or `B₂` at `c = 2`) upward from
//! a lower function; semi-wavefronts solve `φ = A_m φ` for the clamped
//! operator by Newton's method with GMRES inner solves.

pub mod linalg;
mod monotone;
mod operators;
pub mod quadrature;
mod semi;
mod tails;

use serde::{Deserialize, Serialize};

use crate::domain::{GridOptions, GridProfile};
use crate::mapbounds::MapBounds;

pub use monotone::{monotone_front, monotone_front_with};
pub use operators::{
    apply_Am, apply_B, apply_B2, check_cone, g_clamp, log_residual, lower_solution, lower_value,
    ode_residual, r_nonlinearity, sup_norm, upper_solution, OperatorConfig, UpperSolution,
};
pub use semi::{semi_wavefront, semi_wavefront_with, uniqueness_probe, Seed};
pub use tails::{tail_asymptotics, TailReport, TailSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Monotone,
    Semi,
}

/// Tolerances and grid controls shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when the sup-norm fixed-point defect falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial Newton step fraction (semi-wavefronts).
    pub damping: f64,
    /// Clamp level override for `A_m`.
    pub beta: Option<f64>,
    pub grid: GridOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            damping: 1.0,
            beta: None,
            grid: GridOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontReport {
    pub mode: Mode,
    /// Final sup-norm fixed-point defect (`‖Bφ - φ‖` or `‖A_mφ - φ‖`).
    pub residual: f64,
    /// Sup norm of the delayed profile-equation residual.
    pub ode_residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Shift applied to put the upward crossing of 1/2 at `t = 0`.
    pub normalized_shift: f64,
    pub beta_used: Option<f64>,
    pub clamp_active: bool,
    pub bounds_box: Option<MapBounds>,
    pub tail_reports: Vec<TailReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSolution {
    pub profile: GridProfile,
    pub report: FrontReport,
}
