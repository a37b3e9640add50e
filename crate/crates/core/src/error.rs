use thiserror::Error;

/// Errors raised by the wavefront laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("speed c = {c} is below the minimal admissible speed 2")]
    NotAdmissible { c: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample {index} is not strictly positive (value {value})")]
    NonPositive { index: usize, value: f64 },

    #[error("z^2 - cz + 1 has complex roots for c = {c} < 2")]
    ComplexRoots { c: f64 },

    #[error("shift b = {b} must be positive")]
    InvalidShift { b: f64 },

    #[error("no characteristic root located in strip {strip}")]
    SearchFailure { strip: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("tail error: {0}")]
    Tail(String),

    #[error("wrong operator: {0}")]
    WrongOperator(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("cone violation: {0}")]
    Cone(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sign-change count undefined for an identically zero segment")]
    UndefinedSc,

    #[error("window error: {0}")]
    Window(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
