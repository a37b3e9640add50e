//! Numerical laboratory for traveling wavefronts and semi-wavefronts of the
//! delayed KPP-Fisher equation `u_t = u_xx + u(t,x)(1 - u(t-τ,x))`.
//!
//! Wave profiles `u = φ(x + ct)` solve `φ'' - cφ' + φ(t)(1 - φ(t-h)) = 0`
//! with `h = cτ`.

pub mod acceptance;
pub mod charspec;
pub mod domain;
pub mod error;
pub mod frontsolver;
pub mod mapbounds;
pub mod numeric;
pub mod oracle;
pub mod pdesim;
pub mod shape;
pub mod sweep;

pub use domain::{GridProfile, LeftTail, LogProfile, Params, RightTail};
pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
