//! Frequency-dependent per-unit-length series impedance of round solid and
//! tubular conductors.
//!
//! The cross-section is replaced by equivalent surface currents on each
//! conductor contour ([`surfop`]), the contours are coupled through the 2-D
//! log-kernel Green's function ([`greens`]), and the resulting moment system
//! is reduced to a P×P impedance matrix ([`solver`]).  An additive
//! infinite-earth correction, modal velocities and an independent filament
//! oracle sit on top.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod greens;
pub mod io;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod solver;
pub mod specfun;
pub mod surfop;

pub use model::{CableSystem, ConductorSpec, GroundModel, GroundSpec, Medium, ReferencePolicy, Shape};
pub use solver::{Execution, MomSystem, PulResult};
pub use specfun::C64;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 4e-7 * std::f64::consts::PI;
/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m), consistent with MU0 and C0.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
