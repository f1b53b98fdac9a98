//! Minimum-energy and Gramian-like steering of control-affine systems
//!
//! ```text
//! x'(t) = N_t(x) + B_t(x) u(t),   x(t0) = x0
//! ```
//!
//! The crate builds three trajectory-dependent Gramians from adjoint rows of
//! the flow-conjugate endpoint operator and computes steering controls as
//! fixed points of two synthesis maps by Picard iteration:
//!
//! * the Gramian-like map `S(u) = L_u^* N(u)^{-1} y`, and
//! * the Lagrange multiplier map `Z(u) = DF(u)^* G(u)^{-1} y`, whose fixed
//!   point is the minimum-energy control and carries the energy identity
//!   `|u|^2 = z^T M(u) z`.
//!
//! Everything is discretized on one uniform [`TimeGrid`]: fixed-step RK4 for
//! flows and variational equations, composite Simpson for every time
//! integral. The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod certify;
pub mod error;
pub mod flow;
pub mod gramian;
pub mod linalg;
pub mod ode;
pub mod signal;
pub mod synthesis;
pub mod system;

pub use error::{Result, SteerError};
pub use ode::{GridFunction, TimeGrid};
pub use signal::{ControlSignal, Trajectory};
pub use system::{Anchor, SystemModel, TransferProblem};

pub use nalgebra::{DMatrix, DVector};
