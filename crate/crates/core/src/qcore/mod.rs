//! Dense complex linear algebra over small multi-register systems.
//!
//! All values are immutable; every operation returns a new value.

pub mod constructions;
mod layout;
mod operator;
mod state;

pub use constructions::*;
pub use layout::{Layout, Register, DEFAULT_MAX_DIMENSION};
pub use operator::{Eigenspace, Operator};
pub use state::{project, tensor_operators, tensor_states, State};
pub(crate) use state::BoundOp;

/// Tolerance for structural checks (unitary, hermitian, projector).
pub const TOL_STRUCTURE: f64 = 1e-10;

/// Tolerance for norm checks on physical states.
pub const TOL_NORM: f64 = 1e-12;
