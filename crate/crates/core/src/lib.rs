//! Simulation of quantum time evolution as a chain of time moments.
//!
//! Each moment carries a pre-selected ket at its past boundary and a
//! post-selected bra at its future boundary; time evolution is the pattern of
//! correlations (links) between consecutive moments. The crate provides:
//!
//! - [`qcore`]: dense states and operators over named registers,
//! - [`history`]: links, history chains, contraction and ABL statistics,
//! - [`meter`]: von Neumann pointers, two-time difference meters and partial
//!   measurements,
//! - [`protocol`]: N spins with Bell post-selection standing in for one spin
//!   at N times,
//! - [`scenario`]: a line-oriented experiment language, built-in experiments
//!   and report formats.
//!
//! ```
//! use moments_core::history::{conditional_outcome_distribution, HistoryChain};
//! use moments_core::qcore::{pauli, spin_up, Axis};
//!
//! // |up z> evolves trivially for two steps and is post-selected in |up x>;
//! // sigma_z is measured at moment 1.
//! let chain = HistoryChain::trivial(spin_up(Axis::Z), 2, Some(spin_up(Axis::X)))?;
//! let stats = conditional_outcome_distribution(&chain, &[(1, pauli(Axis::Z))])?;
//! assert!((stats.probability(&[1.0]) - 1.0).abs() < 1e-12);
//! # Ok::<(), moments_core::Error>(())
//! ```

pub mod error;
pub mod history;
pub mod meter;
pub mod protocol;
pub mod qcore;
pub mod random;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use stats::{Mode, OutcomeStats, Value};
