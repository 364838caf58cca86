//! Parity-dependent fractional state transfer on qubit chains.
//!
//! Synthesis of mirror-symmetric XY chains, exact free-fermion evolution,
//! the effective non-local gate and its two-qubit decomposition, parity and
//! correlator measurement protocols, and a transmon device model.

pub mod chain;
pub mod circuit;
pub mod device;
pub mod error;
pub mod fermion;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod protocols;
pub mod scenario;
pub mod state;
pub mod tolerances;

pub use chain::{synthesize, ChainParams, ChainSpec, TimeScale};
pub use error::{FstError, Result};
pub use linalg::{CMatrix, C64};
pub use state::{FockState, OccupationSubset, StateVector};
pub use tolerances::Tolerances;

/// Library version, echoed in every result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
