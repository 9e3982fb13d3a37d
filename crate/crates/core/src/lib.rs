//! Sub-Nyquist compressive acquisition and sparse recovery.
//!
//! The crate simulates three acquisition front ends on a Nyquist-rate grid:
//!
//! * [`sensing`]: discrete compressive measurement `y = Φf` with random
//!   Gaussian or Bernoulli matrices,
//! * [`demodulator`]: the serial random demodulator (chipping, filtering,
//!   decimated sampling) and its equivalent matrix `V`,
//! * [`pscs`]: parallel segmented acquisition where windowed segments are
//!   measured by banks of integrating fingers,
//!
//! and reconstructs sparse coefficient vectors with orthogonal matching
//! pursuit or gradient descent on smooth convex sparsity penalties
//! ([`solvers`]). [`evaluation`] scores recoveries, runs phase-transition
//! sweeps and estimates radio transmit energy savings.

pub mod demodulator;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod pscs;
pub mod rng;
pub mod sensing;
pub mod solvers;

pub use error::{CsError, Result};
pub use model::{Basis, BasisKind, BasisMeta, CoefficientVector, SignalVector, SparsityProfile};
pub use sensing::{AcquisitionRecord, MeasurementKind, MeasurementOperator, Provenance};
pub use solvers::{ReconstructionResult, SolverConfig, SolverKind, StepRule, Termination};
