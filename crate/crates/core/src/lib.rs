//! Variational quantum circuit synthesis.
//!
//! Given a target unitary and a gate library, the search modules grow a
//! parameterised gate sequence whose action matches the target on the full
//! Hilbert space or on a chosen subspace. Candidates are scored by the energy of
//! an artificial Hamiltonian on an augmented (Choi) state, parameters are tuned by
//! imaginary-time evolution with the quantum metric tensor, and redundant gates
//! are pruned in stages.

pub mod circuits;
pub mod cli;
pub mod cost;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod prune;
pub mod search;
pub mod simcore;
pub mod targets;

pub use circuits::{build_library, Axis, Circuit, Gate, GateKind, GateLibrary, Move};
pub use cost::{Mode, SubspaceBasis, SynthesisHamiltonian, SynthesisProblem};
pub use error::{Error, Result};
pub use simcore::{StateVector, C64};
