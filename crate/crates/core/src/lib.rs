//! Simulation of one-step W-state preparation for qubits held in separate
//! cavities that all couple dispersively to a single coupler qubit.
//!
//! The crate covers the full chain: matched device parameters
//! ([`device`]), interaction-picture Hamiltonians ([`hamiltonians`]),
//! closed and Lindblad dynamics ([`dynamics`]), target states and fidelity
//! ([`entanglement`]), and detuning/crosstalk sweeps ([`sweep`]).

pub mod config;
pub mod device;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod protocol;
pub mod sweep;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
