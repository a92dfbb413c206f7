//! Composite Hilbert spaces of qutrits and truncated cavity modes.

pub mod layout;
pub mod local;
pub mod sparse;
pub mod state;

pub use layout::{HilbertLayout, Subsystem, SubsystemKind, COUPLER_LABEL};
pub use sparse::{embed, mat_commutator_norm, SparseOperator};
pub use state::{apply, partial_trace, DensityDiagnostics, QuantumState, StateData, StateForm};
