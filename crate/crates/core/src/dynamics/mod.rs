//! Closed and open system dynamics, the analytic ideal evolution, and state
//! IO.

pub mod analytic;
pub mod collapse;
pub mod evolve;
pub mod integrator;
pub mod io;
pub mod sector;

pub use analytic::{analytic_evolution, AnalyticIdealState};
pub use collapse::{CollapseOperator, CollapseSet};
pub use evolve::{
    evolve_master, evolve_schrodinger, frequency_scale, lindblad_rhs, mean_excitations, Checkpoint, KetEvolution,
    KetSample, LindbladGenerator, MasterEvolution, NORM_DRIFT_WARN, TRACE_ABORT,
};
pub use integrator::{IntegratorConfig, Method, DEFAULT_STEPS_PER_PERIOD, MIN_STEPS_PER_PERIOD};
pub use io::{read_snapshot, write_snapshot, write_trajectory};
pub use sector::{excitation_sector, excitation_shift, max_excitation, reduce_to_sector, SectorProblem};
