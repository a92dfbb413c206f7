use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A subsystem label was not found in the layout.
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    /// Two subsystems share a label.
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    /// Matrix or vector shapes do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Operands live on different Hilbert layouts.
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    /// An argument is outside its allowed domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Register detunings do not all share one sign, so a common Stark shift
    /// cannot be matched.
    #[error("detunings must all have the same sign")]
    MixedSignDetunings,

    /// A detuning of exactly zero leaves the dispersive regime undefined.
    #[error("detuning {index} is zero")]
    ZeroDetuning { index: usize },

    /// Device parameters violate the matching conditions.
    #[error("unmatched parameters: {0}")]
    Unmatched(String),

    /// Crosstalk coupling matrix is not symmetric.
    #[error("crosstalk coupling g[{k}][{l}] = {gkl} differs from g[{l}][{k}] = {glk}")]
    CrosstalkAsymmetry { k: usize, l: usize, gkl: f64, glk: f64 },

    /// Requested step exceeds the limit set by the fastest phase frequency.
    #[error("max step {requested:e} s exceeds the limit {limit:e} s set by the fastest phase frequency")]
    StepTooLarge { requested: f64, limit: f64 },

    /// Adaptive integration shrank below the step floor.
    #[error("step-size floor {floor:e} s reached at t = {time:e} s without meeting tolerance")]
    StepSizeFloor { floor: f64, time: f64 },

    /// Density-matrix trace left the allowed band.
    #[error("trace drift {drift:e} at t = {time:e} s exceeds {limit:e}")]
    TraceDrift { drift: f64, time: f64, limit: f64 },

    /// Malformed configuration text.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// Malformed binary snapshot.
    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
