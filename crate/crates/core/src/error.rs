use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin quantum number {0} is not a positive half-integer")]
    InvalidSpin(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level index {index} out of range for dimension {dim}")]
    LevelOutOfRange { index: usize, dim: usize },

    #[error("transition requires two distinct levels, got ({0}, {0})")]
    SameLevel(usize),

    #[error("transition ({j}, {k}) is not drive-allowed: |<j|V|k>| = {element:e}")]
    ForbiddenTransition { j: usize, k: usize, element: f64 },

    #[error("rotation axis must lie in the equatorial plane (n_z = {0})")]
    AxisNotEquatorial(f64),

    #[error("pulse segments overlap at t = {0}")]
    OverlappingSegments(f64),

    #[error("unknown gate '{0}'")]
    UnknownGate(String),

    #[error("unknown method '{0}'")]
    UnknownMethod(String),

    #[error("target operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("expected {expected} final states, got {got}")]
    CardinalityMismatch { expected: usize, got: usize },

    #[error("time step {dt:e} violates the substep rule (max {max:e})")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("duration {t:e} is shorter than the minimum {t_min:e} allowed by the amplitude bound")]
    BelowMinimumDuration { t: f64, t_min: f64 },

    #[error("all {0} optimization restarts produced non-finite merit values")]
    AllRestartsDiverged(usize),

    #[error("no records for the requested curve")]
    EmptyCurve,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
