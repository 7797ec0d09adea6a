use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("period ratio {ratio} at level {level} is not an integer >= 2")]
    BadRatio { level: usize, ratio: u32 },

    #[error("amplitude schedule violates the exponential-class test at level {level}: {detail}")]
    ScheduleViolation { level: usize, detail: String },

    #[error("level {level} out of range (family depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("adaptive integration underflow at x = {x} (step {step:e})")]
    StepUnderflow { x: f64, step: f64 },

    #[error("could not refine bracket [{lo}, {hi}] to tolerance")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("band {band} has no bracket for 2cos(pk) = {target}")]
    RootNotBracketed { band: usize, target: f64 },

    #[error("k-grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("plane-wave cutoff too small: {0}")]
    CutoffTooSmall(String),

    #[error("box of length {box_length} is not an integer multiple of period {period}")]
    IncommensurateBox { box_length: f64, period: f64 },

    #[error("grid metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("boundary contamination: edge mass {mass:e} exceeds {threshold:e} at t = {time}")]
    BoundaryContamination { mass: f64, threshold: f64, time: f64 },

    #[error("requested depth {requested} exceeds family depth {depth}")]
    DepthExceeded { requested: usize, depth: usize },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("state is zero")]
    ZeroState,
}

pub type Result<T> = std::result::Result<T, Error>;
