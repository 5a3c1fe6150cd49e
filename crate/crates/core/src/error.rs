use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("query at {point} outside sampled window [{lo}, {hi}]")]
    OutsideWindow { point: f64, lo: f64, hi: f64 },

    #[error(
        "expected particle count {expected:.3e} exceeds cap {cap:.3e}; \
         increase eps or shrink the window"
    )]
    CountCap { expected: f64, cap: f64 },

    #[error("window budget exceeded: {0}")]
    WindowBudget(String),

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("need at least {need} samples, got {got}")]
    NotEnoughSamples { need: usize, got: usize },

    #[error("unknown particle id {0}")]
    UnknownParticle(u64),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
